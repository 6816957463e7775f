//! Dense real polynomials of small fixed degree.

pub(crate) const MAX_COEFFS: usize = 7;

/// `c[0] + c[1] x + ... + c[6] x^6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Poly(pub [f64; MAX_COEFFS]);

impl Poly {
    pub(crate) const ZERO: Poly = Poly([0.0; MAX_COEFFS]);

    pub(crate) fn new(coeffs: &[f64]) -> Self {
        let mut c = [0.0; MAX_COEFFS];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Poly(c)
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub(crate) fn derivative(&self) -> Poly {
        let mut c = [0.0; MAX_COEFFS];
        for i in 1..MAX_COEFFS {
            c[i - 1] = self.0[i] * i as f64;
        }
        Poly(c)
    }

    /// Value of the `order`-th derivative at `x`.
    pub(crate) fn eval_derivative(&self, x: f64, order: u32) -> f64 {
        let mut p = *self;
        for _ in 0..order {
            p = p.derivative();
        }
        p.eval(x)
    }

    pub(crate) fn scale(&self, s: f64) -> Poly {
        Poly(self.0.map(|c| c * s))
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(other.0) {
            *a -= b;
        }
        Poly(c)
    }

    /// Product; panics if the degree would exceed the fixed capacity.
    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        let mut c = [0.0; MAX_COEFFS];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                assert!(i + j < MAX_COEFFS, "polynomial degree overflow");
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }
}
