//! The four immersed-boundary kernels: closed-form evaluation, weight
//! stencils and derivatives.
//!
//! Every kernel is even and compactly supported, `phi(r) = 0` for
//! `|r| >= r_s`. The two 6-point kernels share one closed form that is
//! parametrized by the second-moment constant `K`: `K = 0` gives the
//! standard 6-point kernel and `K = 59/60 - sqrt(29)/20` gives the C3
//! kernel. On `r in [0, 1]` the six values `phi(r-3), ..., phi(r+2)` are
//! obtained from a quadratic for `phi(r-3)` plus five linear relations.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Largest stencil over all kernels.
pub const MAX_STENCIL: usize = 6;

/// Leading coefficient of the quadratic for `phi(r-3)`.
pub const NEW6_ALPHA: f64 = 28.0;

/// A discriminant more negative than this is a formula bug, not roundoff.
const DISCRIMINANT_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelId {
    Std3,
    Std4,
    Std6,
    New6,
}

impl KernelId {
    pub const ALL: [KernelId; 4] = [KernelId::Std3, KernelId::Std4, KernelId::Std6, KernelId::New6];

    pub fn name(self) -> &'static str {
        match self {
            KernelId::Std3 => "std3",
            KernelId::Std4 => "std4",
            KernelId::Std6 => "std6",
            KernelId::New6 => "new6",
        }
    }

    pub fn support_radius(self) -> f64 {
        match self {
            KernelId::Std3 => 1.5,
            KernelId::Std4 => 2.0,
            KernelId::Std6 | KernelId::New6 => 3.0,
        }
    }

    pub fn stencil_width(self) -> usize {
        match self {
            KernelId::Std3 => 3,
            KernelId::Std4 => 4,
            KernelId::Std6 | KernelId::New6 => 6,
        }
    }

    /// Smallest periodic grid extent that keeps a stencil from overlapping
    /// itself: `2 * ceil(r_s)`.
    pub fn min_grid_extent(self) -> usize {
        2 * self.support_radius().ceil() as usize
    }

    /// Breakpoints between polynomial pieces, including the support ends.
    pub fn knots(self) -> &'static [f64] {
        match self {
            KernelId::Std3 => &[-1.5, -0.5, 0.5, 1.5],
            KernelId::Std4 => &[-2.0, -1.0, 0.0, 1.0, 2.0],
            KernelId::Std6 | KernelId::New6 => &[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "std3" => Ok(KernelId::Std3),
            "std4" => Ok(KernelId::Std4),
            "std6" => Ok(KernelId::Std6),
            "new6" => Ok(KernelId::New6),
            other => Err(Error::Parse(format!("unknown kernel '{other}' (expected std3, std4, std6 or new6)"))),
        }
    }
}

/// Which postulates a kernel is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub even_odd: bool,
    pub moment0: bool,
    pub moment1: bool,
    pub moment2: bool,
    pub moment3: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub id: KernelId,
    pub support_radius: f64,
    pub stencil_width: usize,
    /// `C` in `sum_j phi(r-j)^2 = C`.
    pub sum_of_squares: f64,
    /// `K` in `sum_j (r-j)^2 phi(r-j) = K`, when that moment is constant.
    pub second_moment: Option<f64>,
    pub satisfies: Conditions,
}

/// `K = 59/60 - sqrt(29)/20`, the only second moment giving a C3 kernel.
pub fn new6_second_moment() -> f64 {
    59.0 / 60.0 - 29f64.sqrt() / 20.0
}

static NEW6_SUM_OF_SQUARES: LazyLock<f64> = LazyLock::new(|| {
    NEW6.branch(0.0)
        .expect("r = 0 branch is exact")
        .w
        .iter()
        .map(|w| w * w)
        .sum()
});

pub fn kernel_spec(id: KernelId) -> KernelSpec {
    let (sum_of_squares, second_moment, satisfies) = match id {
        KernelId::Std3 => (
            0.5,
            None,
            Conditions { even_odd: false, moment0: true, moment1: true, moment2: false, moment3: false },
        ),
        KernelId::Std4 => (
            3.0 / 8.0,
            None,
            Conditions { even_odd: true, moment0: true, moment1: true, moment2: false, moment3: false },
        ),
        KernelId::Std6 => (
            67.0 / 128.0,
            Some(0.0),
            Conditions { even_odd: true, moment0: true, moment1: true, moment2: true, moment3: true },
        ),
        KernelId::New6 => (
            *NEW6_SUM_OF_SQUARES,
            Some(new6_second_moment()),
            Conditions { even_odd: true, moment0: true, moment1: true, moment2: true, moment3: true },
        ),
    };
    KernelSpec {
        id,
        support_radius: id.support_radius(),
        stencil_width: id.stencil_width(),
        sum_of_squares,
        second_moment,
        satisfies,
    }
}

/// The six values of a 6-point kernel at `r in [0, 1]`, together with the
/// quadratic they were solved from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch6Weights {
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `phi(r-3), phi(r-2), phi(r-1), phi(r), phi(r+1), phi(r+2)`.
    pub w: [f64; 6],
}

/// Coefficients of the 6-point closed form for one value of `K`.
struct SixPoint {
    k: f64,
    root_sign: f64,
    beta: Poly,
    gamma: Poly,
    /// `beta^2 - 4 alpha gamma`, degree 6.
    disc: Poly,
    /// `phi(r - 3 + m) = slope[m] * phi(r-3) + offset[m](r)`.
    slope: [f64; 6],
    offset: [Poly; 6],
}

static NEW6: LazyLock<SixPoint> = LazyLock::new(|| SixPoint::new(new6_second_moment()));
static STD6: LazyLock<SixPoint> = LazyLock::new(|| SixPoint::new(0.0));

impl SixPoint {
    fn new(k: f64) -> Self {
        let a = 3.0 * k - 1.0;
        let c = 4.0 - 3.0 * k;
        let beta = Poly::new(&[9.0 / 4.0 - 1.5 * k, 22.0 / 3.0 - 7.0 * k, -1.5, -7.0 / 3.0]);
        let gamma = Poly::new(&[
            0.0,
            0.0,
            -11.0 / 32.0 + 6.0 * k / 32.0 + a * a / 72.0 + c * c / 18.0,
            0.0,
            3.0 / 32.0 + a / 36.0 - c / 9.0,
            0.0,
            5.0 / 72.0,
        ]);
        let disc = beta.mul(&beta).sub(&gamma.scale(4.0 * NEW6_ALPHA));
        let outer = Poly::new(&[-1.0 / 16.0 + k / 8.0, a / 12.0, 1.0 / 8.0, 1.0 / 12.0]);
        let outer_mirror = Poly::new(&[-1.0 / 16.0 + k / 8.0, -a / 12.0, 1.0 / 8.0, -1.0 / 12.0]);
        let inner = Poly::new(&[0.25, c / 6.0, 0.0, -1.0 / 6.0]);
        let inner_mirror = Poly::new(&[0.25, -c / 6.0, 0.0, 1.0 / 6.0]);
        let center = Poly::new(&[5.0 / 8.0 - k / 4.0, 0.0, -0.25]);
        SixPoint {
            k,
            root_sign: (1.5 - k).signum(),
            beta,
            gamma,
            disc,
            slope: [1.0, -3.0, 2.0, 2.0, -3.0, 1.0],
            offset: [Poly::ZERO, outer, inner, center, inner_mirror, outer_mirror],
        }
    }

    fn branch(&self, r: f64) -> Result<Branch6Weights> {
        let beta = self.beta.eval(r);
        let gamma = self.gamma.eval(r);
        let mut disc = beta * beta - 4.0 * NEW6_ALPHA * gamma;
        if disc < DISCRIMINANT_FLOOR {
            return Err(Error::Inconsistency(format!(
                "6-point discriminant {disc:e} < 0 at r = {r} (K = {})",
                self.k
            )));
        }
        disc = disc.max(0.0);
        let w0 = (-beta + self.root_sign * disc.sqrt()) / (2.0 * NEW6_ALPHA);
        let mut w = [0.0; 6];
        for (m, out) in w.iter_mut().enumerate() {
            *out = self.slope[m] * w0 + self.offset[m].eval(r);
        }
        Ok(Branch6Weights { r, alpha: NEW6_ALPHA, beta, gamma, w })
    }

    /// Derivatives of `phi(r-3)` of orders 1 through 3 at `r`.
    fn root_derivatives(&self, r: f64) -> Result<[f64; 3]> {
        let d = [0, 1, 2, 3].map(|n| self.disc.eval_derivative(r, n));
        if d[0] <= 1e-12 {
            // Never reached on [0, 1] for either K; the discriminant is
            // bounded well away from zero there.
            return Err(Error::Inconsistency(format!("double root of the 6-point quadratic at r = {r}")));
        }
        // s = sqrt(D): 2 s s' = D', 2 s'^2 + 2 s s'' = D'', 6 s' s'' + 2 s s''' = D'''
        let s = d[0].sqrt();
        let s1 = d[1] / (2.0 * s);
        let s2 = (0.5 * d[2] - s1 * s1) / s;
        let s3 = (0.5 * d[3] - 3.0 * s1 * s2) / s;
        let mut out = [0.0; 3];
        for (n, (o, sn)) in out.iter_mut().zip([s1, s2, s3]).enumerate() {
            *o = (-self.beta.eval_derivative(r, n as u32 + 1) + self.root_sign * sn) / (2.0 * NEW6_ALPHA);
        }
        Ok(out)
    }

    /// `order`-th derivative of `phi(r - 3 + m)` with respect to `r`.
    fn weight_derivative(&self, m: usize, r: f64, order: u32) -> Result<f64> {
        if order == 0 {
            return Ok(self.branch(r)?.w[m]);
        }
        let root = self.root_derivatives(r)?[order as usize - 1];
        Ok(self.slope[m] * root + self.offset[m].eval_derivative(r, order))
    }

    /// Locates `s >= 0` as `phi(r - 3 + m)`.
    fn locate(s: f64) -> Option<(usize, f64)> {
        if s >= 3.0 {
            return None;
        }
        let n = s.floor();
        Some((3 + n as usize, s - n))
    }

    fn phi(&self, s: f64) -> Result<f64> {
        match Self::locate(s.abs()) {
            Some((m, r)) => Ok(self.branch(r)?.w[m]),
            None => Ok(0.0),
        }
    }

    fn derivative(&self, s: f64, order: u32) -> Result<f64> {
        let sign = if s < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
        match Self::locate(s.abs()) {
            Some((m, r)) => Ok(sign * self.weight_derivative(m, r, order)?),
            None => Ok(0.0),
        }
    }

    fn stencil(&self, x: f64) -> Result<WeightStencil> {
        let floor = x.floor();
        let b = self.branch(x - floor)?;
        let mut weights = [0.0; MAX_STENCIL];
        // offsets floor-2 .. floor+3 carry phi(r+2) .. phi(r-3)
        for (dst, src) in weights.iter_mut().zip(b.w.iter().rev()) {
            *dst = *src;
        }
        Ok(WeightStencil { start: floor as i64 - 2, len: 6, weights })
    }
}

fn std3_phi(s: f64) -> f64 {
    let s = s.abs();
    if s < 0.5 {
        (1.0 + (1.0 - 3.0 * s * s).sqrt()) / 3.0
    } else if s < 1.5 {
        let t = 1.0 - s;
        (5.0 - 3.0 * s - (1.0 - 3.0 * t * t).max(0.0).sqrt()) / 6.0
    } else {
        0.0
    }
}

fn std3_slope(s: f64) -> f64 {
    let a = s.abs();
    let d = if a < 0.5 {
        -a / (1.0 - 3.0 * a * a).sqrt()
    } else if a < 1.5 {
        let t = 1.0 - a;
        (-3.0 - 3.0 * t / (1.0 - 3.0 * t * t).sqrt()) / 6.0
    } else {
        0.0
    };
    if s < 0.0 {
        -d
    } else {
        d
    }
}

fn std4_phi(s: f64) -> f64 {
    let s = s.abs();
    if s < 1.0 {
        (3.0 - 2.0 * s + (1.0 + 4.0 * s - 4.0 * s * s).sqrt()) / 8.0
    } else if s < 2.0 {
        (5.0 - 2.0 * s - (-7.0 + 12.0 * s - 4.0 * s * s).max(0.0).sqrt()) / 8.0
    } else {
        0.0
    }
}

fn std4_slope(s: f64) -> f64 {
    let a = s.abs();
    let d = if a < 1.0 {
        (-2.0 + (2.0 - 4.0 * a) / (1.0 + 4.0 * a - 4.0 * a * a).sqrt()) / 8.0
    } else if a < 2.0 {
        (-2.0 - (6.0 - 4.0 * a) / (-7.0 + 12.0 * a - 4.0 * a * a).sqrt()) / 8.0
    } else {
        0.0
    };
    if s < 0.0 {
        -d
    } else {
        d
    }
}

fn check_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {v}")))
    }
}

/// Closed-form six values of the C3 kernel at `r in [0, 1]`.
pub fn new6_branch(r: f64) -> Result<Branch6Weights> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("branch parameter r = {r} outside [0, 1]")));
    }
    NEW6.branch(r)
}

/// Evaluates `phi(r)` for kernel `id`.
pub fn phi(id: KernelId, r: f64) -> Result<f64> {
    check_finite("r", r)?;
    match id {
        KernelId::Std3 => Ok(std3_phi(r)),
        KernelId::Std4 => Ok(std4_phi(r)),
        KernelId::Std6 => STD6.phi(r),
        KernelId::New6 => NEW6.phi(r),
    }
}

/// Analytic derivative of order 1 to 3. The standard kernels are only C1,
/// so they accept `order = 1` only.
pub fn phi_derivative(id: KernelId, r: f64, order: u32) -> Result<f64> {
    check_finite("r", r)?;
    if !(1..=3).contains(&order) {
        return Err(Error::Domain(format!("derivative order {order} outside 1..=3")));
    }
    if order > 1 && id != KernelId::New6 {
        return Err(Error::UnsupportedSmoothness { kernel: id, order });
    }
    match id {
        KernelId::Std3 => Ok(std3_slope(r)),
        KernelId::Std4 => Ok(std4_slope(r)),
        KernelId::Std6 => STD6.derivative(r, order),
        KernelId::New6 => NEW6.derivative(r, order),
    }
}

/// Weights `phi(x - j)` for consecutive grid indices `j = start, start+1, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightStencil {
    /// Grid index of the first weight.
    pub start: i64,
    len: usize,
    weights: [f64; MAX_STENCIL],
}

impl WeightStencil {
    pub fn weights(&self) -> &[f64] {
        &self.weights[..self.len]
    }

    /// Leftmost offset relative to `floor(x)`.
    pub fn base_offset(&self, x: f64) -> i64 {
        self.start - x.floor() as i64
    }

    /// `(grid index, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights().iter().enumerate().map(move |(i, &w)| (self.start + i as i64, w))
    }
}

/// The stencil of kernel `id` around the real grid coordinate `x`.
///
/// The 6-point kernels use the closed form at `r = x - floor(x)` once for
/// all six weights; the others evaluate point by point.
pub fn weights(id: KernelId, x: f64) -> Result<WeightStencil> {
    check_finite("x", x)?;
    let pointwise = |start: i64, len: usize, f: fn(f64) -> f64| {
        let mut weights = [0.0; MAX_STENCIL];
        for (i, w) in weights.iter_mut().take(len).enumerate() {
            *w = f(x - (start + i as i64) as f64);
        }
        WeightStencil { start, len, weights }
    };
    match id {
        KernelId::Std3 => Ok(pointwise((x + 0.5).floor() as i64 - 1, 3, std3_phi)),
        KernelId::Std4 => Ok(pointwise(x.floor() as i64 - 1, 4, std4_phi)),
        KernelId::Std6 => STD6.stencil(x),
        KernelId::New6 => NEW6.stencil(x),
    }
}

/// The Gaussian whose variance equals the C3 kernel's second moment `K`.
pub fn gaussian_match(r: f64) -> f64 {
    let k = new6_second_moment();
    (-r * r / (2.0 * k)).exp() / (2.0 * std::f64::consts::PI * k).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: f64 = 0.714_075_092_976_608_1;

    /// The closed form written out term by term, without the polynomial
    /// expansion.
    fn unexpanded_formula(k: f64, r: f64) -> [f64; 6] {
        let alpha = 28.0;
        let beta = 9.0 / 4.0 - 1.5 * (k + r * r) + (22.0 / 3.0 - 7.0 * k) * r - 7.0 / 3.0 * r.powi(3);
        let gamma = -11.0 / 32.0 * r * r
            + 3.0 / 32.0 * (2.0 * k + r * r) * r * r
            + ((3.0 * k - 1.0) * r + r.powi(3)).powi(2) / 72.0
            + ((4.0 - 3.0 * k) * r - r.powi(3)).powi(2) / 18.0;
        let w0 = (-beta + (1.5 - k).signum() * (beta * beta - 4.0 * alpha * gamma).max(0.0).sqrt()) / (2.0 * alpha);
        [
            w0,
            -3.0 * w0 - 1.0 / 16.0 + (k + r * r) / 8.0 + (3.0 * k - 1.0) * r / 12.0 + r.powi(3) / 12.0,
            2.0 * w0 + 0.25 + (4.0 - 3.0 * k) * r / 6.0 - r.powi(3) / 6.0,
            2.0 * w0 + 5.0 / 8.0 - (k + r * r) / 4.0,
            -3.0 * w0 + 0.25 - (4.0 - 3.0 * k) * r / 6.0 + r.powi(3) / 6.0,
            w0 - 1.0 / 16.0 + (k + r * r) / 8.0 - (3.0 * k - 1.0) * r / 12.0 - r.powi(3) / 12.0,
        ]
    }

    #[test]
    fn expanded_polynomials_match_unexpanded_formula() {
        for k in [0.0, new6_second_moment()] {
            let family = SixPoint::new(k);
            for i in 0..=200 {
                let r = i as f64 / 200.0;
                let b = family.branch(r).unwrap();
                let p = unexpanded_formula(k, r);
                for m in 0..6 {
                    assert!((b.w[m] - p[m]).abs() < 1e-14, "K={k} r={r} m={m}: {} vs {}", b.w[m], p[m]);
                }
            }
        }
    }

    #[test]
    fn second_moment_constant() {
        assert!((new6_second_moment() - K).abs() < 1e-15);
        assert_eq!(kernel_spec(KernelId::New6).second_moment, Some(new6_second_moment()));
    }

    #[test]
    fn spec_table() {
        let s4 = kernel_spec(KernelId::Std4);
        assert_eq!((s4.sum_of_squares, s4.support_radius, s4.second_moment), (0.375, 2.0, None));
        assert_eq!(kernel_spec(KernelId::Std3).sum_of_squares, 0.5);
        assert_eq!(kernel_spec(KernelId::Std6).sum_of_squares, 67.0 / 128.0);
        // 50-digit oracle: 0.32577761539018641233
        assert!((kernel_spec(KernelId::New6).sum_of_squares - 0.325_777_615_390_186_4).abs() < 1e-15);
        let widths: Vec<_> = KernelId::ALL.iter().map(|k| k.stencil_width()).collect();
        assert_eq!(widths, [3, 4, 6, 6]);
        assert!(!kernel_spec(KernelId::Std3).satisfies.even_odd);
    }

    #[test]
    fn branch_at_zero() {
        let b = new6_branch(0.0).unwrap();
        assert_eq!(b.w[0], 0.0);
        assert_eq!(b.alpha, 28.0);
        // 50-digit oracle values
        let expect = [0.0, 0.026_759_386_622_076_016, 0.25, 0.446_481_226_755_847_97, 0.25, 0.026_759_386_622_076_016];
        for (w, e) in b.w.iter().zip(expect) {
            assert!((w - e).abs() < 1e-15, "{w} vs {e}");
        }
        assert!((b.w[3] - (5.0 / 8.0 - K / 4.0)).abs() < 1e-15);
        let even = b.w[1] + b.w[3] + b.w[5];
        let odd = b.w[0] + b.w[2] + b.w[4];
        assert!((even - 0.5).abs() < 1e-15 && (odd - 0.5).abs() < 1e-15);
    }

    #[test]
    fn branch_seam_continuity() {
        // phi(1 - 3 + m) at r = 1 equals phi(0 - 3 + m + 1) at r = 0
        let one = new6_branch(1.0).unwrap();
        let zero = new6_branch(0.0).unwrap();
        for m in 0..5 {
            assert!((one.w[m] - zero.w[m + 1]).abs() < 1e-13);
        }
        assert!(one.w[5].abs() < 1e-13);
    }

    #[test]
    fn branch_rejects_out_of_range() {
        assert!(matches!(new6_branch(1.5), Err(Error::Domain(_))));
        assert!(matches!(new6_branch(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn discriminant_positive_on_unit_interval() {
        for family in [&*NEW6, &*STD6] {
            let min = (0..=10_000)
                .map(|i| family.disc.eval(i as f64 / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(min > 1.0, "min discriminant {min}");
        }
    }

    #[test]
    fn oracle_values() {
        // Solved from the postulate systems in 50-digit arithmetic
        // (tests/oracle/kernel_oracle.py).
        let table: &[(KernelId, f64, f64)] = &[
            (KernelId::New6, 0.37, 0.413_794_391_497_504_86),
            (KernelId::New6, 1.25, 0.174_648_694_040_214_71),
            (KernelId::New6, 2.6, 0.001_020_317_650_558_930_3),
            (KernelId::New6, -1.8, 0.051_224_081_801_343_463),
            (KernelId::Std6, 0.0, 0.625),
            (KernelId::Std6, 0.37, 0.557_407_239_107_699_3),
            (KernelId::Std6, 1.25, 0.113_083_384_316_618_7),
            (KernelId::Std6, 2.6, -0.018_748_998_404_938_407),
            (KernelId::Std6, -1.8, -0.054_643_900_527_296_53),
            (KernelId::Std4, 0.0, 0.5),
            (KernelId::Std4, 0.37, 0.456_263_488_685_051_44),
            (KernelId::Std4, 1.25, 0.147_140_543_058_463_09),
            (KernelId::Std4, -1.8, 0.014_921_894_064_178_783),
            (KernelId::Std4, 2.6, 0.0),
            (KernelId::Std3, 0.0, 2.0 / 3.0),
            (KernelId::Std3, 0.37, 0.589_219_592_788_150_05),
            (KernelId::Std3, 1.25, 0.058_102_030_189_000_446),
            (KernelId::Std3, -1.8, 0.0),
        ];
        for &(id, r, want) in table {
            let got = phi(id, r).unwrap();
            assert!((got - want).abs() < 1e-14, "{id} phi({r}) = {got}, oracle {want}");
        }
    }

    #[test]
    fn closed_support() {
        for id in KernelId::ALL {
            let rs = id.support_radius();
            assert_eq!(phi(id, rs).unwrap(), 0.0);
            assert_eq!(phi(id, -rs).unwrap(), 0.0);
            assert_eq!(phi(id, rs + 0.7).unwrap(), 0.0);
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(phi(KernelId::New6, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(weights(KernelId::Std4, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(phi_derivative(KernelId::New6, f64::NAN, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_errors() {
        assert!(matches!(phi_derivative(KernelId::New6, 0.2, 0), Err(Error::Domain(_))));
        assert!(matches!(phi_derivative(KernelId::New6, 0.2, 4), Err(Error::Domain(_))));
        assert!(matches!(
            phi_derivative(KernelId::Std4, 0.2, 2),
            Err(Error::UnsupportedSmoothness { kernel: KernelId::Std4, order: 2 })
        ));
        for id in KernelId::ALL {
            assert!(phi_derivative(id, 0.2, 1).is_ok());
        }
    }

    #[test]
    fn new6_derivatives_vanish_at_support_end() {
        for order in 1..=3 {
            for r in [3.0, -3.0] {
                assert_eq!(phi_derivative(KernelId::New6, r, order).unwrap(), 0.0);
            }
            // one-sided limit from inside the support
            let inside = phi_derivative(KernelId::New6, 3.0 - 1e-9, order).unwrap();
            assert!(inside.abs() < 1e-7, "order {order}: {inside}");
        }
        assert!(phi_derivative(KernelId::New6, 0.0, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn new6_derivative_oracle() {
        // High-precision finite differences of the postulate solution.
        let d1 = phi_derivative(KernelId::New6, 0.37, 1).unwrap();
        let d2 = phi_derivative(KernelId::New6, 0.37, 2).unwrap();
        let d3 = phi_derivative(KernelId::New6, 0.37, 3).unwrap();
        assert!((d1 + 0.169_900_019_100_249_25).abs() < 1e-12, "{d1}");
        assert!((d2 + 0.394_456_407_180_088_8).abs() < 1e-10, "{d2}");
        assert!((d3 - 0.435_299_717_774_982_7).abs() < 1e-8, "{d3}");
    }

    #[test]
    fn new6_second_derivative_matches_central_fd() {
        let f = |x: f64| phi(KernelId::New6, x).unwrap();
        let (x, e) = (0.37, 1e-4);
        let fd = (-f(x + 2.0 * e) + 16.0 * f(x + e) - 30.0 * f(x) + 16.0 * f(x - e) - f(x - 2.0 * e)) / (12.0 * e * e);
        let an = phi_derivative(KernelId::New6, x, 2).unwrap();
        assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
    }

    #[test]
    fn standard_slopes_match_fd() {
        for id in KernelId::ALL {
            for &x in &[-2.4, -1.3, -0.7, -0.2, 0.15, 0.45, 0.8, 1.1, 1.45, 1.9, 2.7] {
                let e = 1e-6;
                let fd = (phi(id, x + e).unwrap() - phi(id, x - e).unwrap()) / (2.0 * e);
                let an = phi_derivative(id, x, 1).unwrap();
                assert!((fd - an).abs() < 1e-7, "{id} x={x}: fd {fd} analytic {an}");
            }
        }
    }

    #[test]
    fn stencil_at_integer() {
        let s = weights(KernelId::New6, 17.0).unwrap();
        assert_eq!(s.start, 15);
        assert_eq!(s.base_offset(17.0), -2);
        let b = new6_branch(0.0).unwrap();
        let expect = [b.w[5], b.w[4], b.w[3], b.w[2], b.w[1], b.w[0]];
        assert_eq!(s.weights(), &expect);
        assert_eq!(s.iter().nth(2), Some((17, b.w[3])));
    }

    #[test]
    fn std4_stencil_symmetric_about_half() {
        let s = weights(KernelId::Std4, 0.5).unwrap();
        let w = s.weights();
        assert_eq!(s.start, -1);
        assert!((w[0] - w[3]).abs() < 1e-15 && (w[1] - w[2]).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn std3_stencil_centered_on_nearest_node() {
        let s = weights(KernelId::Std3, 4.7).unwrap();
        assert_eq!(s.start, 4);
        assert_eq!(s.weights().len(), 3);
        let s = weights(KernelId::Std3, 4.2).unwrap();
        assert_eq!(s.start, 3);
    }

    #[test]
    fn gaussian() {
        // 1 / sqrt(2 pi K), 50-digit oracle
        assert!((gaussian_match(0.0) - 0.472_104_481_757_939_8).abs() < 1e-15);
        assert_eq!(gaussian_match(1.3), gaussian_match(-1.3));
        assert!(gaussian_match(60.0) < 1e-300);
    }

    #[test]
    fn parse_names() {
        assert_eq!("NEW6".parse::<KernelId>().unwrap(), KernelId::New6);
        assert!("std5".parse::<KernelId>().is_err());
        for id in KernelId::ALL {
            assert_eq!(id.to_string().parse::<KernelId>().unwrap(), id);
        }
    }
}
