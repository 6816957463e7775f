//! Numerical verification of kernel postulates.
//!
//! Every identity is checked over a deterministic sweep of `r in [0, 1)`
//! plus the seam points `0` and `1 - ulp`. Smoothness is probed with
//! one-sided finite differences kept inside a single polynomial piece.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_spec, phi, weights, KernelId, KernelSpec};

/// Extra nodes beyond the minimum in each one-sided stencil; the
/// truncation error of an estimate is `O(eps^FD_ACCURACY)`.
const FD_ACCURACY: usize = 6;

/// Jump threshold relative to `max(1, |derivative|)` at the finest eps.
pub const SMOOTHNESS_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub samples: usize,
    pub tolerance: f64,
    /// Strictly decreasing step sizes for the smoothness probes.
    pub fd_epsilons: Vec<f64>,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            samples: 10_000,
            tolerance: 1e-12,
            fd_epsilons: vec![0.04, 0.02, 0.01, 0.005],
            seed: 20_150_622,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.fd_epsilons.is_empty() {
            return Err(Error::Config("fd_epsilons must not be empty".into()));
        }
        if self.fd_epsilons.iter().any(|&e| e.is_nan() || e <= 0.0) {
            return Err(Error::Config("fd_epsilons must be positive".into()));
        }
        if self.fd_epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("fd_epsilons must be strictly decreasing".into()));
        }
        // every stencil must stay inside one piece; pieces are >= 1 wide
        let span = self.fd_epsilons[0] * (3 + FD_ACCURACY - 1) as f64;
        if span > 0.5 {
            return Err(Error::Config(format!("largest eps spans {span} > 0.5 and would cross a knot")));
        }
        Ok(())
    }

    /// The `r` values every identity is checked at.
    pub fn sample_points(&self) -> Vec<f64> {
        // golden-ratio sequence with a seed-dependent starting phase
        const GOLDEN: f64 = 0.618_033_988_749_894_9;
        let phase = (self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64;
        let mut pts: Vec<f64> = (0..self.samples).map(|i| (phase + i as f64 * GOLDEN).fract()).collect();
        pts.push(0.0);
        pts.push(1.0 - f64::EPSILON / 2.0);
        pts
    }
}

/// `sum_j (r-j)^m phi(r-j)`.
pub fn moment(id: KernelId, m: u32, r: f64) -> Result<f64> {
    if m > 3 {
        return Err(Error::Domain(format!("moment order {m} outside 0..=3")));
    }
    let s = weights(id, r)?;
    Ok(s.iter().map(|(j, w)| (r - j as f64).powi(m as i32) * w).sum())
}

/// `(sum over even j, sum over odd j)` of `phi(r-j)`.
pub fn even_odd_sums(id: KernelId, r: f64) -> Result<(f64, f64)> {
    let s = weights(id, r)?;
    Ok(s.iter().fold((0.0, 0.0), |(e, o), (j, w)| {
        if j.rem_euclid(2) == 0 {
            (e + w, o)
        } else {
            (e, o + w)
        }
    }))
}

pub fn sum_of_squares(id: KernelId, r: f64) -> Result<f64> {
    Ok(weights(id, r)?.weights().iter().map(|w| w * w).sum())
}

/// `sum_j phi(r1-j) phi(r2-j)` over all integers `j`.
pub fn coupling_1d(id: KernelId, r1: f64, r2: f64) -> Result<f64> {
    let a = weights(id, r1)?;
    let b = weights(id, r2)?;
    let mut acc = 0.0;
    for (j, wa) in a.iter() {
        let k = j - b.start;
        if k >= 0 && (k as usize) < b.weights().len() {
            acc += wa * b.weights()[k as usize];
        }
    }
    Ok(acc)
}

/// `sum_j p(j) phi(r-j) - p(r)` for `p(x) = c0 + c1 x + c2 x^2 + c3 x^3`.
pub fn cubic_reproduction_error(id: KernelId, coeffs: [f64; 4], r: f64) -> Result<f64> {
    let p = |x: f64| coeffs[0] + x * (coeffs[1] + x * (coeffs[2] + x * coeffs[3]));
    let s = weights(id, r)?;
    Ok(s.iter().map(|(j, w)| p(j as f64) * w).sum::<f64>() - p(r))
}

/// Weights of the `order`-th derivative at node 0 for the given nodes
/// (Fornberg's recursion).
fn fd_weights(nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// One-sided estimate of the `order`-th derivative at `x`; `side` is +1
/// (nodes `x, x+eps, ...`) or -1 (nodes `x, x-eps, ...`).
fn one_sided_derivative(id: KernelId, x: f64, order: usize, eps: f64, side: f64) -> Result<f64> {
    let count = order + FD_ACCURACY;
    let nodes: Vec<f64> = (0..count).map(|i| side * i as f64).collect();
    let c = fd_weights(&nodes, order);
    let mut acc = 0.0;
    for (ci, ni) in c.iter().zip(&nodes) {
        acc += ci * phi(id, x + ni * eps)?;
    }
    Ok(acc / eps.powi(order as i32))
}

/// `|right - left|` one-sided estimates of the `order`-th derivative at `knot`.
pub fn smoothness_jump(id: KernelId, knot: f64, order: u32, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if order == 0 {
        return Err(Error::Domain("smoothness order must be at least 1".into()));
    }
    let o = order as usize;
    let right = one_sided_derivative(id, knot, o, eps, 1.0)?;
    let left = one_sided_derivative(id, knot, o, eps, -1.0)?;
    Ok((right - left).abs())
}

/// Scale for the relative smoothness threshold: the larger one-sided
/// estimate, floored at one.
fn derivative_scale(id: KernelId, knot: f64, order: u32, eps: f64) -> Result<f64> {
    let o = order as usize;
    let right = one_sided_derivative(id, knot, o, eps, 1.0)?.abs();
    let left = one_sided_derivative(id, knot, o, eps, -1.0)?.abs();
    Ok(right.max(left).max(1.0))
}

/// Jumps of one derivative order at one knot along the eps sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotJumps {
    pub knot: f64,
    pub order: u32,
    pub jumps: Vec<f64>,
    pub vanishes: bool,
}

pub fn knot_jumps(id: KernelId, order: u32, cfg: &AuditConfig) -> Result<Vec<KnotJumps>> {
    let finest = *cfg.fd_epsilons.last().expect("validated config");
    id.knots()
        .iter()
        .map(|&knot| {
            let jumps = cfg
                .fd_epsilons
                .iter()
                .map(|&e| smoothness_jump(id, knot, order, e))
                .collect::<Result<Vec<_>>>()?;
            let scale = derivative_scale(id, knot, order, finest)?;
            let vanishes = *jumps.last().expect("non-empty") < SMOOTHNESS_THRESHOLD * scale;
            Ok(KnotJumps { knot, order, jumps, vanishes })
        })
        .collect()
}

/// Highest derivative order (up to 3) whose jumps vanish at every knot.
pub fn smoothness_class(id: KernelId, cfg: &AuditConfig) -> Result<u32> {
    let mut class = 0;
    for order in 1..=3 {
        if knot_jumps(id, order, cfg)?.iter().all(|k| k.vanishes) {
            class = order;
        } else {
            break;
        }
    }
    Ok(class)
}

/// One row of an audit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Whether the kernel is expected to satisfy the condition.
    pub expected: bool,
    /// Whether it was observed to hold at the configured tolerance.
    pub holds: bool,
    /// Largest deviation from the target value over all samples.
    pub max_violation: f64,
    /// Target value, when the condition has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, expected: bool, holds: bool, max_violation: f64, target: Option<f64>) -> Self {
        Check { name: name.to_string(), expected, holds, max_violation, target, pass: expected == holds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub kernel: KernelId,
    pub checks: Vec<Check>,
    pub smoothness_class: u32,
    pub min_value: f64,
    pub all_pass: bool,
}

impl AuditReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Running max of `|value - target|` and spread `max - min`.
#[derive(Default)]
struct Deviation {
    max_abs: f64,
    lo: f64,
    hi: f64,
    seen: bool,
}

impl Deviation {
    fn push(&mut self, value: f64, target: f64) {
        self.max_abs = self.max_abs.max((value - target).abs());
        if self.seen {
            self.lo = self.lo.min(value);
            self.hi = self.hi.max(value);
        } else {
            (self.lo, self.hi, self.seen) = (value, value, true);
        }
    }

    fn spread(&self) -> f64 {
        self.hi - self.lo
    }
}

struct SampleValues {
    even: f64,
    odd: f64,
    moments: [f64; 4],
    squares: f64,
    coupling: f64,
    coupling_swapped: f64,
    cubic_error: f64,
    min_phi: f64,
}

fn evaluate_sample(id: KernelId, r: f64, r2: f64, coeffs: [f64; 4], x: f64) -> Result<SampleValues> {
    let (even, odd) = even_odd_sums(id, r)?;
    let mut moments = [0.0; 4];
    for (m, out) in moments.iter_mut().enumerate() {
        *out = moment(id, m as u32, r)?;
    }
    // kernel values across the whole support
    let mut min_phi = f64::INFINITY;
    for s in [r, r + 1.0, r + 2.0] {
        if s < id.support_radius() {
            min_phi = min_phi.min(phi(id, s)?);
        }
    }
    Ok(SampleValues {
        even,
        odd,
        moments,
        squares: sum_of_squares(id, r)?,
        coupling: coupling_1d(id, r, r2)?,
        coupling_swapped: coupling_1d(id, r2, r)?,
        cubic_error: cubic_reproduction_error(id, coeffs, x)?,
        min_phi,
    })
}

/// Small deterministic generator for the randomized parts of an audit.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Runs every check for `id` and compares the outcome with the kernel's
/// defining postulates.
pub fn audit(id: KernelId, cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let spec: KernelSpec = kernel_spec(id);
    let tol = cfg.tolerance;
    let k = spec.second_moment.unwrap_or(0.0);
    let mut rng = SplitMix(cfg.seed);

    let mut even_odd = Deviation::default();
    let mut moments: [Deviation; 4] = Default::default();
    let mut squares = Deviation::default();
    let mut bound_excess: f64 = 0.0;
    let mut asymmetry: f64 = 0.0;
    let mut cubic = Deviation::default();
    let mut min_value = f64::INFINITY;
    let rs = id.support_radius();

    for r in cfg.sample_points() {
        let r2 = r + rng.uniform(-2.0 * rs, 2.0 * rs);
        let coeffs = [0; 4].map(|_| rng.uniform(-1.0, 1.0));
        let x = r + rng.uniform(-8.0, 8.0);
        let v = evaluate_sample(id, r, r2, coeffs, x).map_err(|e| Error::Evaluation {
            kernel: id,
            r,
            source: Box::new(e),
        })?;

        even_odd.push(v.even, 0.5);
        even_odd.push(v.odd, 0.5);
        for (m, dev) in moments.iter_mut().enumerate() {
            let target = match m {
                0 => 1.0,
                2 => k,
                _ => 0.0,
            };
            dev.push(v.moments[m], target);
        }
        squares.push(v.squares, spec.sum_of_squares);
        bound_excess = bound_excess.max(v.coupling.abs() - spec.sum_of_squares);
        asymmetry = asymmetry.max((v.coupling - v.coupling_swapped).abs());
        // moments 0..3 give sum_j p(j) phi(x-j) - p(x) = (K/2) p''(x)
        let p2 = 2.0 * coeffs[2] + 6.0 * coeffs[3] * x;
        cubic.push(v.cubic_error, 0.5 * k * p2);
        min_value = min_value.min(v.min_phi);
    }

    let flags = spec.satisfies;
    let mut checks = vec![
        Check::new("even_odd", flags.even_odd, even_odd.max_abs <= tol, even_odd.max_abs, Some(0.5)),
        Check::new("moment0", flags.moment0, moments[0].max_abs <= tol, moments[0].max_abs, Some(1.0)),
        Check::new("moment1", flags.moment1, moments[1].max_abs <= tol, moments[1].max_abs, Some(0.0)),
    ];
    // A moment the kernel does not fix must fail to be constant in r.
    for (m, name, expected) in [(2, "moment2", flags.moment2), (3, "moment3", flags.moment3)] {
        let dev = &moments[m];
        if expected {
            let target = if m == 2 { k } else { 0.0 };
            checks.push(Check::new(name, true, dev.max_abs <= tol, dev.max_abs, Some(target)));
        } else {
            checks.push(Check::new(name, false, dev.spread() <= tol, dev.spread(), None));
        }
    }
    checks.push(Check::new(
        "sum_of_squares",
        true,
        squares.max_abs <= tol,
        squares.max_abs,
        Some(spec.sum_of_squares),
    ));
    checks.push(Check::new("coupling_bound", true, bound_excess <= tol, bound_excess.max(0.0), None));
    checks.push(Check::new("coupling_symmetry", true, asymmetry <= tol, asymmetry, None));
    // cubic identities sum up to |p| ~ 10^3 at |x| <= 9, so allow 1e-10
    let cubic_tol = tol.max(1e-10);
    checks.push(Check::new(
        "cubic_reproduction",
        flags.moment2 && flags.moment3,
        cubic.max_abs <= cubic_tol,
        cubic.max_abs,
        None,
    ));
    let nonneg_expected = id != KernelId::Std6;
    checks.push(Check::new("non_negative", nonneg_expected, min_value >= -1e-14, (-min_value).max(0.0), None));

    let smoothness_class = smoothness_class(id, cfg)?;
    let expected_class = if id == KernelId::New6 { 3 } else { 1 };
    checks.push(Check::new(
        "smoothness",
        true,
        smoothness_class == expected_class,
        (smoothness_class as f64 - expected_class as f64).abs(),
        Some(expected_class as f64),
    ));

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(AuditReport { kernel: id, checks, smoothness_class, min_value, all_pass })
}


#[cfg(test)]
mod report_tests {
    use super::*;

    fn quick() -> AuditConfig {
        AuditConfig { samples: 500, ..Default::default() }
    }

    #[test]
    fn verdicts_mirror_postulates() {
        for id in KernelId::ALL {
            let rep = audit(id, &quick()).unwrap();
            for c in &rep.checks {
                assert!(c.pass, "{id} {}: {:?}", c.name, c);
            }
            assert!(rep.all_pass);
        }
    }

    #[test]
    fn std3_row() {
        let rep = audit(KernelId::Std3, &quick()).unwrap();
        assert!(!rep.check("even_odd").unwrap().holds);
        assert!(!rep.check("moment2").unwrap().holds);
        assert!(!rep.check("moment3").unwrap().holds);
        assert!(rep.check("sum_of_squares").unwrap().holds);
        assert!(rep.check("moment1").unwrap().holds);
        assert_eq!(rep.smoothness_class, 1);
    }

    #[test]
    fn six_point_rows() {
        let new6 = audit(KernelId::New6, &quick()).unwrap();
        assert_eq!(new6.smoothness_class, 3);
        assert!(new6.min_value >= -1e-14);
        let std6 = audit(KernelId::Std6, &quick()).unwrap();
        assert_eq!(std6.smoothness_class, 1);
        assert!(std6.min_value < 0.0);
        assert_eq!(std6.check("moment2").unwrap().target, Some(0.0));
    }

    #[test]
    fn report_serializes() {
        let rep = audit(KernelId::Std4, &quick()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["kernel"], "std4");
        assert!(v["checks"].as_array().unwrap().len() >= 10);
        assert_eq!(v["smoothness_class"], 1);
        assert!(v["min_value"].is_number());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = AuditConfig { samples: 0, ..Default::default() };
        assert!(matches!(audit(KernelId::New6, &cfg), Err(Error::Config(_))));
    }
}
