//! Translational-invariance benchmark.
//!
//! Random marker pairs are placed in a periodic box; for each pair the
//! grid coupling `sum_x delta_h(x - X1) delta_h(x - X2)`, normalized so
//! that coincident markers give 1, is recorded against the pair distance.
//! An exactly translation-invariant kernel would put all samples on one
//! curve; the per-bin spread measures how far each kernel is from that.
//!
//! Within a 0.1-wide bin the mean coupling itself changes by up to ~0.05,
//! which swamps the invariance defect in a plain per-bin standard
//! deviation. Each bin therefore also reports `residual_std`, the spread
//! about the bin's least-squares line in distance; [`max_std`] uses it.
//!
//! Pair `i` depends only on `(seed, i)`, so results do not depend on how
//! many threads evaluate the pairs.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pair_coupling, PeriodicGrid3, Point3};
use crate::kernel::{kernel_spec, KernelId};
use crate::numfmt::g17;

/// Published maximum per-bin standard deviations at 100,000 pairs.
pub fn reference_max_std(id: KernelId) -> f64 {
    match id {
        KernelId::Std3 => 0.0428,
        KernelId::Std4 => 0.0168,
        KernelId::Std6 => 0.0296,
        KernelId::New6 => 0.0042,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub kernel: KernelId,
    pub pairs: usize,
    /// Grid points per axis.
    pub box_size: usize,
    pub meshwidth: f64,
    pub seed: u64,
    pub bin_width: f64,
    pub max_distance: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            kernel: KernelId::New6,
            pairs: 100_000,
            box_size: 32,
            meshwidth: 1.0,
            seed: 1,
            bin_width: 0.1,
            max_distance: 6.0,
        }
    }
}

impl BenchConfig {
    pub fn grid(&self) -> Result<PeriodicGrid3> {
        PeriodicGrid3::new([self.box_size; 3], self.meshwidth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::Config("pairs must be at least 1".into()));
        }
        self.grid()?.check_kernel(self.kernel)?;
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::Config(format!("bin width must be positive, got {}", self.bin_width)));
        }
        let half = 0.5 * self.box_size as f64 * self.meshwidth;
        if !(self.max_distance > 0.0 && self.max_distance <= half) {
            return Err(Error::Config(format!(
                "max distance {} must lie in (0, {half}] (half the box)",
                self.max_distance
            )));
        }
        Ok(())
    }
}

/// The pair with index `i`: `X1` uniform in the box, `X2 = X1 + d` with a
/// uniformly random direction and `|d|` uniform in `[0, max_distance]`,
/// wrapped into the box.
pub fn sample_pair(cfg: &BenchConfig, i: u64) -> (Point3, Point3) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(i);
    let extent = cfg.box_size as f64 * cfg.meshwidth;
    let x1: Point3 = std::array::from_fn(|_| rng.gen::<f64>() * extent);
    let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    let dist = cfg.max_distance * rng.gen::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let dir = [rho * theta.cos(), rho * theta.sin(), z];
    let x2 = std::array::from_fn(|a| (x1[a] + dist * dir[a]).rem_euclid(extent));
    (x1, x2)
}

pub fn sample_pairs(cfg: &BenchConfig) -> Result<Vec<(Point3, Point3)>> {
    cfg.validate()?;
    Ok((0..cfg.pairs as u64).into_par_iter().map(|i| sample_pair(cfg, i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub distance: f64,
    /// Grid coupling divided by its coincident-marker value `(C/h)^3`.
    pub coupling: f64,
}

/// Coupling of one pair, normalized to 1 for coincident markers.
pub fn normalized_coupling(id: KernelId, grid: &PeriodicGrid3, x1: Point3, x2: Point3) -> Result<PairSample> {
    let c = kernel_spec(id).sum_of_squares / grid.meshwidth();
    Ok(PairSample {
        distance: grid.periodic_distance(x1, x2),
        coupling: pair_coupling(id, grid, x1, x2)? / (c * c * c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// NaN for an empty bin, likewise below.
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Population standard deviation about the least-squares line
    /// `coupling ~ a + b * distance` fitted to this bin.
    pub residual_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedStats {
    pub bin_width: f64,
    pub bins: Vec<BinStat>,
}

impl BinnedStats {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// The bin whose half-open range `[lo, hi)` contains `distance`.
    pub fn bin_containing(&self, distance: f64) -> Option<&BinStat> {
        self.bins.iter().find(|b| b.lo <= distance && distance < b.hi)
    }
}

fn bin_count(bin_width: f64, max_distance: f64) -> usize {
    let n = max_distance / bin_width;
    // 6.0 / 0.1 is 59.999...; treat near-integers as exact
    let rounded = n.round();
    if (n - rounded).abs() < 1e-9 * rounded.max(1.0) {
        rounded.max(1.0) as usize
    } else {
        n.ceil() as usize
    }
}

/// Bins samples by distance into `[k w, (k+1) w)` covering
/// `[0, max_distance]`; samples at `max_distance` land in the last bin.
pub fn bin_samples(samples: &[PairSample], bin_width: f64, max_distance: f64) -> Result<BinnedStats> {
    if bin_width.is_nan() || bin_width <= 0.0 || max_distance.is_nan() || max_distance <= 0.0 {
        return Err(Error::Config("bin width and max distance must be positive".into()));
    }
    let n = bin_count(bin_width, max_distance);
    let mut groups: Vec<Vec<PairSample>> = vec![Vec::new(); n];
    for s in samples {
        if !(0.0..=max_distance * (1.0 + 1e-12)).contains(&s.distance) {
            return Err(Error::Domain(format!("sample distance {} outside [0, {max_distance}]", s.distance)));
        }
        let k = ((s.distance / bin_width) as usize).min(n - 1);
        groups[k].push(*s);
    }
    let bins = groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let lo = k as f64 * bin_width;
            let hi = if k + 1 == n { max_distance } else { (k + 1) as f64 * bin_width };
            if g.is_empty() {
                let nan = f64::NAN;
                return BinStat { lo, hi, count: 0, min: nan, mean: nan, max: nan, std: nan, residual_std: nan };
            }
            let count = g.len();
            let n = count as f64;
            let mean = g.iter().map(|s| s.coupling).sum::<f64>() / n;
            let var = g.iter().map(|s| (s.coupling - mean).powi(2)).sum::<f64>() / n;
            let mean_d = g.iter().map(|s| s.distance).sum::<f64>() / n;
            let sxx: f64 = g.iter().map(|s| (s.distance - mean_d).powi(2)).sum();
            let sxy: f64 = g.iter().map(|s| (s.distance - mean_d) * (s.coupling - mean)).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            let residual = g
                .iter()
                .map(|s| (s.coupling - mean - slope * (s.distance - mean_d)).powi(2))
                .sum::<f64>()
                / n;
            BinStat {
                lo,
                hi,
                count,
                min: g.iter().map(|s| s.coupling).fold(f64::INFINITY, f64::min),
                mean,
                max: g.iter().map(|s| s.coupling).fold(f64::NEG_INFINITY, f64::max),
                std: var.sqrt(),
                residual_std: residual.sqrt(),
            }
        })
        .collect();
    Ok(BinnedStats { bin_width, bins })
}

fn max_over_bins(stats: &BinnedStats, min_count: usize, f: fn(&BinStat) -> f64) -> Result<f64> {
    if min_count < 2 {
        return Err(Error::Domain(format!("min_count must be at least 2, got {min_count}")));
    }
    stats
        .bins
        .iter()
        .filter(|b| b.count >= min_count)
        .map(f)
        .reduce(f64::max)
        .ok_or(Error::EmptyResult { min_count })
}

/// Largest per-bin `residual_std` over bins holding at least `min_count`
/// samples.
pub fn max_std(stats: &BinnedStats, min_count: usize) -> Result<f64> {
    max_over_bins(stats, min_count, |b| b.residual_std)
}

/// Like [`max_std`] but with the plain per-bin standard deviation.
pub fn max_raw_std(stats: &BinnedStats, min_count: usize) -> Result<f64> {
    max_over_bins(stats, min_count, |b| b.std)
}

/// `residual_std` of the bin containing `distance` over the median
/// `residual_std` of all bins with at least `min_count` samples.
pub fn deviation_peak_ratio(stats: &BinnedStats, distance: f64, min_count: usize) -> Result<f64> {
    let mut stds: Vec<f64> =
        stats.bins.iter().filter(|b| b.count >= min_count).map(|b| b.residual_std).collect();
    if stds.is_empty() {
        return Err(Error::EmptyResult { min_count });
    }
    stds.sort_by(f64::total_cmp);
    let mid = stds.len() / 2;
    let median = if stds.len().is_multiple_of(2) { 0.5 * (stds[mid - 1] + stds[mid]) } else { stds[mid] };
    let bin = stats
        .bin_containing(distance)
        .filter(|b| b.count >= min_count)
        .ok_or(Error::EmptyResult { min_count })?;
    Ok(bin.residual_std / median)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub samples: Vec<PairSample>,
    pub stats: BinnedStats,
}

/// Bins with fewer samples are ignored by the summary statistics.
pub const MIN_BIN_COUNT: usize = 10;

/// Distance at which the standard 6-point kernel's deviation peaks.
pub const PEAK_DISTANCE: f64 = 2.5;

impl BenchResult {
    pub fn max_std(&self) -> Result<f64> {
        max_std(&self.stats, MIN_BIN_COUNT)
    }

    /// Max std when the same samples are rebinned at other widths.
    pub fn bin_width_sensitivity(&self, widths: &[f64]) -> Result<Vec<(f64, f64)>> {
        widths
            .iter()
            .map(|&w| {
                let s = bin_samples(&self.samples, w, self.config.max_distance)?;
                Ok((w, max_std(&s, MIN_BIN_COUNT)?))
            })
            .collect()
    }

    pub fn summary(&self) -> Result<BenchSummary> {
        let max_std = self.max_std()?;
        let reference = reference_max_std(self.config.kernel);
        let widths = [0.05, 0.1, 0.2];
        Ok(BenchSummary {
            kernel: self.config.kernel,
            pairs: self.config.pairs,
            seed: self.config.seed,
            bin_width: self.config.bin_width,
            max_std,
            max_raw_std: max_raw_std(&self.stats, MIN_BIN_COUNT)?,
            box_size: self.config.box_size,
            meshwidth: self.config.meshwidth,
            max_distance: self.config.max_distance,
            reference_max_std: reference,
            relative_deviation: (max_std - reference) / reference,
            peak_ratio: if self.config.max_distance > PEAK_DISTANCE {
                Some(deviation_peak_ratio(&self.stats, PEAK_DISTANCE, MIN_BIN_COUNT)?)
            } else {
                None
            },
            bin_width_sensitivity: self
                .bin_width_sensitivity(&widths)?
                .into_iter()
                .map(|(bin_width, max_std)| WidthSensitivity { bin_width, max_std })
                .collect(),
        })
    }

    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "distance,coupling")?;
        for s in &self.samples {
            writeln!(out, "{},{}", g17(s.distance), g17(s.coupling))?;
        }
        Ok(())
    }

    pub fn write_stats_csv<W: Write>(&self, out: W) -> Result<()> {
        write_stats_csv(&self.stats, out)
    }
}

pub fn write_stats_csv<W: Write>(stats: &BinnedStats, mut out: W) -> Result<()> {
    writeln!(out, "bin_lo,bin_hi,count,min,mean,max,std,residual_std")?;
    for b in &stats.bins {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            g17(b.lo),
            g17(b.hi),
            b.count,
            g17(b.min),
            g17(b.mean),
            g17(b.max),
            g17(b.std),
            g17(b.residual_std)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSensitivity {
    pub bin_width: f64,
    pub max_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub kernel: KernelId,
    pub pairs: usize,
    pub seed: u64,
    pub bin_width: f64,
    pub max_std: f64,
    /// Same maximum over the plain per-bin standard deviation.
    pub max_raw_std: f64,
    pub box_size: usize,
    pub meshwidth: f64,
    pub max_distance: f64,
    pub reference_max_std: f64,
    /// `(max_std - reference) / reference`.
    pub relative_deviation: f64,
    /// [`deviation_peak_ratio`] at [`PEAK_DISTANCE`].
    pub peak_ratio: Option<f64>,
    pub bin_width_sensitivity: Vec<WidthSensitivity>,
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let samples = (0..cfg.pairs as u64)
        .into_par_iter()
        .map(|i| {
            let (x1, x2) = sample_pair(cfg, i);
            normalized_coupling(cfg.kernel, &grid, x1, x2)
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = bin_samples(&samples, cfg.bin_width, cfg.max_distance)?;
    Ok(BenchResult { config: cfg.clone(), samples, stats })
}
