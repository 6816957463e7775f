//! C ABI for `ibkernel`.
//!
//! Every fallible function returns an [`IbStatus`]; on failure a message for
//! the calling thread is available from [`ib_last_error`]. Grids and
//! benchmark results are opaque handles released with their `_free`
//! function. Positions are passed as packed `x,y,z` triples.

#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ibkernel::bench::{self, BenchConfig, BenchResult, MIN_BIN_COUNT};
use ibkernel::grid::{self, MarkerSet, PeriodicGrid3, Point3, ScalarField3};
use ibkernel::{Error, KernelId};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IbStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    Inconsistency = 4,
    UnsupportedSmoothness = 5,
    EmptyResult = 6,
    BufferTooSmall = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IbKernel {
    Std3 = 0,
    Std4 = 1,
    Std6 = 2,
    New6 = 3,
}

impl From<IbKernel> for KernelId {
    fn from(k: IbKernel) -> Self {
        match k {
            IbKernel::Std3 => KernelId::Std3,
            IbKernel::Std4 => KernelId::Std4,
            IbKernel::Std6 => KernelId::Std6,
            IbKernel::New6 => KernelId::New6,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbKernelSpec {
    pub support_radius: f64,
    pub stencil_width: u32,
    pub sum_of_squares: f64,
    /// False when the second moment is not constant; `second_moment` is then 0.
    pub has_second_moment: bool,
    pub second_moment: f64,
    pub even_odd: bool,
    pub moment0: bool,
    pub moment1: bool,
    pub moment2: bool,
    pub moment3: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbBenchConfig {
    pub kernel: IbKernel,
    pub pairs: usize,
    /// Grid points per axis.
    pub box_size: usize,
    pub meshwidth: f64,
    pub seed: u64,
    pub bin_width: f64,
    pub max_distance: f64,
}

/// Statistics of one distance bin; NaN fields for an empty bin.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbBinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub std: f64,
    pub residual_std: f64,
}

/// A periodic 3D grid.
pub struct IbGrid(PeriodicGrid3);

/// The samples and binned statistics of one benchmark run.
pub struct IbBench(BenchResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IbStatus {
    match e {
        Error::Domain(_) => IbStatus::Domain,
        Error::Config(_) => IbStatus::Config,
        Error::Inconsistency(_) => IbStatus::Inconsistency,
        Error::UnsupportedSmoothness { .. } => IbStatus::UnsupportedSmoothness,
        Error::EmptyResult { .. } => IbStatus::EmptyResult,
        Error::Evaluation { source, .. } => status_of(source),
        Error::Parse(_) => IbStatus::Parse,
        Error::Io(_) => IbStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    TooSmall { needed: usize, given: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            IbStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is null"));
            IbStatus::NullPointer
        }
        Ok(Err(Failure::TooSmall { needed, given })) => {
            set_last_error(format!("buffer holds {given} elements, {needed} needed"));
            IbStatus::BufferTooSmall
        }
        Err(_) => {
            set_last_error("internal panic".into());
            IbStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn in_slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn out_slice<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` writable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn markers(positions: *const f64, count: usize) -> Result<MarkerSet, Failure> {
    let flat = in_slice(positions, 3 * count, "positions")?;
    let points: Vec<Point3> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(MarkerSet::new(points)?)
}

fn need(given: usize, needed: usize) -> Result<(), Failure> {
    if given < needed {
        Err(Failure::TooSmall { needed, given })
    } else {
        Ok(())
    }
}

/// Message describing the last failure on the calling thread, or an empty
/// string. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ib_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Kernel value phi(r).
#[no_mangle]
pub extern "C" fn ib_kernel_phi(kernel: IbKernel, r: f64, out: *mut f64) -> IbStatus {
    guard(|| {
        *out_ref(out, "out")? = ibkernel::phi(kernel.into(), r)?;
        Ok(())
    })
}

/// Derivative of order 1..3 (orders 2 and 3 only for the C3 kernel).
#[no_mangle]
pub extern "C" fn ib_kernel_derivative(kernel: IbKernel, r: f64, order: u32, out: *mut f64) -> IbStatus {
    guard(|| {
        *out_ref(out, "out")? = ibkernel::phi_derivative(kernel.into(), r, order)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn ib_kernel_spec(kernel: IbKernel, out: *mut IbKernelSpec) -> IbStatus {
    guard(|| {
        let s = ibkernel::kernel_spec(kernel.into());
        *out_ref(out, "out")? = IbKernelSpec {
            support_radius: s.support_radius,
            stencil_width: s.stencil_width as u32,
            sum_of_squares: s.sum_of_squares,
            has_second_moment: s.second_moment.is_some(),
            second_moment: s.second_moment.unwrap_or(0.0),
            even_odd: s.satisfies.even_odd,
            moment0: s.satisfies.moment0,
            moment1: s.satisfies.moment1,
            moment2: s.satisfies.moment2,
            moment3: s.satisfies.moment3,
        };
        Ok(())
    })
}

/// Weights `phi(x - j)` for `j = *start, *start + 1, ...`; `*len` receives
/// the stencil width, which `capacity` must not be below.
#[no_mangle]
pub extern "C" fn ib_kernel_weights(
    kernel: IbKernel,
    x: f64,
    start: *mut i64,
    weights: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> IbStatus {
    guard(|| {
        let s = ibkernel::weights(kernel.into(), x)?;
        let w = s.weights();
        *out_ref(len, "len")? = w.len();
        need(capacity, w.len())?;
        out_slice(weights, w.len(), "weights")?.copy_from_slice(w);
        *out_ref(start, "start")? = s.start;
        Ok(())
    })
}

/// Creates an `n1 x n2 x n3` periodic grid with meshwidth `h`.
#[no_mangle]
pub extern "C" fn ib_grid_new(n1: usize, n2: usize, n3: usize, h: f64, out: *mut *mut IbGrid) -> IbStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let g = PeriodicGrid3::new([n1, n2, n3], h)?;
        *slot = Box::into_raw(Box::new(IbGrid(g)));
        Ok(())
    })
}

/// Releases a grid; null is ignored.
#[no_mangle]
pub extern "C" fn ib_grid_free(grid: *mut IbGrid) {
    if !grid.is_null() {
        // SAFETY: non-null handles come from `ib_grid_new` and are freed once.
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Number of grid nodes, the length of every field on this grid.
/// Fields are stored with the last index varying fastest.
#[no_mangle]
pub extern "C" fn ib_grid_len(grid: *const IbGrid) -> usize {
    // SAFETY: the caller passes either null or a live handle.
    unsafe { grid.as_ref() }.map_or(0, |g| g.0.len())
}

/// Spreads `count` marker values to `field` (`field_len >= ib_grid_len`).
#[no_mangle]
pub extern "C" fn ib_grid_spread(
    grid: *const IbGrid,
    kernel: IbKernel,
    positions: *const f64,
    values: *const f64,
    count: usize,
    field: *mut f64,
    field_len: usize,
) -> IbStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.0;
        let m = markers(positions, count)?;
        let v = in_slice(values, count, "values")?;
        need(field_len, g.len())?;
        let out = out_slice(field, g.len(), "field")?;
        let spread = grid::spread(kernel.into(), g, &m, v)?;
        out.copy_from_slice(spread.values());
        Ok(())
    })
}

/// Interpolates `field` (length `ib_grid_len`) at `count` markers.
#[no_mangle]
pub extern "C" fn ib_grid_interpolate(
    grid: *const IbGrid,
    kernel: IbKernel,
    field: *const f64,
    field_len: usize,
    positions: *const f64,
    count: usize,
    values: *mut f64,
) -> IbStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.0;
        need(field_len, g.len())?;
        let f = ScalarField3::from_values(*g, in_slice(field, g.len(), "field")?.to_vec())?;
        let m = markers(positions, count)?;
        let out = out_slice(values, count, "values")?;
        out.copy_from_slice(&grid::interpolate(kernel.into(), g, &f, &m)?);
        Ok(())
    })
}

/// Grid coupling between the markers at `x1` and `x2` (three doubles each).
#[no_mangle]
pub extern "C" fn ib_grid_pair_coupling(
    grid: *const IbGrid,
    kernel: IbKernel,
    x1: *const f64,
    x2: *const f64,
    out: *mut f64,
) -> IbStatus {
    guard(|| {
        let g = &in_ref(grid, "grid")?.0;
        let a = in_slice(x1, 3, "x1")?;
        let b = in_slice(x2, 3, "x2")?;
        *out_ref(out, "out")? = grid::pair_coupling(kernel.into(), g, [a[0], a[1], a[2]], [b[0], b[1], b[2]])?;
        Ok(())
    })
}

/// The default benchmark configuration: 100000 pairs in a 32^3 box.
#[no_mangle]
pub extern "C" fn ib_bench_config_default(kernel: IbKernel) -> IbBenchConfig {
    let d = BenchConfig::default();
    IbBenchConfig {
        kernel,
        pairs: d.pairs,
        box_size: d.box_size,
        meshwidth: d.meshwidth,
        seed: d.seed,
        bin_width: d.bin_width,
        max_distance: d.max_distance,
    }
}

/// Runs the translational-invariance benchmark.
#[no_mangle]
pub extern "C" fn ib_bench_run(config: *const IbBenchConfig, out: *mut *mut IbBench) -> IbStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let c = in_ref(config, "config")?;
        let cfg = BenchConfig {
            kernel: c.kernel.into(),
            pairs: c.pairs,
            box_size: c.box_size,
            meshwidth: c.meshwidth,
            seed: c.seed,
            bin_width: c.bin_width,
            max_distance: c.max_distance,
        };
        *slot = Box::into_raw(Box::new(IbBench(bench::run_bench(&cfg)?)));
        Ok(())
    })
}

/// Releases a benchmark result; null is ignored.
#[no_mangle]
pub extern "C" fn ib_bench_free(bench: *mut IbBench) {
    if !bench.is_null() {
        // SAFETY: non-null handles come from `ib_bench_run` and are freed once.
        drop(unsafe { Box::from_raw(bench) });
    }
}

#[no_mangle]
pub extern "C" fn ib_bench_num_bins(bench: *const IbBench) -> usize {
    // SAFETY: the caller passes either null or a live handle.
    unsafe { bench.as_ref() }.map_or(0, |b| b.0.stats.bins.len())
}

#[no_mangle]
pub extern "C" fn ib_bench_bin(bench: *const IbBench, index: usize, out: *mut IbBinStat) -> IbStatus {
    guard(|| {
        let b = &in_ref(bench, "bench")?.0;
        let s = b
            .stats
            .bins
            .get(index)
            .ok_or_else(|| Error::Domain(format!("bin {index} out of range 0..{}", b.stats.bins.len())))?;
        *out_ref(out, "out")? = IbBinStat {
            lo: s.lo,
            hi: s.hi,
            count: s.count,
            min: s.min,
            mean: s.mean,
            max: s.max,
            std: s.std,
            residual_std: s.residual_std,
        };
        Ok(())
    })
}

/// Copies the `(distance, coupling)` samples; `capacity` must be at least
/// the number of pairs.
#[no_mangle]
pub extern "C" fn ib_bench_samples(
    bench: *const IbBench,
    distances: *mut f64,
    couplings: *mut f64,
    capacity: usize,
) -> IbStatus {
    guard(|| {
        let b = &in_ref(bench, "bench")?.0;
        let n = b.samples.len();
        need(capacity, n)?;
        let d = out_slice(distances, n, "distances")?;
        let c = out_slice(couplings, n, "couplings")?;
        for (i, s) in b.samples.iter().enumerate() {
            d[i] = s.distance;
            c[i] = s.coupling;
        }
        Ok(())
    })
}

/// Largest per-bin residual standard deviation over bins holding at least
/// ten samples.
#[no_mangle]
pub extern "C" fn ib_bench_max_std(bench: *const IbBench, out: *mut f64) -> IbStatus {
    guard(|| {
        let b = &in_ref(bench, "bench")?.0;
        *out_ref(out, "out")? = bench::max_std(&b.stats, MIN_BIN_COUNT)?;
        Ok(())
    })
}
