#ifndef IBKERNEL_H
#define IBKERNEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IbKernel {
  IB_KERNEL_STD3 = 0,
  IB_KERNEL_STD4 = 1,
  IB_KERNEL_STD6 = 2,
  IB_KERNEL_NEW6 = 3,
} IbKernel;

/**
 * Status code returned by every fallible function.
 */
typedef enum IbStatus {
  IB_STATUS_OK = 0,
  IB_STATUS_NULL_POINTER = 1,
  IB_STATUS_DOMAIN = 2,
  IB_STATUS_CONFIG = 3,
  IB_STATUS_INCONSISTENCY = 4,
  IB_STATUS_UNSUPPORTED_SMOOTHNESS = 5,
  IB_STATUS_EMPTY_RESULT = 6,
  IB_STATUS_BUFFER_TOO_SMALL = 7,
  IB_STATUS_PARSE = 8,
  IB_STATUS_IO = 9,
  IB_STATUS_PANIC = 10,
} IbStatus;

/**
 * The samples and binned statistics of one benchmark run.
 */
typedef struct IbBench IbBench;

/**
 * A periodic 3D grid.
 */
typedef struct IbGrid IbGrid;

typedef struct IbKernelSpec {
  double support_radius;
  uint32_t stencil_width;
  double sum_of_squares;
  /**
   * False when the second moment is not constant; `second_moment` is then 0.
   */
  bool has_second_moment;
  double second_moment;
  bool even_odd;
  bool moment0;
  bool moment1;
  bool moment2;
  bool moment3;
} IbKernelSpec;

typedef struct IbBenchConfig {
  enum IbKernel kernel;
  size_t pairs;
  /**
   * Grid points per axis.
   */
  size_t box_size;
  double meshwidth;
  uint64_t seed;
  double bin_width;
  double max_distance;
} IbBenchConfig;

/**
 * Statistics of one distance bin; NaN fields for an empty bin.
 */
typedef struct IbBinStat {
  double lo;
  double hi;
  size_t count;
  double min;
  double mean;
  double max;
  double std;
  double residual_std;
} IbBinStat;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on the calling thread, or an empty
 * string. Valid until the next call into this library on the same thread.
 */
const char *ib_last_error(void);

/**
 * Kernel value phi(r).
 */
enum IbStatus ib_kernel_phi(enum IbKernel kernel, double r, double *out);

/**
 * Derivative of order 1..3 (orders 2 and 3 only for the C3 kernel).
 */
enum IbStatus ib_kernel_derivative(enum IbKernel kernel, double r, uint32_t order, double *out);

enum IbStatus ib_kernel_spec(enum IbKernel kernel, struct IbKernelSpec *out);

/**
 * Weights `phi(x - j)` for `j = *start, *start + 1, ...`; `*len` receives
 * the stencil width, which `capacity` must not be below.
 */
enum IbStatus ib_kernel_weights(enum IbKernel kernel,
                                double x,
                                int64_t *start,
                                double *weights,
                                size_t capacity,
                                size_t *len);

/**
 * Creates an `n1 x n2 x n3` periodic grid with meshwidth `h`.
 */
enum IbStatus ib_grid_new(size_t n1, size_t n2, size_t n3, double h, struct IbGrid **out);

/**
 * Releases a grid; null is ignored.
 */
void ib_grid_free(struct IbGrid *grid);

/**
 * Number of grid nodes, the length of every field on this grid.
 * Fields are stored with the last index varying fastest.
 */
size_t ib_grid_len(const struct IbGrid *grid);

/**
 * Spreads `count` marker values to `field` (`field_len >= ib_grid_len`).
 */
enum IbStatus ib_grid_spread(const struct IbGrid *grid,
                             enum IbKernel kernel,
                             const double *positions,
                             const double *values,
                             size_t count,
                             double *field,
                             size_t field_len);

/**
 * Interpolates `field` (length `ib_grid_len`) at `count` markers.
 */
enum IbStatus ib_grid_interpolate(const struct IbGrid *grid,
                                  enum IbKernel kernel,
                                  const double *field,
                                  size_t field_len,
                                  const double *positions,
                                  size_t count,
                                  double *values);

/**
 * Grid coupling between the markers at `x1` and `x2` (three doubles each).
 */
enum IbStatus ib_grid_pair_coupling(const struct IbGrid *grid,
                                    enum IbKernel kernel,
                                    const double *x1,
                                    const double *x2,
                                    double *out);

/**
 * The default benchmark configuration: 100000 pairs in a 32^3 box.
 */
struct IbBenchConfig ib_bench_config_default(enum IbKernel kernel);

/**
 * Runs the translational-invariance benchmark.
 */
enum IbStatus ib_bench_run(const struct IbBenchConfig *config, struct IbBench **out);

/**
 * Releases a benchmark result; null is ignored.
 */
void ib_bench_free(struct IbBench *bench);

size_t ib_bench_num_bins(const struct IbBench *bench);

enum IbStatus ib_bench_bin(const struct IbBench *bench, size_t index, struct IbBinStat *out);

/**
 * Copies the `(distance, coupling)` samples; `capacity` must be at least
 * the number of pairs.
 */
enum IbStatus ib_bench_samples(const struct IbBench *bench,
                               double *distances,
                               double *couplings,
                               size_t capacity);

/**
 * Largest per-bin residual standard deviation over bins holding at least
 * ten samples.
 */
enum IbStatus ib_bench_max_std(const struct IbBench *bench, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IBKERNEL_H */
