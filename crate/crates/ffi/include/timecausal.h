#ifndef TIMECAUSAL_H
#define TIMECAUSAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by all functions.
 */
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  /*
   A required pointer was null or a buffer was too small.
   */
  TC_STATUS_INVALID_ARGUMENT = 1,
  /*
   A parameter was outside its domain.
   */
  TC_STATUS_PARAMETER = 2,
  /*
   Reading or writing a file failed, or a frame was malformed.
   */
  TC_STATUS_IO = 3,
  /*
   A numerical or state error.
   */
  TC_STATUS_NUMERIC = 4,
  /*
   An internal panic was caught at the boundary.
   */
  TC_STATUS_PANIC = 5,
} TcStatus;

/*
 Discrete Gaussian kernel of variance `s`.
 */
typedef struct TcDiscreteGaussian TcDiscreteGaussian;

/*
 Streaming feature pipeline; keeps the maps of the most recent frame.
 */
typedef struct TcPipeline TcPipeline;

/*
 Recursive temporal smoothing of a fixed number of channels.
 */
typedef struct TcTemporalFilter TcTemporalFilter;

/*
 Description of one feature map produced by the last pushed frame.
 */
typedef struct TcFeatureInfo {
  /*
   Position of the feature in the comma-separated list given at creation.
   */
  size_t feature_index;
  size_t spatial_index;
  size_t temporal_index;
  size_t frame_index;
  size_t width;
  size_t height;
} TcFeatureInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL terminated, truncated to `len`)
 and returns the full message length in bytes.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t tc_last_error(char *buf, size_t len);

/*
 Temporal mean of a cascade of `stages` stages with total variance `tau`.
 `c <= 0` selects the uniform distribution.

 # Safety
 `out` must be valid for writing.
 */
enum TcStatus tc_temporal_mean(double tau, double c, size_t stages, double *out);

/*
 Position of the maximum of the continuous cascade kernel.

 # Safety
 `out` must be valid for writing.
 */
enum TcStatus tc_temporal_tmax(double tau, double c, size_t stages, double *out);

/*
 `L_p` norm of the `n`-th derivative of the unit Gaussian, with `p` paired to `gamma`.

 # Safety
 `out` must be valid for writing.
 */
enum TcStatus tc_gaussian_derivative_norm(size_t n, double gamma, double *out);

/*
 Creates a filter with total variance `tau` in frames squared.
 `c <= 0` selects the uniform distribution.

 # Safety
 `out` must be valid for writing.
 */
enum TcStatus tc_temporal_filter_new(double tau,
                                     double c,
                                     size_t stages,
                                     size_t channels,
                                     struct TcTemporalFilter **out);

/*
 Feeds one sample per channel and writes the smoothed output of the last stage.

 # Safety
 `filter` must come from [`tc_temporal_filter_new`]; `input` and `output` must hold `len` values.
 */
enum TcStatus tc_temporal_filter_step(struct TcTemporalFilter *filter,
                                      const double *input,
                                      double *output,
                                      size_t len);

/*
 # Safety
 `filter` must be null or come from [`tc_temporal_filter_new`], and is invalid afterwards.
 */
void tc_temporal_filter_free(struct TcTemporalFilter *filter);

/*
 Creates a kernel truncated where the neglected mass falls below `eps`.

 # Safety
 `out` must be valid for writing.
 */
enum TcStatus tc_discrete_gaussian_new(double s, double eps, struct TcDiscreteGaussian **out);

/*
 Number of taps, `2 * half_width + 1`.

 # Safety
 `kernel` must come from [`tc_discrete_gaussian_new`]; `out` must be valid for writing.
 */
enum TcStatus tc_discrete_gaussian_len(const struct TcDiscreteGaussian *kernel, size_t *out);

/*
 Copies the taps, centre in the middle.

 # Safety
 `kernel` must come from [`tc_discrete_gaussian_new`]; `taps` must hold `len` values.
 */
enum TcStatus tc_discrete_gaussian_taps(const struct TcDiscreteGaussian *kernel,
                                        double *taps,
                                        size_t len);

/*
 Separable smoothing of a row-major `width x height` image with mirrored borders.

 # Safety
 `kernel` must come from [`tc_discrete_gaussian_new`]; `input` and `output` must hold `width * height` values.
 */
enum TcStatus tc_discrete_gaussian_smooth(const struct TcDiscreteGaussian *kernel,
                                          size_t width,
                                          size_t height,
                                          const double *input,
                                          double *output);

/*
 # Safety
 `kernel` must be null or come from [`tc_discrete_gaussian_new`], and is invalid afterwards.
 */
void tc_discrete_gaussian_free(struct TcDiscreteGaussian *kernel);

/*
 Creates a pipeline with default settings apart from the given scales and features.

 `features` is a comma-separated list such as `"q2,laplacian"`. `stages` and `c`
 select a logarithmic distribution; `c <= 0` selects the uniform one.

 # Safety
 The scale arrays must hold their stated lengths, `features` must be a NUL terminated
 string and `out` must be valid for writing.
 */
enum TcStatus tc_pipeline_new(double fps,
                              const double *sigma_t_seconds,
                              size_t temporal_scales,
                              const double *sigma_x,
                              size_t spatial_scales,
                              size_t stages,
                              double c,
                              const char *features,
                              struct TcPipeline **out);

/*
 Pushes one row-major frame and writes the number of feature maps it produced.

 # Safety
 `pipeline` must come from [`tc_pipeline_new`]; `pixels` must hold `width * height` values.
 */
enum TcStatus tc_pipeline_push_frame(struct TcPipeline *pipeline,
                                     size_t width,
                                     size_t height,
                                     const double *pixels,
                                     size_t *produced);

/*
 Describes map `index` of the last pushed frame.

 # Safety
 `pipeline` must come from [`tc_pipeline_new`]; `info` must be valid for writing.
 */
enum TcStatus tc_pipeline_output_info(const struct TcPipeline *pipeline,
                                      size_t index,
                                      struct TcFeatureInfo *info);

/*
 Copies map `index` of the last pushed frame into `pixels`, row-major.

 # Safety
 `pipeline` must come from [`tc_pipeline_new`]; `pixels` must hold `len` values.
 */
enum TcStatus tc_pipeline_output_copy(const struct TcPipeline *pipeline,
                                      size_t index,
                                      double *pixels,
                                      size_t len);

/*
 Writes the recursive state so that processing can resume later.

 # Safety
 `pipeline` must come from [`tc_pipeline_new`]; `path` must be a NUL terminated string.
 */
enum TcStatus tc_pipeline_save_state(const struct TcPipeline *pipeline, const char *path);

/*
 # Safety
 `pipeline` must be null or come from [`tc_pipeline_new`], and is invalid afterwards.
 */
void tc_pipeline_free(struct TcPipeline *pipeline);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIMECAUSAL_H */
