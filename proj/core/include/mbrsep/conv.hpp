#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mbrsep/tensor.hpp"

namespace mbrsep {

enum class Padding { kSame, kValid };

// Kernel extents are written (time, frequency) to match how filter sizes
// are quoted throughout the model tables.
struct ConvParams {
  std::int64_t kernel_time = 1;
  std::int64_t kernel_freq = 1;
  std::int64_t stride_time = 1;
  std::int64_t stride_freq = 1;
  std::int64_t out_channels = 0;
  std::int64_t in_channels = 0;
  Padding padding = Padding::kSame;
  bool use_bias = true;
};

// Same: ceil(input/stride). Valid: floor((input-kernel)/stride)+1.
std::int64_t conv_output_size(std::int64_t input, std::int64_t kernel, std::int64_t stride,
                              Padding padding);
// Same: input*stride. Valid: (input-1)*stride + kernel.
std::int64_t conv_transpose_output_size(std::int64_t input, std::int64_t kernel,
                                        std::int64_t stride, Padding padding);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::vector<T> bias;  // empty when the layer has no bias
};

// Cross-correlation (no kernel flip). Weights are (out_channels,
// in_channels, kernel_time, kernel_freq); bias is per output channel and
// must be empty iff params.use_bias is false.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         std::span<const T> bias, const ConvParams& params);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights, const ConvParams& params);

// Adjoint of conv2d_forward: with identical weights and geometry,
// <conv(x), y> == <x, conv_transpose(y)>. Weights are therefore laid out
// (in_channels, out_channels, kernel_time, kernel_freq) — the same array a
// mirror convolution mapping out->in would use. Stride acts as an
// upsampling factor.
template <typename T>
Tensor<T> conv2d_transpose_forward(const Tensor<T>& input, const Tensor<T>& weights,
                                   std::span<const T> bias, const ConvParams& params);

template <typename T>
ConvGrads<T> conv2d_transpose_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                       const Tensor<T>& weights, const ConvParams& params);

namespace detail {

// Execution path selection. kAuto picks the FFT path for large kernels and
// the direct loops otherwise; both produce identical shapes and are
// bitwise deterministic run-to-run. Exposed for the equivalence tests and
// benchmarks.
enum class ConvBackend { kAuto, kDirect, kFft };

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         std::span<const T> bias, const ConvParams& params, ConvBackend backend);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights, const ConvParams& params,
                             ConvBackend backend);
template <typename T>
Tensor<T> conv2d_transpose_forward(const Tensor<T>& input, const Tensor<T>& weights,
                                   std::span<const T> bias, const ConvParams& params,
                                   ConvBackend backend);
template <typename T>
ConvGrads<T> conv2d_transpose_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                       const Tensor<T>& weights, const ConvParams& params,
                                       ConvBackend backend);

}  // namespace detail

}  // namespace mbrsep
