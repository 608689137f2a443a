#include "mbrsep/conv.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "conv_internal.hpp"

namespace mbrsep {

std::int64_t conv_output_size(std::int64_t input, std::int64_t kernel, std::int64_t stride,
                              Padding padding) {
  if (padding == Padding::kSame) return (input + stride - 1) / stride;
  if (input < kernel) {
    throw std::invalid_argument("conv: Valid padding needs input >= kernel, got input " +
                                std::to_string(input) + " < kernel " + std::to_string(kernel));
  }
  return (input - kernel) / stride + 1;
}

std::int64_t conv_transpose_output_size(std::int64_t input, std::int64_t kernel,
                                        std::int64_t stride, Padding padding) {
  if (padding == Padding::kSame) return input * stride;
  return (input - 1) * stride + kernel;
}

namespace {

using detail::ConvBackend;
using detail::ConvGeom;

std::int64_t same_pad_before(std::int64_t in, std::int64_t out, std::int64_t kernel,
                             std::int64_t stride) {
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

void check_params(const ConvParams& p) {
  if (p.kernel_time < 1 || p.kernel_freq < 1) throw std::invalid_argument("conv: kernel sizes must be >= 1");
  if (p.stride_time < 1 || p.stride_freq < 1) throw std::invalid_argument("conv: strides must be >= 1");
  if (p.out_channels < 1 || p.in_channels < 1) throw std::invalid_argument("conv: channel counts must be >= 1");
}

void check_input(const Tensor<float>&) = delete;

template <typename T>
void check_common(const Tensor<T>& input, const Tensor<T>& weights, std::span<const T> bias,
                  const ConvParams& p, bool transpose) {
  check_params(p);
  if (input.numel() == 0) {
    throw std::invalid_argument("conv: zero-size input " + shape_str(input.shape()));
  }
  if (input.channels() != p.in_channels) {
    throw std::invalid_argument("conv: input channel axis is " + std::to_string(input.channels()) +
                                ", params expect " + std::to_string(p.in_channels));
  }
  const Shape4 want = transpose
                          ? Shape4{p.in_channels, p.out_channels, p.kernel_time, p.kernel_freq}
                          : Shape4{p.out_channels, p.in_channels, p.kernel_time, p.kernel_freq};
  if (weights.shape() != want) {
    throw std::invalid_argument(std::string("conv: weights shaped ") + shape_str(weights.shape()) +
                                ", expected " + shape_str(want));
  }
  if (p.use_bias) {
    if (static_cast<std::int64_t>(bias.size()) != p.out_channels) {
      throw std::invalid_argument("conv: bias length " + std::to_string(bias.size()) +
                                  ", expected out_channels " + std::to_string(p.out_channels));
    }
  } else if (!bias.empty()) {
    throw std::invalid_argument("conv: bias given but use_bias is false");
  }
}

// Geometry with the wide side = conv input.
ConvGeom forward_geom(const Shape4& in, const ConvParams& p) {
  ConvGeom g;
  g.batch = in[0];
  g.ci = p.in_channels;
  g.co = p.out_channels;
  g.nt = in[2];
  g.nf = in[3];
  g.mt = conv_output_size(in[2], p.kernel_time, p.stride_time, p.padding);
  g.mf = conv_output_size(in[3], p.kernel_freq, p.stride_freq, p.padding);
  g.kt = p.kernel_time;
  g.kf = p.kernel_freq;
  g.st = p.stride_time;
  g.sf = p.stride_freq;
  if (p.padding == Padding::kSame) {
    g.pt = same_pad_before(g.nt, g.mt, g.kt, g.st);
    g.pf = same_pad_before(g.nf, g.mf, g.kf, g.sf);
  }
  return g;
}

// Geometry with the wide side = transposed-conv output. The narrow-side
// channel axis carries the transposed conv's input channels, so the
// (in, out, kt, kf) weight layout lines up with W[co,ci,...] as-is.
ConvGeom transpose_geom(const Shape4& in, const ConvParams& p) {
  ConvGeom g;
  g.batch = in[0];
  g.co = p.in_channels;
  g.ci = p.out_channels;
  g.mt = in[2];
  g.mf = in[3];
  g.nt = conv_transpose_output_size(in[2], p.kernel_time, p.stride_time, p.padding);
  g.nf = conv_transpose_output_size(in[3], p.kernel_freq, p.stride_freq, p.padding);
  g.kt = p.kernel_time;
  g.kf = p.kernel_freq;
  g.st = p.stride_time;
  g.sf = p.stride_freq;
  if (p.padding == Padding::kSame) {
    g.pt = same_pad_before(g.nt, g.mt, g.kt, g.st);
    g.pf = same_pad_before(g.nf, g.mf, g.kf, g.sf);
  }
  return g;
}

template <typename T>
void add_bias(Tensor<T>& y, std::span<const T> bias) {
  if (bias.empty()) return;
  const std::int64_t spatial = y.time() * y.freq();
  for (std::int64_t b = 0; b < y.batch(); ++b) {
    for (std::int64_t c = 0; c < y.channels(); ++c) {
      T* row = y.data() + (b * y.channels() + c) * spatial;
      const T v = bias[static_cast<std::size_t>(c)];
      for (std::int64_t i = 0; i < spatial; ++i) row[i] += v;
    }
  }
}

template <typename T>
std::vector<T> channel_sums(const Tensor<T>& g) {
  std::vector<T> out(static_cast<std::size_t>(g.channels()), T(0));
  const std::int64_t spatial = g.time() * g.freq();
  for (std::int64_t b = 0; b < g.batch(); ++b) {
    for (std::int64_t c = 0; c < g.channels(); ++c) {
      const T* row = g.data() + (b * g.channels() + c) * spatial;
      T acc = 0;
      for (std::int64_t i = 0; i < spatial; ++i) acc += row[i];
      out[static_cast<std::size_t>(c)] += acc;
    }
  }
  return out;
}

}  // namespace

namespace detail {

bool use_fft_path(const ConvGeom& g, ConvBackend backend) {
  if (backend == ConvBackend::kDirect) return false;
  if (backend == ConvBackend::kFft) return true;
  static const bool force_direct = std::getenv("MBRSEP_CONV_DIRECT") != nullptr;
  if (force_direct) return false;
  const std::int64_t taps = g.kt * g.kf;
  const std::int64_t direct_cost = g.batch * g.ci * g.co * g.mt * g.mf * taps;
  return taps >= 64 && direct_cost >= (1 << 22);
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, std::span<const T> bias,
                         const ConvParams& params, ConvBackend backend) {
  check_common(input, weights, bias, params, /*transpose=*/false);
  const ConvGeom g = forward_geom(input.shape(), params);
  Tensor<T> y({g.batch, g.co, g.mt, g.mf});
  if (use_fft_path(g, backend)) {
    corr_fft(g, input, weights, y);
  } else {
    corr_direct(g, input, weights, y);
  }
  add_bias(y, bias);
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights, const ConvParams& params,
                             ConvBackend backend) {
  check_common(input, weights, std::span<const T>{}, ConvParams{params}.use_bias = false, false);
  ConvParams p = params;
  const ConvGeom g = forward_geom(input.shape(), p);
  if (grad_out.shape() != Shape4{g.batch, g.co, g.mt, g.mf}) {
    throw std::invalid_argument("conv backward: grad_out shaped " + shape_str(grad_out.shape()) +
                                ", expected " + shape_str({g.batch, g.co, g.mt, g.mf}));
  }
  ConvGrads<T> out;
  out.input = Tensor<T>(input.shape());
  out.weights = Tensor<T>(weights.shape());
  const bool fft = use_fft_path(g, backend);
  if (fft) {
    scatter_fft(g, grad_out, weights, out.input);
    wgrad_fft(g, input, grad_out, out.weights);
  } else {
    scatter_direct(g, grad_out, weights, out.input);
    wgrad_direct(g, input, grad_out, out.weights);
  }
  if (p.use_bias) out.bias = channel_sums(grad_out);
  return out;
}

template <typename T>
Tensor<T> conv2d_transpose_forward(const Tensor<T>& input, const Tensor<T>& weights,
                                   std::span<const T> bias, const ConvParams& params,
                                   ConvBackend backend) {
  check_common(input, weights, bias, params, /*transpose=*/true);
  const ConvGeom g = transpose_geom(input.shape(), params);
  Tensor<T> z({g.batch, g.ci, g.nt, g.nf});
  if (use_fft_path(g, backend)) {
    scatter_fft(g, input, weights, z);
  } else {
    scatter_direct(g, input, weights, z);
  }
  add_bias(z, bias);
  return z;
}

template <typename T>
ConvGrads<T> conv2d_transpose_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                       const Tensor<T>& weights, const ConvParams& params,
                                       ConvBackend backend) {
  check_common(input, weights, std::span<const T>{}, ConvParams{params}.use_bias = false, true);
  const ConvGeom g = transpose_geom(input.shape(), params);
  if (grad_out.shape() != Shape4{g.batch, g.ci, g.nt, g.nf}) {
    throw std::invalid_argument("conv_transpose backward: grad_out shaped " +
                                shape_str(grad_out.shape()) + ", expected " +
                                shape_str({g.batch, g.ci, g.nt, g.nf}));
  }
  ConvGrads<T> out;
  out.input = Tensor<T>(input.shape());
  out.weights = Tensor<T>(weights.shape());
  const bool fft = use_fft_path(g, backend);
  if (fft) {
    corr_fft(g, grad_out, weights, out.input);
    wgrad_fft(g, grad_out, input, out.weights);
  } else {
    corr_direct(g, grad_out, weights, out.input);
    wgrad_direct(g, grad_out, input, out.weights);
  }
  if (params.use_bias) out.bias = channel_sums(grad_out);
  return out;
}

// ---- direct primitives ----

template <typename T>
void corr_direct(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>& y) {
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t co = 0; co < g.co; ++co) {
      for (std::int64_t ut = 0; ut < g.mt; ++ut) {
        for (std::int64_t uf = 0; uf < g.mf; ++uf) {
          T acc = 0;
          for (std::int64_t ci = 0; ci < g.ci; ++ci) {
            for (std::int64_t dt = 0; dt < g.kt; ++dt) {
              const std::int64_t it = ut * g.st + dt - g.pt;
              if (it < 0 || it >= g.nt) continue;
              for (std::int64_t df = 0; df < g.kf; ++df) {
                const std::int64_t jf = uf * g.sf + df - g.pf;
                if (jf < 0 || jf >= g.nf) continue;
                acc += x.at(b, ci, it, jf) * w.at(co, ci, dt, df);
              }
            }
          }
          y.at(b, co, ut, uf) = acc;
        }
      }
    }
  }
}

template <typename T>
void scatter_direct(const ConvGeom& g, const Tensor<T>& grad, const Tensor<T>& w, Tensor<T>& z) {
  // Gather formulation of the scatter: each wide-side element sums the
  // (u, d) pairs that land on it, so iterations are independent.
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t ci = 0; ci < g.ci; ++ci) {
      for (std::int64_t nt = 0; nt < g.nt; ++nt) {
        for (std::int64_t nf = 0; nf < g.nf; ++nf) {
          T acc = 0;
          for (std::int64_t co = 0; co < g.co; ++co) {
            for (std::int64_t dt = 0; dt < g.kt; ++dt) {
              const std::int64_t rt = nt + g.pt - dt;
              if (rt < 0 || rt % g.st != 0) continue;
              const std::int64_t ut = rt / g.st;
              if (ut >= g.mt) continue;
              for (std::int64_t df = 0; df < g.kf; ++df) {
                const std::int64_t rf = nf + g.pf - df;
                if (rf < 0 || rf % g.sf != 0) continue;
                const std::int64_t uf = rf / g.sf;
                if (uf >= g.mf) continue;
                acc += grad.at(b, co, ut, uf) * w.at(co, ci, dt, df);
              }
            }
          }
          z.at(b, ci, nt, nf) = acc;
        }
      }
    }
  }
}

template <typename T>
void wgrad_direct(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& grad, Tensor<T>& gw) {
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t co = 0; co < g.co; ++co) {
    for (std::int64_t ci = 0; ci < g.ci; ++ci) {
      for (std::int64_t dt = 0; dt < g.kt; ++dt) {
        for (std::int64_t df = 0; df < g.kf; ++df) {
          T acc = 0;
          for (std::int64_t b = 0; b < g.batch; ++b) {
            for (std::int64_t ut = 0; ut < g.mt; ++ut) {
              const std::int64_t it = ut * g.st + dt - g.pt;
              if (it < 0 || it >= g.nt) continue;
              for (std::int64_t uf = 0; uf < g.mf; ++uf) {
                const std::int64_t jf = uf * g.sf + df - g.pf;
                if (jf < 0 || jf >= g.nf) continue;
                acc += grad.at(b, co, ut, uf) * x.at(b, ci, it, jf);
              }
            }
          }
          gw.at(co, ci, dt, df) = acc;
        }
      }
    }
  }
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const Tensor<float>&,
                                      std::span<const float>, const ConvParams&, ConvBackend);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Tensor<double>&,
                                       std::span<const double>, const ConvParams&, ConvBackend);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const Tensor<float>&,
                                          const Tensor<float>&, const ConvParams&, ConvBackend);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const Tensor<double>&,
                                           const Tensor<double>&, const ConvParams&, ConvBackend);
template Tensor<float> conv2d_transpose_forward(const Tensor<float>&, const Tensor<float>&,
                                                std::span<const float>, const ConvParams&,
                                                ConvBackend);
template Tensor<double> conv2d_transpose_forward(const Tensor<double>&, const Tensor<double>&,
                                                 std::span<const double>, const ConvParams&,
                                                 ConvBackend);
template ConvGrads<float> conv2d_transpose_backward(const Tensor<float>&, const Tensor<float>&,
                                                    const Tensor<float>&, const ConvParams&,
                                                    ConvBackend);
template ConvGrads<double> conv2d_transpose_backward(const Tensor<double>&, const Tensor<double>&,
                                                     const Tensor<double>&, const ConvParams&,
                                                     ConvBackend);

template void corr_direct(const ConvGeom&, const Tensor<float>&, const Tensor<float>&,
                          Tensor<float>&);
template void corr_direct(const ConvGeom&, const Tensor<double>&, const Tensor<double>&,
                          Tensor<double>&);
template void scatter_direct(const ConvGeom&, const Tensor<float>&, const Tensor<float>&,
                             Tensor<float>&);
template void scatter_direct(const ConvGeom&, const Tensor<double>&, const Tensor<double>&,
                             Tensor<double>&);
template void wgrad_direct(const ConvGeom&, const Tensor<float>&, const Tensor<float>&,
                           Tensor<float>&);
template void wgrad_direct(const ConvGeom&, const Tensor<double>&, const Tensor<double>&,
                           Tensor<double>&);

}  // namespace detail

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, std::span<const T> bias,
                         const ConvParams& params) {
  return detail::conv2d_forward(input, weights, bias, params, detail::ConvBackend::kAuto);
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights, const ConvParams& params) {
  return detail::conv2d_backward(grad_out, input, weights, params, detail::ConvBackend::kAuto);
}

template <typename T>
Tensor<T> conv2d_transpose_forward(const Tensor<T>& input, const Tensor<T>& weights,
                                   std::span<const T> bias, const ConvParams& params) {
  return detail::conv2d_transpose_forward(input, weights, bias, params,
                                          detail::ConvBackend::kAuto);
}

template <typename T>
ConvGrads<T> conv2d_transpose_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                       const Tensor<T>& weights, const ConvParams& params) {
  return detail::conv2d_transpose_backward(grad_out, input, weights, params,
                                           detail::ConvBackend::kAuto);
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const Tensor<float>&,
                                      std::span<const float>, const ConvParams&);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Tensor<double>&,
                                       std::span<const double>, const ConvParams&);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const Tensor<float>&,
                                          const Tensor<float>&, const ConvParams&);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const Tensor<double>&,
                                           const Tensor<double>&, const ConvParams&);
template Tensor<float> conv2d_transpose_forward(const Tensor<float>&, const Tensor<float>&,
                                                std::span<const float>, const ConvParams&);
template Tensor<double> conv2d_transpose_forward(const Tensor<double>&, const Tensor<double>&,
                                                 std::span<const double>, const ConvParams&);
template ConvGrads<float> conv2d_transpose_backward(const Tensor<float>&, const Tensor<float>&,
                                                    const Tensor<float>&, const ConvParams&);
template ConvGrads<double> conv2d_transpose_backward(const Tensor<double>&, const Tensor<double>&,
                                                     const Tensor<double>&, const ConvParams&);

}  // namespace mbrsep
