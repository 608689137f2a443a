#pragma once

#include <cstdint>

#include "mbrsep/conv.hpp"
#include "mbrsep/tensor.hpp"

namespace mbrsep::detail {

// Geometry of one correlation, phrased in conv-forward vocabulary:
// a wide side X (B, ci, NT, NF) and a narrow side Y (B, co, MT, MF) with
// Y[b,co,u] = sum_{ci,d} X[b,ci,u*s+d-p] * W[co,ci,d].
// The transposed convolution and both backward passes are the scatter and
// weight-gradient views of the same geometry.
struct ConvGeom {
  std::int64_t batch = 0;
  std::int64_t ci = 0, co = 0;
  std::int64_t nt = 0, nf = 0;  // wide-side spatial extents
  std::int64_t mt = 0, mf = 0;  // narrow-side spatial extents
  std::int64_t kt = 0, kf = 0;
  std::int64_t st = 1, sf = 1;
  std::int64_t pt = 0, pf = 0;  // pad before, per axis
};

// Y[b,co,u] = sum X[b,ci,u*s+d-p] W[co,ci,d]; W indexed (co, ci, kt, kf).
template <typename T>
void corr_direct(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>& y);
template <typename T>
void corr_fft(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>& y);

// Z[b,ci,n] = sum over (co,u,d) with u*s+d-p == n of G[b,co,u] W[co,ci,d].
template <typename T>
void scatter_direct(const ConvGeom& g, const Tensor<T>& grad, const Tensor<T>& w, Tensor<T>& z);
template <typename T>
void scatter_fft(const ConvGeom& g, const Tensor<T>& grad, const Tensor<T>& w, Tensor<T>& z);

// GW[co,ci,d] = sum_{b,u} G[b,co,u] X[b,ci,u*s+d-p].
template <typename T>
void wgrad_direct(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& grad, Tensor<T>& gw);
template <typename T>
void wgrad_fft(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& grad, Tensor<T>& gw);

bool use_fft_path(const ConvGeom& g, ConvBackend backend);

}  // namespace mbrsep::detail
