#pragma once

#include <cstddef>

// Low-level 3^3 "same"-padded convolution kernels on [D,H,W,C] buffers with
// weights [3,3,3,Ci,Co] (tap-major, Co fastest). The float versions carry
// AVX-512/AVX2 fast paths; everything else runs the portable loops.

namespace f4flow::kernels {

template <typename S>
void conv3d_forward(const S* in, int D, int H, int W, int Ci, const S* w, const S* bias,
                    int Co, S* out);

/// Accumulates weight and bias gradients (buffers must be pre-zeroed):
///   gw[t][ci][co] += sum_p gout[p][co] * in[p + delta(t) - 1][ci]
///   gb[co]        += sum_p gout[p][co]
template <typename S>
void conv3d_grad_params(const S* in, const S* gout, int D, int H, int W, int Ci, int Co,
                        S* gw, S* gb);

extern template void conv3d_forward<float>(const float*, int, int, int, int, const float*,
                                           const float*, int, float*);
extern template void conv3d_forward<double>(const double*, int, int, int, int, const double*,
                                            const double*, int, double*);
extern template void conv3d_grad_params<float>(const float*, const float*, int, int, int, int,
                                               int, float*, float*);
extern template void conv3d_grad_params<double>(const double*, const double*, int, int, int,
                                                int, int, double*, double*);

}  // namespace f4flow::kernels
