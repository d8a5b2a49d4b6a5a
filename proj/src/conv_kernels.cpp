#include "f4flow/conv_kernels.hpp"

#include <cstring>

#if defined(__AVX512F__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace f4flow::kernels {

namespace {

template <typename S>
void conv3d_forward_generic(const S* in, int D, int H, int W, int Ci, const S* w,
                            const S* bias, int Co, S* out) {
  const std::size_t cin = static_cast<std::size_t>(Ci);
  const std::size_t cout = static_cast<std::size_t>(Co);
  for (int z = 0; z < D; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        S* o = out + ((static_cast<std::size_t>(z) * H + y) * W + x) * cout;
        for (std::size_t co = 0; co < cout; ++co) o[co] = bias != nullptr ? bias[co] : S(0);
        for (int dz = -1; dz <= 1; ++dz) {
          const int zz = z + dz;
          if (zz < 0 || zz >= D) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= H) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= W) continue;
              const int tap = ((dz + 1) * 3 + (dy + 1)) * 3 + (dx + 1);
              const S* wtap = w + static_cast<std::size_t>(tap) * cin * cout;
              const S* iv = in + ((static_cast<std::size_t>(zz) * H + yy) * W + xx) * cin;
              for (std::size_t ci = 0; ci < cin; ++ci) {
                const S v = iv[ci];
                const S* wr = wtap + ci * cout;
                for (std::size_t co = 0; co < cout; ++co) o[co] += v * wr[co];
              }
            }
          }
        }
      }
    }
  }
}

template <typename S>
void conv3d_grad_params_generic(const S* in, const S* gout, int D, int H, int W, int Ci,
                                int Co, S* gw, S* gb) {
  const std::size_t cin = static_cast<std::size_t>(Ci);
  const std::size_t cout = static_cast<std::size_t>(Co);
  for (int z = 0; z < D; ++z) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const S* gv = gout + ((static_cast<std::size_t>(z) * H + y) * W + x) * cout;
        for (std::size_t co = 0; co < cout; ++co) gb[co] += gv[co];
        for (int dz = -1; dz <= 1; ++dz) {
          const int zz = z + dz;
          if (zz < 0 || zz >= D) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= H) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= W) continue;
              const int tap = ((dz + 1) * 3 + (dy + 1)) * 3 + (dx + 1);
              S* gw_tap = gw + static_cast<std::size_t>(tap) * cin * cout;
              const S* iv = in + ((static_cast<std::size_t>(zz) * H + yy) * W + xx) * cin;
              for (std::size_t ci = 0; ci < cin; ++ci) {
                const S v = iv[ci];
                S* gwr = gw_tap + ci * cout;
                for (std::size_t co = 0; co < cout; ++co) gwr[co] += v * gv[co];
              }
            }
          }
        }
      }
    }
  }
}

#if defined(__AVX512F__)

// One zmm register covers 16 output channels; x advances four voxels at a
// time so each weight-row load feeds four FMAs.
void conv3d_forward_f32_avx512(const float* in, int D, int H, int W, int Ci, const float* w,
                               const float* bias, int Co, float* out) {
  const std::size_t cin = static_cast<std::size_t>(Ci);
  const std::size_t cout = static_cast<std::size_t>(Co);
  for (int co0 = 0; co0 < Co; co0 += 16) {
    const __m512 bv = bias != nullptr ? _mm512_loadu_ps(bias + co0) : _mm512_setzero_ps();
    for (int z = 0; z < D; ++z) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; x += 4) {
          const int nvox = W - x >= 4 ? 4 : W - x;
          __m512 acc0 = bv, acc1 = bv, acc2 = bv, acc3 = bv;
          for (int dz = -1; dz <= 1; ++dz) {
            const int zz = z + dz;
            if (zz < 0 || zz >= D) continue;
            for (int dy = -1; dy <= 1; ++dy) {
              const int yy = y + dy;
              if (yy < 0 || yy >= H) continue;
              const float* plane = in + (static_cast<std::size_t>(zz) * H + yy) * W * cin;
              for (int dx = -1; dx <= 1; ++dx) {
                const int tap = ((dz + 1) * 3 + (dy + 1)) * 3 + (dx + 1);
                const float* wtap = w + static_cast<std::size_t>(tap) * cin * cout + co0;
                const int x0 = x + dx;
                const bool v0 = x0 >= 0 && x0 < W;
                const bool v1 = nvox > 1 && x0 + 1 >= 0 && x0 + 1 < W;
                const bool v2 = nvox > 2 && x0 + 2 >= 0 && x0 + 2 < W;
                const bool v3 = nvox > 3 && x0 + 3 >= 0 && x0 + 3 < W;
                const std::size_t base = static_cast<std::size_t>(x0 + 1) * cin;  // x0 >= -1
                for (std::size_t ci = 0; ci < cin; ++ci) {
                  const __m512 wv = _mm512_loadu_ps(wtap + ci * cout);
                  if (v0) acc0 = _mm512_fmadd_ps(_mm512_set1_ps(plane[base - cin + ci]), wv, acc0);
                  if (v1) acc1 = _mm512_fmadd_ps(_mm512_set1_ps(plane[base + ci]), wv, acc1);
                  if (v2) acc2 = _mm512_fmadd_ps(_mm512_set1_ps(plane[base + cin + ci]), wv, acc2);
                  if (v3) acc3 = _mm512_fmadd_ps(_mm512_set1_ps(plane[base + 2 * cin + ci]), wv, acc3);
                }
              }
            }
          }
          float* o = out + ((static_cast<std::size_t>(z) * H + y) * W + x) * cout + co0;
          _mm512_storeu_ps(o, acc0);
          if (nvox > 1) _mm512_storeu_ps(o + cout, acc1);
          if (nvox > 2) _mm512_storeu_ps(o + 2 * cout, acc2);
          if (nvox > 3) _mm512_storeu_ps(o + 3 * cout, acc3);
        }
      }
    }
  }
}

// Per tap, a [8ci x 16co] accumulator tile stays in registers while the
// volume streams through once.
void conv3d_grad_params_f32_avx512(const float* in, const float* gout, int D, int H, int W,
                                   int Ci, int Co, float* gw, float* gb) {
  const std::size_t cin = static_cast<std::size_t>(Ci);
  const std::size_t cout = static_cast<std::size_t>(Co);
  const std::size_t nvox = static_cast<std::size_t>(D) * H * W;

  for (int co0 = 0; co0 < Co; co0 += 16) {
    __m512 bacc = _mm512_setzero_ps();
    for (std::size_t p = 0; p < nvox; ++p) {
      bacc = _mm512_add_ps(bacc, _mm512_loadu_ps(gout + p * cout + co0));
    }
    float btmp[16];
    _mm512_storeu_ps(btmp, bacc);
    for (int j = 0; j < 16; ++j) gb[co0 + j] += btmp[j];

    for (int tap = 0; tap < 27; ++tap) {
      const int dz = tap / 9 - 1, dy = (tap / 3) % 3 - 1, dx = tap % 3 - 1;
      for (std::size_t ci0 = 0; ci0 < cin; ci0 += 8) {
        const std::size_t ci_n = cin - ci0 >= 8 ? 8 : cin - ci0;
        __m512 acc[8];
        for (std::size_t j = 0; j < 8; ++j) acc[j] = _mm512_setzero_ps();
        for (int z = 0; z < D; ++z) {
          const int zz = z + dz;
          if (zz < 0 || zz >= D) continue;
          for (int y = 0; y < H; ++y) {
            const int yy = y + dy;
            if (yy < 0 || yy >= H) continue;
            const int xlo = dx < 0 ? 1 : 0;
            const int xhi = dx > 0 ? W - 1 : W;
            const float* grow = gout + ((static_cast<std::size_t>(z) * H + y) * W) * cout + co0;
            const float* irow = in + ((static_cast<std::size_t>(zz) * H + yy) * W) * cin + ci0;
            for (int x = xlo; x < xhi; ++x) {
              const __m512 gv = _mm512_loadu_ps(grow + static_cast<std::size_t>(x) * cout);
              const float* iv = irow + static_cast<std::size_t>(x + dx) * cin;
              for (std::size_t j = 0; j < ci_n; ++j) {
                acc[j] = _mm512_fmadd_ps(_mm512_set1_ps(iv[j]), gv, acc[j]);
              }
            }
          }
        }
        for (std::size_t j = 0; j < ci_n; ++j) {
          float tmp[16];
          _mm512_storeu_ps(tmp, acc[j]);
          float* gwr = gw + (static_cast<std::size_t>(tap) * cin + ci0 + j) * cout + co0;
          for (int k = 0; k < 16; ++k) gwr[k] += tmp[k];
        }
      }
    }
  }
}

#endif  // __AVX512F__

#if defined(__AVX2__)

void conv3d_forward_f32_avx2(const float* in, int D, int H, int W, int Ci, const float* w,
                             const float* bias, int Co, float* out) {
  const std::size_t cin = static_cast<std::size_t>(Ci);
  const std::size_t cout = static_cast<std::size_t>(Co);
  for (int co0 = 0; co0 < Co; co0 += 8) {
    const __m256 bv = bias != nullptr ? _mm256_loadu_ps(bias + co0) : _mm256_setzero_ps();
    for (int z = 0; z < D; ++z) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; x += 4) {
          const int nvox = W - x >= 4 ? 4 : W - x;
          __m256 acc0 = bv, acc1 = bv, acc2 = bv, acc3 = bv;
          for (int dz = -1; dz <= 1; ++dz) {
            const int zz = z + dz;
            if (zz < 0 || zz >= D) continue;
            for (int dy = -1; dy <= 1; ++dy) {
              const int yy = y + dy;
              if (yy < 0 || yy >= H) continue;
              const float* plane = in + (static_cast<std::size_t>(zz) * H + yy) * W * cin;
              for (int dx = -1; dx <= 1; ++dx) {
                const int tap = ((dz + 1) * 3 + (dy + 1)) * 3 + (dx + 1);
                const float* wtap = w + static_cast<std::size_t>(tap) * cin * cout + co0;
                const int x0 = x + dx;
                const bool v0 = x0 >= 0 && x0 < W;
                const bool v1 = nvox > 1 && x0 + 1 >= 0 && x0 + 1 < W;
                const bool v2 = nvox > 2 && x0 + 2 >= 0 && x0 + 2 < W;
                const bool v3 = nvox > 3 && x0 + 3 >= 0 && x0 + 3 < W;
                const std::size_t base = static_cast<std::size_t>(x0 + 1) * cin;  // x0 >= -1
                for (std::size_t ci = 0; ci < cin; ++ci) {
                  const __m256 wv = _mm256_loadu_ps(wtap + ci * cout);
                  if (v0) acc0 = _mm256_fmadd_ps(_mm256_set1_ps(plane[base - cin + ci]), wv, acc0);
                  if (v1) acc1 = _mm256_fmadd_ps(_mm256_set1_ps(plane[base + ci]), wv, acc1);
                  if (v2) acc2 = _mm256_fmadd_ps(_mm256_set1_ps(plane[base + cin + ci]), wv, acc2);
                  if (v3) acc3 = _mm256_fmadd_ps(_mm256_set1_ps(plane[base + 2 * cin + ci]), wv, acc3);
                }
              }
            }
          }
          float* o = out + ((static_cast<std::size_t>(z) * H + y) * W + x) * cout + co0;
          _mm256_storeu_ps(o, acc0);
          if (nvox > 1) _mm256_storeu_ps(o + cout, acc1);
          if (nvox > 2) _mm256_storeu_ps(o + 2 * cout, acc2);
          if (nvox > 3) _mm256_storeu_ps(o + 3 * cout, acc3);
        }
      }
    }
  }
}

#endif  // __AVX2__

}  // namespace

template <typename S>
void conv3d_forward(const S* in, int D, int H, int W, int Ci, const S* w, const S* bias,
                    int Co, S* out) {
  conv3d_forward_generic(in, D, H, W, Ci, w, bias, Co, out);
}

template <>
void conv3d_forward<float>(const float* in, int D, int H, int W, int Ci, const float* w,
                           const float* bias, int Co, float* out) {
#if defined(__AVX512F__)
  if (Co % 16 == 0) {
    conv3d_forward_f32_avx512(in, D, H, W, Ci, w, bias, Co, out);
    return;
  }
#endif
#if defined(__AVX2__)
  if (Co % 8 == 0) {
    conv3d_forward_f32_avx2(in, D, H, W, Ci, w, bias, Co, out);
    return;
  }
#endif
  conv3d_forward_generic(in, D, H, W, Ci, w, bias, Co, out);
}

template <typename S>
void conv3d_grad_params(const S* in, const S* gout, int D, int H, int W, int Ci, int Co,
                        S* gw, S* gb) {
  conv3d_grad_params_generic(in, gout, D, H, W, Ci, Co, gw, gb);
}

template <>
void conv3d_grad_params<float>(const float* in, const float* gout, int D, int H, int W,
                               int Ci, int Co, float* gw, float* gb) {
#if defined(__AVX512F__)
  if (Co % 16 == 0) {
    conv3d_grad_params_f32_avx512(in, gout, D, H, W, Ci, Co, gw, gb);
    return;
  }
#endif
  conv3d_grad_params_generic(in, gout, D, H, W, Ci, Co, gw, gb);
}

template void conv3d_forward<double>(const double*, int, int, int, int, const double*,
                                     const double*, int, double*);
template void conv3d_grad_params<double>(const double*, const double*, int, int, int, int,
                                         int, double*, double*);

}  // namespace f4flow::kernels
