#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "f4flow/rng.hpp"
#include "f4flow/volume.hpp"

namespace f4flow {

/// Noise model: SNR = mean fluid magnitude / per-channel complex noise std.
struct NoiseSpec {
  double snr = 0.0;  // <= 0 or infinite means noise-free
  uint64_t seed = 0;
  bool after_crop = false;  // add noise to the cropped spectrum's image instead
};

/// High/low resolution synthetic pair. lr dims = hr dims / 2, lr.dx = 2*hr.dx.
struct SynthPair {
  FlowSample hr;  // noise-free reference
  FlowSample lr;  // k-space truncated, noisy
  double sigma = 0.0;  // realized per-channel complex noise std
};

/// Phase-contrast encoding: S_c = M * exp(i*pi*v_c/venc) per component.
/// Throws "aliasing" if any |v| exceeds venc.
std::array<ComplexField, 3> encode_signal(const VectorField& velocity,
                                          const ScalarField& magnitude, float venc);

/// Inverse of encode_signal: v_c = venc*atan2(im,re)/pi, magnitude = mean |S_c|.
std::pair<VectorField, ScalarField> decode_signal(const std::array<ComplexField, 3>& signals,
                                                  float venc);

/// Adds independent N(0, sigma^2) to re and im of every voxel.
ComplexField add_complex_noise(const ComplexField& signal, double sigma, Rng& rng);

/// Centered k-space crop by `factor` per axis with DC-preserving 1/factor^3
/// normalization. Dims must be even and divisible by factor. Output grid
/// spacing is factor*dx.
ComplexField kspace_truncate(const ComplexField& signal, int factor = 2);

/// Double-precision core of kspace_truncate on a bare array (x-fastest
/// layout); the ComplexField overload delegates here. Exposed so tests can
/// compare against the direct-DFT oracle on the same path the product uses.
std::vector<std::complex<double>> kspace_truncate_core(
    std::span<const std::complex<double>> data, int nx, int ny, int nz, int factor);

/// Full synthetic pipeline for one frame: encode -> noise -> k-space
/// truncate (factor 2) -> decode. HR is kept noise-free; the LR mask is a
/// 2^3 majority vote with ties counted as fluid.
SynthPair synthesize_pair(const FlowSample& hr, const NoiseSpec& noise);

/// Downsample a fluid mask by majority vote over 2x2x2 blocks (ties -> fluid).
FluidMask downsample_mask_majority(const FluidMask& mask);

}  // namespace f4flow
