#pragma once

// Deliberately naive reference implementations used only by tests. These
// share no computation with the library paths they validate: the DFT is the
// textbook triple sum, metrics are per-voxel scalar loops, and gradients
// come from central finite differences.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "f4flow/volume.hpp"

namespace f4flow::oracle {

struct OracleReport {
  double max_abs_dev = 0.0;
  double max_rel_dev = 0.0;
  std::size_t worst_index = 0;
};

/// Direct O(N^2) 3D DFT, forward (negative exponent), unnormalized.
std::vector<std::complex<double>> dft3_direct(std::span<const std::complex<double>> data,
                                              int nx, int ny, int nz);

/// Direct inverse DFT, unnormalized (no 1/N^3).
std::vector<std::complex<double>> idft3_direct(std::span<const std::complex<double>> spectrum,
                                               int nx, int ny, int nz);

/// Reference k-space truncation: dft3_direct -> centered crop -> idft3_direct
/// -> 1/(nx*ny*nz) scale. Mirrors the contract of kspace_truncate_core while
/// sharing none of its code.
std::vector<std::complex<double>> kspace_truncate_direct(
    std::span<const std::complex<double>> data, int nx, int ny, int nz, int factor);

OracleReport compare(std::span<const std::complex<double>> a,
                     std::span<const std::complex<double>> b);

/// Scalar-loop evaluation metrics (Eq.-style definitions re-derived
/// independently): RE over the region, per-component RMSE, through-origin
/// regression slope and R^2.
struct NaiveMetrics {
  double re = 0.0;
  double rmse[3] = {0, 0, 0};
  double k[3] = {0, 0, 0};
  double r2[3] = {0, 0, 0};
  std::size_t n_region = 0;
};

NaiveMetrics metrics_naive(const VectorField& pred, const VectorField& ref,
                           const FluidMask& region);

}  // namespace f4flow::oracle
