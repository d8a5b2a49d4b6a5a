#include "f4flow/mrsynth.hpp"

#include <fftw3.h>

#include <cmath>

namespace f4flow {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_complex(const ComplexField& f) {
  const std::size_t n = f.grid.voxels();
  require(f.re.size() == n && f.im.size() == n, "bad-argument",
          "ComplexField length does not match grid");
}

}  // namespace

std::array<ComplexField, 3> encode_signal(const VectorField& velocity,
                                          const ScalarField& magnitude, float venc) {
  require(velocity.grid == magnitude.grid, "grid-mismatch",
          "velocity and magnitude grids differ");
  require(venc > 0.0f, "bad-argument", "venc must be positive");
  const std::size_t n = velocity.grid.voxels();
  std::array<const std::vector<float>*, 3> comps = {&velocity.vx, &velocity.vy, &velocity.vz};
  std::array<ComplexField, 3> out;
  for (int c = 0; c < 3; ++c) {
    ComplexField& s = out[c];
    s.grid = velocity.grid;
    s.re.resize(n);
    s.im.resize(n);
    const std::vector<float>& v = *comps[c];
    for (std::size_t i = 0; i < n; ++i) {
      require(std::fabs(v[i]) <= venc, "aliasing",
              "velocity component exceeds venc; increase venc");
      const double phase = kPi * static_cast<double>(v[i]) / static_cast<double>(venc);
      const double m = static_cast<double>(magnitude.values[i]);
      s.re[i] = m * std::cos(phase);
      s.im[i] = m * std::sin(phase);
    }
  }
  return out;
}

std::pair<VectorField, ScalarField> decode_signal(const std::array<ComplexField, 3>& signals,
                                                  float venc) {
  for (const ComplexField& s : signals) {
    check_complex(s);
    require(s.grid == signals[0].grid, "grid-mismatch", "signal grids differ");
  }
  const VolumeGrid& grid = signals[0].grid;
  const std::size_t n = grid.voxels();
  VectorField vel{grid, std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
  ScalarField mag{grid, std::vector<float>(n)};
  std::array<std::vector<float>*, 3> comps = {&vel.vx, &vel.vy, &vel.vz};
  for (std::size_t i = 0; i < n; ++i) {
    double msum = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double re = signals[c].re[i];
      const double im = signals[c].im[i];
      (*comps[c])[i] =
          static_cast<float>(static_cast<double>(venc) * std::atan2(im, re) / kPi);
      msum += std::hypot(re, im);
    }
    mag.values[i] = static_cast<float>(msum / 3.0);
  }
  return {std::move(vel), std::move(mag)};
}

ComplexField add_complex_noise(const ComplexField& signal, double sigma, Rng& rng) {
  check_complex(signal);
  require(sigma >= 0.0, "bad-argument", "noise sigma must be >= 0");
  ComplexField out = signal;
  if (sigma == 0.0) return out;
  const std::size_t n = signal.grid.voxels();
  for (std::size_t i = 0; i < n; ++i) {
    out.re[i] += sigma * rng.gaussian();
    out.im[i] += sigma * rng.gaussian();
  }
  return out;
}

std::vector<std::complex<double>> kspace_truncate_core(
    std::span<const std::complex<double>> data, int nx, int ny, int nz, int factor) {
  require(factor >= 1, "bad-argument", "factor must be >= 1");
  require(nx % 2 == 0 && ny % 2 == 0 && nz % 2 == 0, "bad-argument",
          "kspace_truncate requires even dims");
  require(nx % factor == 0 && ny % factor == 0 && nz % factor == 0, "bad-argument",
          "dims must be divisible by factor");
  require(data.size() == static_cast<std::size_t>(nx) * ny * nz, "bad-argument",
          "data length does not match dims");

  const int mx = nx / factor, my = ny / factor, mz = nz / factor;
  std::vector<std::complex<double>> spectrum(data.size());
  {
    // FFTW's canonical layout is row-major (last index fastest); our arrays
    // are x-fastest, so x is FFTW's last dimension: dims passed as (nz,ny,nx).
    std::vector<std::complex<double>> input(data.begin(), data.end());
    fftw_plan plan = fftw_plan_dft_3d(
        nz, ny, nx, reinterpret_cast<fftw_complex*>(input.data()),
        reinterpret_cast<fftw_complex*>(spectrum.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    require(plan != nullptr, "bad-argument", "FFT plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  // Retain centered frequencies k in [-n/(2f), n/(2f)-1] per axis; map each
  // kept frequency onto the small grid via mod-m index arithmetic.
  std::vector<std::complex<double>> small(static_cast<std::size_t>(mx) * my * mz);
  auto keep_range = [](int n, int m) {
    // signed frequencies -m/2 .. m/2-1 of the n-point spectrum
    return std::pair<int, int>(-m / 2, m / 2 - 1);
  };
  const auto [kx0, kx1] = keep_range(nx, mx);
  const auto [ky0, ky1] = keep_range(ny, my);
  const auto [kz0, kz1] = keep_range(nz, mz);
  for (int kz = kz0; kz <= kz1; ++kz) {
    const int src_z = (kz + nz) % nz;
    const int dst_z = (kz + mz) % mz;
    for (int ky = ky0; ky <= ky1; ++ky) {
      const int src_y = (ky + ny) % ny;
      const int dst_y = (ky + my) % my;
      for (int kx = kx0; kx <= kx1; ++kx) {
        const int src_x = (kx + nx) % nx;
        const int dst_x = (kx + mx) % mx;
        small[static_cast<std::size_t>(dst_x) + static_cast<std::size_t>(mx) * (dst_y + static_cast<std::size_t>(my) * dst_z)] =
            spectrum[static_cast<std::size_t>(src_x) + static_cast<std::size_t>(nx) * (src_y + static_cast<std::size_t>(ny) * src_z)];
      }
    }
  }

  std::vector<std::complex<double>> out(small.size());
  {
    fftw_plan plan = fftw_plan_dft_3d(
        mz, my, mx, reinterpret_cast<fftw_complex*>(small.data()),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    require(plan != nullptr, "bad-argument", "FFT plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  // Unnormalized forward+backward contribute m^3; DC preservation needs a
  // further 1/f^3, so the combined scale is 1/(m^3 f^3) = 1/n^3.
  const double scale = 1.0 / (static_cast<double>(nx) * ny * nz);
  for (std::complex<double>& v : out) v *= scale;
  return out;
}

ComplexField kspace_truncate(const ComplexField& signal, int factor) {
  check_complex(signal);
  const VolumeGrid& g = signal.grid;
  const std::size_t n = g.voxels();
  std::vector<std::complex<double>> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = {signal.re[i], signal.im[i]};
  std::vector<std::complex<double>> out =
      kspace_truncate_core(data, g.nx, g.ny, g.nz, factor);
  ComplexField result;
  result.grid = VolumeGrid{g.nx / factor, g.ny / factor, g.nz / factor, g.dx * factor};
  result.re.resize(out.size());
  result.im.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    result.re[i] = out[i].real();
    result.im[i] = out[i].imag();
  }
  return result;
}

FluidMask downsample_mask_majority(const FluidMask& mask) {
  const VolumeGrid& g = mask.grid;
  require(g.nx % 2 == 0 && g.ny % 2 == 0 && g.nz % 2 == 0, "bad-argument",
          "mask dims must be even");
  VolumeGrid lg{g.nx / 2, g.ny / 2, g.nz / 2, g.dx * 2};
  FluidMask out{lg, std::vector<uint8_t>(lg.voxels())};
  for (int z = 0; z < lg.nz; ++z) {
    for (int y = 0; y < lg.ny; ++y) {
      for (int x = 0; x < lg.nx; ++x) {
        int count = 0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              count += mask.fluid[linear_index(g, 2 * x + dx, 2 * y + dy, 2 * z + dz)];
        out.fluid[linear_index(lg, x, y, z)] = count >= 4 ? 1 : 0;
      }
    }
  }
  return out;
}

SynthPair synthesize_pair(const FlowSample& hr, const NoiseSpec& noise) {
  hr.validate();
  const VolumeGrid& g = hr.grid();
  require(g.nx % 2 == 0 && g.ny % 2 == 0 && g.nz % 2 == 0, "bad-argument",
          "synthesize_pair requires even HR dims");

  double sigma = 0.0;
  if (noise.snr > 0.0 && std::isfinite(noise.snr)) {
    double fluid_mag = 0.0;
    std::size_t fluid_n = 0;
    for (std::size_t i = 0; i < g.voxels(); ++i) {
      if (hr.mask.fluid[i]) {
        fluid_mag += hr.magnitude.values[i];
        ++fluid_n;
      }
    }
    require(fluid_n > 0, "bad-argument", "sample has no fluid voxels");
    sigma = (fluid_mag / static_cast<double>(fluid_n)) / noise.snr;
  }

  std::array<ComplexField, 3> signals = encode_signal(hr.velocity, hr.magnitude, hr.venc);
  Rng rng(noise.seed);
  for (int c = 0; c < 3; ++c) {
    if (sigma > 0.0 && !noise.after_crop) signals[c] = add_complex_noise(signals[c], sigma, rng);
    signals[c] = kspace_truncate(signals[c], 2);
    if (sigma > 0.0 && noise.after_crop) signals[c] = add_complex_noise(signals[c], sigma, rng);
  }
  auto [lr_vel, lr_mag] = decode_signal(signals, hr.venc);

  SynthPair pair;
  pair.hr = hr;
  pair.sigma = sigma;
  pair.lr.velocity = std::move(lr_vel);
  pair.lr.magnitude = std::move(lr_mag);
  pair.lr.mask = downsample_mask_majority(hr.mask);
  pair.lr.venc = hr.venc;
  pair.lr.compartment = hr.compartment;
  pair.lr.frame = hr.frame;
  return pair;
}

}  // namespace f4flow
