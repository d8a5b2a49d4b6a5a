#include "doctest.h"

#include <cmath>
#include <complex>

#include "f4flow/mrsynth.hpp"
#include "f4flow/phantom.hpp"
#include "oracles.hpp"

using namespace f4flow;

namespace {

ComplexField make_field(const VolumeGrid& g, double re, double im) {
  return ComplexField{g, std::vector<double>(g.voxels(), re),
                      std::vector<double>(g.voxels(), im)};
}

VectorField constant_velocity(const VolumeGrid& g, float vx, float vy, float vz) {
  const std::size_t n = g.voxels();
  return VectorField{g, std::vector<float>(n, vx), std::vector<float>(n, vy),
                     std::vector<float>(n, vz)};
}

}  // namespace

TEST_CASE("encode_signal phase convention") {
  VolumeGrid g{2, 2, 2, 1.0f};
  ScalarField mag{g, std::vector<float>(g.voxels(), 1.0f)};

  SUBCASE("zero velocity maps to (1, 0)") {
    auto s = encode_signal(constant_velocity(g, 0, 0, 0), mag, 100.0f);
    CHECK(s[0].re[0] == doctest::Approx(1.0));
    CHECK(s[0].im[0] == doctest::Approx(0.0));
  }
  SUBCASE("v = venc/2 maps to (0, 1)") {
    auto s = encode_signal(constant_velocity(g, 50, 0, 0), mag, 100.0f);
    CHECK(s[0].re[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s[0].im[0] == doctest::Approx(1.0));
  }
  SUBCASE("v = -venc/2 at half magnitude maps to (0, -0.5)") {
    ScalarField half{g, std::vector<float>(g.voxels(), 0.5f)};
    auto s = encode_signal(constant_velocity(g, -50, 0, 0), half, 100.0f);
    CHECK(s[0].re[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s[0].im[0] == doctest::Approx(-0.5));
  }
  SUBCASE("aliasing is rejected") {
    CHECK_THROWS_WITH_AS(encode_signal(constant_velocity(g, 101, 0, 0), mag, 100.0f),
                         doctest::Contains("aliasing"), Error);
  }
}

TEST_CASE("decode_signal conventions") {
  VolumeGrid g{1, 1, 1, 1.0f};
  SUBCASE("S=(0,1) at venc 100 decodes to 50") {
    std::array<ComplexField, 3> s = {make_field(g, 0, 1), make_field(g, 1, 0),
                                     make_field(g, 1, 0)};
    auto [v, m] = decode_signal(s, 100.0f);
    CHECK(v.vx[0] == doctest::Approx(50.0f));
  }
  SUBCASE("S=(-1,0) decodes to +venc (atan2 branch)") {
    std::array<ComplexField, 3> s = {make_field(g, -1, 0), make_field(g, 1, 0),
                                     make_field(g, 1, 0)};
    auto [v, m] = decode_signal(s, 100.0f);
    CHECK(v.vx[0] == doctest::Approx(100.0f));
  }
  SUBCASE("magnitude is the mean modulus over components") {
    std::array<ComplexField, 3> s = {make_field(g, 3, 4), make_field(g, 0, 1),
                                     make_field(g, 1, 0)};
    auto [v, m] = decode_signal(s, 100.0f);
    CHECK(m.values[0] == doctest::Approx((5.0 + 1.0 + 1.0) / 3.0));
  }
}

TEST_CASE("encode/decode round-trip within 1e-5 relative") {
  VolumeGrid g{8, 8, 8, 1.0f};
  Rng rng(42);
  const float venc = 120.0f;
  const std::size_t n = g.voxels();
  VectorField v{g, std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
  ScalarField mag{g, std::vector<float>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    v.vx[i] = static_cast<float>(rng.uniform(-0.95, 0.95) * venc);
    v.vy[i] = static_cast<float>(rng.uniform(-0.95, 0.95) * venc);
    v.vz[i] = static_cast<float>(rng.uniform(-0.95, 0.95) * venc);
    mag.values[i] = static_cast<float>(rng.uniform(0.1, 2.0));
  }
  auto [vd, md] = decode_signal(encode_signal(v, mag, venc), venc);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::fabs(vd.vx[i] - v.vx[i]) <= 1e-5 * std::fabs(v.vx[i]) + 1e-9);
    CHECK(std::fabs(md.values[i] - mag.values[i]) <= 1e-5 * mag.values[i]);
  }
}

TEST_CASE("add_complex_noise statistics and determinism") {
  VolumeGrid g{100, 100, 100, 1.0f};
  ComplexField s = make_field(g, 0.7, -0.2);

  SUBCASE("sigma zero is the identity") {
    Rng rng(1);
    ComplexField out = add_complex_noise(s, 0.0, rng);
    CHECK(out.re == s.re);
    CHECK(out.im == s.im);
  }
  SUBCASE("empirical std within 2% at 1e6 voxels") {
    Rng rng(7);
    ComplexField out = add_complex_noise(s, 0.1, rng);
    double sum = 0.0, sq = 0.0;
    const std::size_t n = g.voxels();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = out.re[i] - s.re[i];
      sum += d;
      sq += d * d;
    }
    const double std_re = std::sqrt(sq / n - (sum / n) * (sum / n));
    CHECK(std_re > 0.098);
    CHECK(std_re < 0.102);
  }
  SUBCASE("same seed twice gives identical output") {
    Rng a(123), b(123);
    ComplexField s1 = add_complex_noise(s, 0.05, a);
    ComplexField s2 = add_complex_noise(s, 0.05, b);
    CHECK(s1.re == s2.re);
    CHECK(s1.im == s2.im);
  }
  SUBCASE("negative sigma rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(add_complex_noise(s, -0.1, rng), Error);
  }
}

TEST_CASE("kspace_truncate preserves constants") {
  VolumeGrid g{8, 8, 8, 1.0f};
  ComplexField s = make_field(g, 3.25, -1.5);
  ComplexField out = kspace_truncate(s, 2);
  CHECK(out.grid.nx == 4);
  CHECK(out.grid.dx == doctest::Approx(2.0f));
  for (std::size_t i = 0; i < out.grid.voxels(); ++i) {
    CHECK(out.re[i] == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(out.im[i] == doctest::Approx(-1.5).epsilon(1e-12));
  }
}

TEST_CASE("kspace_truncate maps cos(2pi x/8) to cos(2pi x/4) exactly") {
  VolumeGrid g{8, 8, 8, 1.0f};
  ComplexField s = make_field(g, 0.0, 0.0);
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        s.re[linear_index(g, x, y, z)] = std::cos(2.0 * M_PI * x / 8.0);
  ComplexField out = kspace_truncate(s, 2);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const std::size_t i = linear_index(out.grid, x, y, z);
        CHECK(std::fabs(out.re[i] - std::cos(2.0 * M_PI * x / 4.0)) < 1e-10);
        CHECK(std::fabs(out.im[i]) < 1e-10);
      }
}

TEST_CASE("kspace_truncate matches the direct DFT oracle") {
  VolumeGrid g{8, 8, 8, 1.0f};
  Rng rng(11);
  std::vector<std::complex<double>> data(g.voxels());
  for (auto& v : data) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto fast = kspace_truncate_core(data, 8, 8, 8, 2);
  auto direct = oracle::kspace_truncate_direct(data, 8, 8, 8, 2);
  auto rep = oracle::compare(fast, direct);
  CHECK(rep.max_rel_dev < 1e-10);
}

TEST_CASE("kspace_truncate is linear") {
  VolumeGrid g{8, 8, 8, 1.0f};
  Rng rng(13);
  const std::size_t n = g.voxels();
  ComplexField a = make_field(g, 0, 0), b = make_field(g, 0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    a.re[i] = rng.uniform(-1, 1);
    a.im[i] = rng.uniform(-1, 1);
    b.re[i] = rng.uniform(-1, 1);
    b.im[i] = rng.uniform(-1, 1);
  }
  const double ca = 1.7, cb = -0.6;
  ComplexField combo = make_field(g, 0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    combo.re[i] = ca * a.re[i] + cb * b.re[i];
    combo.im[i] = ca * a.im[i] + cb * b.im[i];
  }
  ComplexField ta = kspace_truncate(a, 2), tb = kspace_truncate(b, 2);
  ComplexField tcombo = kspace_truncate(combo, 2);
  for (std::size_t i = 0; i < tcombo.grid.voxels(); ++i) {
    const double expect_re = ca * ta.re[i] + cb * tb.re[i];
    const double expect_im = ca * ta.im[i] + cb * tb.im[i];
    CHECK(std::fabs(tcombo.re[i] - expect_re) <=
          1e-6 * (std::fabs(expect_re) + std::fabs(tcombo.re[i]) + 1e-12));
    CHECK(std::fabs(tcombo.im[i] - expect_im) <=
          1e-6 * (std::fabs(expect_im) + std::fabs(tcombo.im[i]) + 1e-12));
  }
}

TEST_CASE("kspace_truncate retained-band energy is Parseval-consistent") {
  // For unnormalized DFT, sum|F_kept|^2 = m^3 * sum|out_prenorm|^2 where
  // out_prenorm = out * f^3; with out = IDFT(F_kept)/(m^3 f^3).
  VolumeGrid g{8, 8, 8, 1.0f};
  Rng rng(17);
  std::vector<std::complex<double>> data(g.voxels());
  for (auto& v : data) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto spec = oracle::dft3_direct(data, 8, 8, 8);
  double kept_energy = 0.0;
  for (int kz = -2; kz <= 1; ++kz)
    for (int ky = -2; ky <= 1; ++ky)
      for (int kx = -2; kx <= 1; ++kx) {
        const std::size_t i = static_cast<std::size_t>((kx + 8) % 8) +
                              8 * ((ky + 8) % 8 + 8 * static_cast<std::size_t>((kz + 8) % 8));
        kept_energy += std::norm(spec[i]);
      }
  auto out = kspace_truncate_core(data, 8, 8, 8, 2);
  double out_energy = 0.0;
  for (const auto& v : out) out_energy += std::norm(v);
  const double f3 = 8.0;                    // f^3
  const double m3 = 4.0 * 4.0 * 4.0;        // m^3
  CHECK(kept_energy == doctest::Approx(out_energy * f3 * f3 * m3).epsilon(1e-6));
}

TEST_CASE("kspace_truncate rejects odd or indivisible dims") {
  ComplexField odd = make_field(VolumeGrid{7, 8, 8, 1.0f}, 1, 0);
  CHECK_THROWS_AS(kspace_truncate(odd, 2), Error);
  ComplexField not_div = make_field(VolumeGrid{8, 8, 10, 1.0f}, 1, 0);
  CHECK_THROWS_AS(kspace_truncate(not_div, 4), Error);
}

TEST_CASE("synthesize_pair shape contract and noise-free interior recovery") {
  PhantomSpec spec;
  spec.family = Compartment::tube_jet;
  spec.grid = VolumeGrid{24, 24, 24, 1.5f};
  spec.radius = 9.0f;
  spec.center_x = 12.0f;
  spec.center_y = 12.0f;
  spec.peak_speed = 100.0f;
  FlowSample hr = generate_phantom(spec);
  hr.venc = 150.0f;

  SynthPair pair = synthesize_pair(hr, NoiseSpec{0.0, 0});
  CHECK(pair.lr.grid().nx == 12);
  CHECK(pair.lr.grid().dx == doctest::Approx(3.0f));
  CHECK(pair.lr.venc == hr.venc);
  CHECK(pair.sigma == 0.0);

  // slowly varying interior: LR velocity close to HR at matching centers
  // (2x2x2 block around the tube center, away from walls)
  const float hr_center = hr.velocity.at(12, 12, 12)[2];
  const float lr_center = pair.lr.velocity.at(6, 6, 6)[2];
  CHECK(std::fabs(lr_center - hr_center) / hr_center < 0.12);
}

TEST_CASE("synthesize_pair zero-velocity sample keeps decoded noise zero-mean") {
  VolumeGrid g{16, 16, 16, 1.0f};
  const std::size_t n = g.voxels();
  FlowSample hr;
  hr.magnitude = ScalarField{g, std::vector<float>(n, 1.0f)};
  hr.velocity = VectorField{g, std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f),
                            std::vector<float>(n, 0.0f)};
  hr.mask = FluidMask{g, std::vector<uint8_t>(n, 1)};
  hr.venc = 100.0f;

  SynthPair pair = synthesize_pair(hr, NoiseSpec{20.0, 99});
  CHECK(pair.sigma == doctest::Approx(1.0 / 20.0));
  double mean = 0.0, sq = 0.0;
  const std::size_t m = pair.lr.grid().voxels();
  for (std::size_t i = 0; i < m; ++i) {
    mean += pair.lr.velocity.vx[i];
    sq += static_cast<double>(pair.lr.velocity.vx[i]) * pair.lr.velocity.vx[i];
  }
  mean /= m;
  const double sigma_v = std::sqrt(sq / m);
  CHECK(std::fabs(mean) < 3.0 * sigma_v / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("decoded velocity-noise std scales with VENC") {
  VolumeGrid g{32, 32, 32, 1.0f};
  const std::size_t n = g.voxels();
  FlowSample hr;
  hr.magnitude = ScalarField{g, std::vector<float>(n, 1.0f)};
  hr.velocity = VectorField{g, std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f),
                            std::vector<float>(n, 0.0f)};
  hr.mask = FluidMask{g, std::vector<uint8_t>(n, 1)};

  auto velocity_noise_std = [&](float venc) {
    hr.venc = venc;
    SynthPair pair = synthesize_pair(hr, NoiseSpec{15.0, 7});
    double sq = 0.0;
    const std::size_t m = pair.lr.grid().voxels();
    for (std::size_t i = 0; i < m; ++i)
      sq += static_cast<double>(pair.lr.velocity.vx[i]) * pair.lr.velocity.vx[i];
    return std::sqrt(sq / m);
  };
  const double ratio = velocity_noise_std(150.0f) / velocity_noise_std(60.0f);
  CHECK(ratio == doctest::Approx(150.0 / 60.0).epsilon(0.10));
}

TEST_CASE("LR mask majority vote favors fluid on ties") {
  VolumeGrid g{4, 4, 4, 1.0f};
  FluidMask mask{g, std::vector<uint8_t>(g.voxels(), 0)};
  // first 2x2x2 block: exactly 4 of 8 fluid -> tie -> fluid
  mask.fluid[linear_index(g, 0, 0, 0)] = 1;
  mask.fluid[linear_index(g, 1, 0, 0)] = 1;
  mask.fluid[linear_index(g, 0, 1, 0)] = 1;
  mask.fluid[linear_index(g, 1, 1, 0)] = 1;
  // second block at x=2..3: 3 of 8 -> non-fluid
  mask.fluid[linear_index(g, 2, 0, 0)] = 1;
  mask.fluid[linear_index(g, 3, 0, 0)] = 1;
  mask.fluid[linear_index(g, 2, 1, 0)] = 1;
  FluidMask lr = downsample_mask_majority(mask);
  CHECK(lr.at(0, 0, 0));
  CHECK(!lr.at(1, 0, 0));
}

TEST_CASE("synthesize_pair determinism") {
  PhantomSpec spec = make_model_spec(Compartment::cavity_vortex, VolumeGrid{16, 16, 16, 1.5f}, 0, 3);
  FlowSample hr = generate_phantom(spec);
  hr.venc = choose_venc(max_abs_component(hr.velocity), default_venc_candidates());
  SynthPair a = synthesize_pair(hr, NoiseSpec{10.0, 55});
  SynthPair b = synthesize_pair(hr, NoiseSpec{10.0, 55});
  CHECK(a.lr.velocity.vx == b.lr.velocity.vx);
  CHECK(a.lr.magnitude.values == b.lr.magnitude.values);
}
