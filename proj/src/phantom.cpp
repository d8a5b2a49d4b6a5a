#include "f4flow/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "f4flow/rng.hpp"

namespace f4flow {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr float kBackgroundMagnitude = 0.05f;

struct Centerline {
  // x(z) = cx + bow_x*sin(pi*z/(nz-1)) + dir_x*sep(z), same for y
  double cx, cy, bow_x, bow_y;
  double dir_x = 0.0, dir_y = 0.0;  // separation direction (dual-lumen)
  double sep_scale = 0.0;           // separation amplitude, voxels
  double sep_onset = 0.35;          // fraction of nz over which lumens split
  int nz = 1;

  static double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
  }

  double sep(double z) const {
    if (sep_scale == 0.0) return 0.0;
    return sep_scale * smoothstep(z / (sep_onset * std::max(1, nz - 1)));
  }
  double sep_deriv(double z) const {
    if (sep_scale == 0.0) return 0.0;
    const double w = sep_onset * std::max(1, nz - 1);
    const double t = z / w;
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return sep_scale * (6.0 * t - 6.0 * t * t) / w;
  }

  double x(double z) const { return cx + bow_x * std::sin(kPi * z / std::max(1, nz - 1)) + dir_x * sep(z); }
  double y(double z) const { return cy + bow_y * std::sin(kPi * z / std::max(1, nz - 1)) + dir_y * sep(z); }
  double dx(double z) const {
    return bow_x * kPi / std::max(1, nz - 1) * std::cos(kPi * z / std::max(1, nz - 1)) +
           dir_x * sep_deriv(z);
  }
  double dy(double z) const {
    return bow_y * kPi / std::max(1, nz - 1) * std::cos(kPi * z / std::max(1, nz - 1)) +
           dir_y * sep_deriv(z);
  }
};

struct Tube {
  Centerline line;
  double radius;
  double peak;
  double stenosis = 0.0;  // severity in [0,1]
  double sten_center = 0.0, sten_width = 1.0;

  // Local narrowing factor in (0,1]; radius shrinks, peak grows by 1/f^2.
  double narrow(double z) const {
    if (stenosis <= 0.0) return 1.0;
    const double u = (z - sten_center) / sten_width;
    return 1.0 - stenosis * std::exp(-u * u);
  }

  /// Normalized radial coordinate r/R(z) at a voxel; >= 1 means outside.
  double rho(double x, double y, double z) const {
    const double r = std::hypot(x - line.x(z), y - line.y(z));
    return r / (radius * narrow(z));
  }

  /// Poiseuille speed at the voxel (0 outside the lumen).
  double speed(double x, double y, double z) const {
    const double f = narrow(z);
    const double rr = rho(x, y, z);
    if (rr >= 1.0) return 0.0;
    return (peak / (f * f)) * (1.0 - rr * rr);
  }

  void velocity(double x, double y, double z, double out[3]) const {
    const double s = speed(x, y, z);
    double tx = line.dx(z), ty = line.dy(z), tz = 1.0;
    const double norm = std::sqrt(tx * tx + ty * ty + tz * tz);
    out[0] = s * tx / norm;
    out[1] = s * ty / norm;
    out[2] = s * tz / norm;
  }
};

FlowSample alloc_sample(const PhantomSpec& spec) {
  const VolumeGrid& g = spec.grid;
  const std::size_t n = g.voxels();
  FlowSample s;
  s.magnitude = ScalarField{g, std::vector<float>(n, kBackgroundMagnitude)};
  s.velocity = VectorField{g, std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f),
                           std::vector<float>(n, 0.0f)};
  s.mask = FluidMask{g, std::vector<uint8_t>(n, 0)};
  s.compartment = spec.family;
  return s;
}

void paint_tubes(FlowSample& s, const std::vector<Tube>& tubes) {
  const VolumeGrid& g = s.grid();
  for (int z = 0; z < g.nz; ++z) {
    for (int y = 0; y < g.ny; ++y) {
      for (int x = 0; x < g.nx; ++x) {
        const Tube* best = nullptr;
        double best_rho = 1.0;
        for (const Tube& t : tubes) {
          const double rr = t.rho(x, y, z);
          if (rr < best_rho) {
            best_rho = rr;
            best = &t;
          }
        }
        if (best == nullptr) continue;
        const std::size_t i = linear_index(g, x, y, z);
        double v[3];
        best->velocity(x, y, z, v);
        s.velocity.vx[i] = static_cast<float>(v[0]);
        s.velocity.vy[i] = static_cast<float>(v[1]);
        s.velocity.vz[i] = static_cast<float>(v[2]);
        s.mask.fluid[i] = 1;
        s.magnitude.values[i] = 1.0f;
      }
    }
  }
}

double grid_center(int n) { return static_cast<double>(n / 2); }

void check_fits(const PhantomSpec& spec, double needed_radius) {
  const double max_r = 0.5 * std::min(spec.grid.nx, spec.grid.ny);
  require(needed_radius < max_r, "bad-argument",
          "phantom geometry exceeds grid extent (radius " + std::to_string(needed_radius) +
              " vs half-width " + std::to_string(max_r) + ")");
}

FlowSample generate_tube_jet(const PhantomSpec& spec) {
  check_fits(spec, spec.radius + std::max(spec.bow_x, spec.bow_y));
  Tube t;
  t.line.cx = spec.center_x > 0.0f ? spec.center_x : grid_center(spec.grid.nx);
  t.line.cy = spec.center_y > 0.0f ? spec.center_y : grid_center(spec.grid.ny);
  t.line.bow_x = spec.bow_x;
  t.line.bow_y = spec.bow_y;
  t.line.nz = spec.grid.nz;
  t.radius = spec.radius;
  t.peak = spec.peak_speed;
  t.stenosis = spec.stenosis_severity;
  t.sten_center = 0.5 * (spec.grid.nz - 1);
  t.sten_width = 0.15 * spec.grid.nz;

  FlowSample s = alloc_sample(spec);
  paint_tubes(s, {t});
  return s;
}

FlowSample generate_branch_slow(const PhantomSpec& spec) {
  require(spec.n_branches >= 2 && spec.n_branches <= 4, "bad-argument",
          "branch-slow needs 2..4 branches");
  Rng rng(spec.seed);
  const double speed_cap = 0.25 * default_peak_speed(Compartment::tube_jet);
  std::vector<Tube> tubes;
  for (int b = 0; b < spec.n_branches; ++b) {
    Tube t;
    // Branches spread over the cross-section on a seeded ring.
    const double angle = 2.0 * kPi * (b + rng.uniform(0.0, 0.5)) / spec.n_branches;
    const double ring = 0.28 * std::min(spec.grid.nx, spec.grid.ny);
    t.line.cx = grid_center(spec.grid.nx) + ring * std::cos(angle);
    t.line.cy = grid_center(spec.grid.ny) + ring * std::sin(angle);
    t.line.bow_x = rng.uniform(0.0, 2.0);
    t.line.bow_y = rng.uniform(0.0, 2.0);
    t.line.nz = spec.grid.nz;
    t.radius = std::min(3.0, std::max(1.5, static_cast<double>(spec.radius)));
    t.peak = std::min(static_cast<double>(spec.peak_speed), speed_cap) * rng.uniform(0.6, 1.0);
    tubes.push_back(t);
  }
  for (const Tube& t : tubes) check_fits(spec, t.radius + std::max(t.line.bow_x, t.line.bow_y));

  FlowSample s = alloc_sample(spec);
  paint_tubes(s, tubes);
  return s;
}

FlowSample generate_cavity_vortex(const PhantomSpec& spec) {
  const double cx = grid_center(spec.grid.nx);
  const double cy = grid_center(spec.grid.ny);
  const double cz = grid_center(spec.grid.nz);
  const double a = std::min(1.6 * spec.radius, 0.47 * spec.grid.nx);
  const double b = std::min(1.4 * spec.radius, 0.47 * spec.grid.ny);
  const double c = std::min(1.2 * spec.radius, 0.47 * spec.grid.nz);
  check_fits(spec, std::max({a, b, 1.0}) - 0.5);
  const double swirl_r = spec.radius;

  FlowSample s = alloc_sample(spec);
  const VolumeGrid& g = spec.grid;
  for (int z = 0; z < g.nz; ++z) {
    for (int y = 0; y < g.ny; ++y) {
      for (int x = 0; x < g.nx; ++x) {
        const double ex = (x - cx) / a, ey = (y - cy) / b, ez = (z - cz) / c;
        if (ex * ex + ey * ey + ez * ez >= 1.0) continue;
        const std::size_t i = linear_index(g, x, y, z);
        s.mask.fluid[i] = 1;
        s.magnitude.values[i] = 1.0f;
        const double rx = x - cx, ry = y - cy;
        const double r = std::hypot(rx, ry);
        if (r > 1e-12) {
          // solid-body core with exponential decay beyond the swirl radius
          const double vt = spec.peak_speed * (r / swirl_r) * std::exp(1.0 - r / swirl_r);
          s.velocity.vx[i] = static_cast<float>(-vt * ry / r);
          s.velocity.vy[i] = static_cast<float>(vt * rx / r);
        }
      }
    }
  }
  return s;
}

FlowSample generate_dual_lumen(const PhantomSpec& spec) {
  Rng rng(spec.seed);
  const double sep = 0.22 * std::min(spec.grid.nx, spec.grid.ny);
  const double theta = rng.uniform(0.0, 2.0 * kPi);

  Tube main, second;
  main.line.cx = grid_center(spec.grid.nx);
  main.line.cy = grid_center(spec.grid.ny);
  main.line.nz = spec.grid.nz;
  main.line.dir_x = std::cos(theta);
  main.line.dir_y = std::sin(theta);
  main.line.sep_scale = sep;
  main.line.bow_x = spec.bow_x;
  main.radius = 0.75 * spec.radius;
  main.peak = spec.peak_speed;

  second = main;
  second.line.dir_x = -0.8 * main.line.dir_x;
  second.line.dir_y = -0.8 * main.line.dir_y;
  second.line.bow_x = 0.0;
  second.line.bow_y = spec.bow_y;
  second.radius = 0.6 * spec.radius;
  second.peak = spec.second_peak_ratio * spec.peak_speed;

  check_fits(spec, main.radius + sep);

  FlowSample s = alloc_sample(spec);
  paint_tubes(s, {main, second});
  return s;
}

}  // namespace

void PhantomSpec::validate() const {
  grid.validate();
  require(peak_speed > 0.0f, "bad-argument", "peak_speed must be > 0");
  require(radius > 0.0f, "bad-argument", "radius must be > 0");
  require(stenosis_severity >= 0.0f && stenosis_severity <= 1.0f, "bad-argument",
          "stenosis severity must be in [0,1]");
}

float default_peak_speed(Compartment family) {
  switch (family) {
    case Compartment::tube_jet: return 120.0f;
    case Compartment::branch_slow: return 25.0f;
    case Compartment::cavity_vortex: return 60.0f;
    case Compartment::dual_lumen: return 100.0f;
  }
  fail("bad-argument", "unknown compartment");
}

PhantomSpec make_model_spec(Compartment family, const VolumeGrid& grid, int model_index,
                            uint64_t root_seed) {
  Rng rng(child_seed(root_seed, static_cast<uint64_t>(family) * 1000 + model_index));
  PhantomSpec spec;
  spec.family = family;
  spec.grid = grid;
  spec.seed = rng.next_u64();
  spec.peak_speed = default_peak_speed(family) * static_cast<float>(rng.uniform(0.85, 1.15));
  const double base_radius = 0.25 * std::min(grid.nx, grid.ny);
  spec.radius = static_cast<float>(base_radius * rng.uniform(0.8, 1.1));
  spec.bow_x = static_cast<float>(rng.uniform(0.0, 2.5));
  spec.bow_y = static_cast<float>(rng.uniform(0.0, 2.5));
  spec.n_branches = 2 + static_cast<int>(rng.uniform_index(3));
  if (family == Compartment::tube_jet && model_index % 2 == 1) {
    spec.stenosis_severity = static_cast<float>(rng.uniform(0.2, 0.5));
  }
  if (family == Compartment::branch_slow) {
    spec.radius = static_cast<float>(rng.uniform(1.8, 3.0));
  }
  if (family == Compartment::dual_lumen) {
    spec.second_peak_ratio = static_cast<float>(rng.uniform(0.4, 0.7));
  }
  return spec;
}

FlowSample generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Compartment::tube_jet: return generate_tube_jet(spec);
    case Compartment::branch_slow: return generate_branch_slow(spec);
    case Compartment::cavity_vortex: return generate_cavity_vortex(spec);
    case Compartment::dual_lumen: return generate_dual_lumen(spec);
  }
  fail("bad-argument", "unknown phantom family");
}

float max_abs_component(const VectorField& v) {
  float m = 0.0f;
  for (std::size_t i = 0; i < v.grid.voxels(); ++i) {
    m = std::max({m, std::fabs(v.vx[i]), std::fabs(v.vy[i]), std::fabs(v.vz[i])});
  }
  return m;
}

float choose_venc(float max_abs, std::span<const float> candidates, bool* saturated) {
  require(!candidates.empty(), "bad-argument", "venc candidate list is empty");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require(candidates[i] > 0.0f, "bad-argument", "venc candidates must be positive");
    if (i > 0) {
      require(candidates[i] > candidates[i - 1], "bad-argument",
              "venc candidates must be ascending");
    }
  }
  if (saturated != nullptr) *saturated = false;
  const float needed = 1.05f * max_abs;
  for (float c : candidates) {
    if (c >= needed) return c;
  }
  if (saturated != nullptr) *saturated = true;
  return candidates.back();
}

std::span<const float> default_venc_candidates() {
  static const float kCandidates[] = {25.0f, 50.0f, 100.0f, 150.0f, 300.0f};
  return kCandidates;
}

std::vector<FlowSample> generate_sequence(const PhantomSpec& spec, int n_frames,
                                          std::span<const float> schedule,
                                          std::span<const float> venc_candidates) {
  require(n_frames >= 1, "bad-argument", "n_frames must be >= 1");
  require(!schedule.empty(), "bad-argument", "amplitude schedule is empty");
  require(static_cast<int>(schedule.size()) == n_frames, "bad-argument",
          "schedule length must equal n_frames");
  for (float a : schedule) {
    require(a > 0.0f && a <= 1.0f, "bad-argument", "schedule values must be in (0,1]");
  }

  const FlowSample base = generate_phantom(spec);
  std::vector<FlowSample> frames;
  frames.reserve(n_frames);
  for (int t = 0; t < n_frames; ++t) {
    FlowSample f = base;
    const float a = schedule[t];
    for (std::size_t i = 0; i < f.grid().voxels(); ++i) {
      f.velocity.vx[i] *= a;
      f.velocity.vy[i] *= a;
      f.velocity.vz[i] *= a;
    }
    f.frame = t;
    f.venc = choose_venc(max_abs_component(f.velocity), venc_candidates);
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace f4flow
