#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "f4flow/volume.hpp"

namespace f4flow {

/// Analytic flow phantom description. Geometry is expressed in voxel units;
/// speeds in cm/s. Each family fills a different hemodynamic niche:
///   tube-jet       straight-to-curved Poiseuille tube, optional stenosis
///   branch-slow    2-4 thin slow vessels (radius <= 3 voxels)
///   cavity-vortex  swirling flow inside an ellipsoid
///   dual-lumen     two curved channels sharing an inlet (held-out family)
struct PhantomSpec {
  Compartment family = Compartment::tube_jet;
  VolumeGrid grid;
  float peak_speed = 120.0f;  // cm/s

  float radius = 8.0f;             // main lumen radius, voxels
  float center_x = 0.0f;           // centerline anchor (voxels); 0 -> grid middle
  float center_y = 0.0f;
  float bow_x = 0.0f;              // sinusoidal centerline bow amplitude, voxels
  float bow_y = 0.0f;
  float stenosis_severity = 0.0f;  // [0, 1]
  int n_branches = 3;              // branch-slow only, 2..4
  float second_peak_ratio = 0.55f; // dual-lumen: second lumen peak / peak_speed
  uint64_t seed = 0;

  void validate() const;
};

/// Default spec for a family with seed-jittered geometry so different
/// model_index values yield distinct vessels of the same family.
PhantomSpec make_model_spec(Compartment family, const VolumeGrid& grid, int model_index,
                            uint64_t root_seed);

/// Default peak speed per family (branch-slow < tube-jet by construction).
float default_peak_speed(Compartment family);

/// Evaluate the phantom: analytic mask + velocity profile, magnitude 1.0 on
/// fluid and 0.05 elsewhere. venc is left 0; assign via choose_venc.
FlowSample generate_phantom(const PhantomSpec& spec);

/// Scale the base field by schedule[t] per frame and assign each frame's
/// VENC with choose_venc over `venc_candidates`.
std::vector<FlowSample> generate_sequence(const PhantomSpec& spec, int n_frames,
                                          std::span<const float> schedule,
                                          std::span<const float> venc_candidates);

/// Smallest candidate >= 1.05 * max_abs_component; falls back to the largest
/// candidate and sets *saturated when even that is too small.
float choose_venc(float max_abs_component, std::span<const float> candidates,
                  bool* saturated = nullptr);

/// Default VENC candidate set, cm/s.
std::span<const float> default_venc_candidates();

/// Max absolute velocity component of a field (the quantity VENC must clear).
float max_abs_component(const VectorField& v);

}  // namespace f4flow
