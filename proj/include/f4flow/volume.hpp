#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "f4flow/errors.hpp"

namespace f4flow {

/// Uniform isotropic voxel grid. Linear layout is x-fastest:
/// index = x + nx*(y + ny*z). All indexing goes through linear_index().
struct VolumeGrid {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  float dx = 1.0f;  // isotropic spacing, mm

  std::size_t voxels() const { return static_cast<std::size_t>(nx) * ny * nz; }
  bool operator==(const VolumeGrid&) const = default;

  void validate() const {
    require(nx >= 1 && ny >= 1 && nz >= 1, "bad-argument", "grid dims must be >= 1");
    require(dx > 0.0f, "bad-argument", "grid spacing must be > 0");
  }
};

/// Checked x-fastest linear index. Throws "out-of-range" on bad coordinates.
inline std::size_t linear_index(const VolumeGrid& g, int x, int y, int z) {
  require(x >= 0 && x < g.nx && y >= 0 && y < g.ny && z >= 0 && z < g.nz,
          "out-of-range", "voxel (" + std::to_string(x) + "," + std::to_string(y) + "," +
                              std::to_string(z) + ") outside grid");
  return static_cast<std::size_t>(x) +
         static_cast<std::size_t>(g.nx) * (static_cast<std::size_t>(y) +
                                           static_cast<std::size_t>(g.ny) * static_cast<std::size_t>(z));
}

struct ScalarField {
  VolumeGrid grid;
  std::vector<float> values;

  float& at(int x, int y, int z) { return values[linear_index(grid, x, y, z)]; }
  float at(int x, int y, int z) const { return values[linear_index(grid, x, y, z)]; }
};

/// 3-component velocity field, cm/s. Components stored as separate arrays.
struct VectorField {
  VolumeGrid grid;
  std::vector<float> vx, vy, vz;

  std::array<float, 3> at(int x, int y, int z) const {
    const std::size_t i = linear_index(grid, x, y, z);
    return {vx[i], vy[i], vz[i]};
  }
};

/// Complex MR signal carrier. Stored in double: these fields are transient
/// (never serialized) and the k-space path is verified against a
/// double-precision oracle.
struct ComplexField {
  VolumeGrid grid;
  std::vector<double> re, im;
};

struct FluidMask {
  VolumeGrid grid;
  std::vector<uint8_t> fluid;  // 0/1

  bool at(int x, int y, int z) const { return fluid[linear_index(grid, x, y, z)] != 0; }
  std::size_t fluid_count() const {
    std::size_t n = 0;
    for (uint8_t f : fluid) n += (f != 0);
    return n;
  }
};

/// Phantom family / cardiovascular compartment analog.
enum class Compartment : uint8_t {
  tube_jet = 0,
  branch_slow = 1,
  cavity_vortex = 2,
  dual_lumen = 3,
};

const char* to_string(Compartment c);
Compartment compartment_from_string(const std::string& name);

/// One time frame of one model: magnitude, velocity, fluid mask, VENC.
struct FlowSample {
  ScalarField magnitude;
  VectorField velocity;
  FluidMask mask;
  float venc = 0.0f;  // cm/s
  Compartment compartment = Compartment::tube_jet;
  int frame = 0;

  const VolumeGrid& grid() const { return velocity.grid; }
  void validate() const;
};

/// A named field inside an F4DV container.
struct NamedField {
  std::string name;
  std::variant<ScalarField, VectorField, FluidMask> data;
};

/// Write fields to the F4DV container format (see README). All fields must
/// share `grid`; names must be unique and at most 255 bytes. The write is
/// atomic: a temp file is renamed into place on success.
void write_volume(const std::string& path, const std::vector<NamedField>& fields,
                  const VolumeGrid& grid);

/// Exact inverse of write_volume. Errors: "bad-magic", "bad-version",
/// "truncated", "io".
std::pair<VolumeGrid, std::vector<NamedField>> read_volume(const std::string& path);

/// FlowSample convenience wrappers over F4DV ("magnitude", "velocity", "fluid").
/// VENC, compartment, and frame travel in the manifest, not the container.
void write_flow_sample(const std::string& path, const FlowSample& s);
FlowSample read_flow_sample(const std::string& path, float venc, Compartment compartment,
                            int frame);

}  // namespace f4flow
