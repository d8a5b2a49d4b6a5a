#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "f4flow/rng.hpp"
#include "f4flow/volume.hpp"

using namespace f4flow;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

VectorField random_velocity(const VolumeGrid& g, uint64_t seed, float scale = 50.0f) {
  Rng rng(seed);
  const std::size_t n = g.voxels();
  VectorField v{g, std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    v.vx[i] = static_cast<float>(rng.uniform(-scale, scale));
    v.vy[i] = static_cast<float>(rng.uniform(-scale, scale));
    v.vz[i] = static_cast<float>(rng.uniform(-scale, scale));
  }
  return v;
}

}  // namespace

TEST_CASE("linear_index follows x-fastest layout") {
  VolumeGrid g{2, 3, 4, 1.0f};
  CHECK(linear_index(g, 0, 0, 0) == 0);
  CHECK(linear_index(g, 1, 2, 3) == 23);  // 1 + 2*(2 + 3*3)
  CHECK_THROWS_AS(linear_index(g, 1, 2, 4), Error);
  CHECK_THROWS_AS(linear_index(g, -1, 0, 0), Error);
}

TEST_CASE("linear_index is a bijection onto [0, voxels)") {
  VolumeGrid g{3, 4, 5, 1.0f};
  std::vector<int> hits(g.voxels(), 0);
  for (int z = 0; z < g.nz; ++z)
    for (int y = 0; y < g.ny; ++y)
      for (int x = 0; x < g.nx; ++x) hits[linear_index(g, x, y, z)]++;
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("F4DV single scalar round-trip") {
  const std::string path = temp_path("f4dv_scalar.f4dv");
  VolumeGrid g{1, 1, 1, 0.5f};
  ScalarField s{g, {42.0f}};
  write_volume(path, {{"m", s}}, g);
  auto [grid, fields] = read_volume(path);
  CHECK(grid == g);
  REQUIRE(fields.size() == 1);
  CHECK(fields[0].name == "m");
  CHECK(std::get<ScalarField>(fields[0].data).values[0] == 42.0f);
  std::remove(path.c_str());
}

TEST_CASE("F4DV zero velocity round-trip is bit exact") {
  const std::string path = temp_path("f4dv_zero.f4dv");
  VolumeGrid g{2, 3, 4, 1.5f};
  VectorField v{g, std::vector<float>(g.voxels(), 0.0f), std::vector<float>(g.voxels(), 0.0f),
                std::vector<float>(g.voxels(), 0.0f)};
  write_volume(path, {{"velocity", v}}, g);
  auto [grid, fields] = read_volume(path);
  const VectorField& rv = std::get<VectorField>(fields[0].data);
  CHECK(rv.vx == v.vx);
  CHECK(rv.vy == v.vy);
  CHECK(rv.vz == v.vz);
  std::remove(path.c_str());
}

TEST_CASE("F4DV byte length matches the layout arithmetic") {
  const std::string path = temp_path("f4dv_len.f4dv");
  VolumeGrid g{8, 8, 8, 1.0f};
  VectorField v = random_velocity(g, 7);
  FluidMask m{g, std::vector<uint8_t>(g.voxels(), 1)};
  write_volume(path, {{"velocity", v}, {"fluid", m}}, g);
  // header: magic4 + version4 + dims12 + dx4 + count2 = 26
  // field 1: 2 + 8 ("velocity") + 1 + 3*4*512
  // field 2: 2 + 5 ("fluid")    + 1 + 512
  const std::size_t expected = 26 + (2 + 8 + 1 + 3 * 4 * 512) + (2 + 5 + 1 + 512);
  CHECK(std::filesystem::file_size(path) == expected);

  auto [grid, fields] = read_volume(path);
  const VectorField& rv = std::get<VectorField>(fields[0].data);
  CHECK(rv.vx == v.vx);
  CHECK(rv.vy == v.vy);
  CHECK(rv.vz == v.vz);
  CHECK(std::get<FluidMask>(fields[1].data).fluid == m.fluid);
  std::remove(path.c_str());
}

TEST_CASE("F4DV rejects mismatched grids before writing") {
  const std::string path = temp_path("f4dv_mismatch.f4dv");
  VolumeGrid g{2, 2, 2, 1.0f};
  VolumeGrid other{2, 2, 4, 1.0f};
  ScalarField s{other, std::vector<float>(other.voxels(), 1.0f)};
  CHECK_THROWS_WITH_AS(write_volume(path, {{"s", s}}, g), doctest::Contains("grid-mismatch"),
                       Error);
  CHECK(!std::filesystem::exists(path));
}

TEST_CASE("F4DV wrong magic yields bad-magic") {
  const std::string path = temp_path("f4dv_magic.f4dv");
  {
    std::ofstream f(path, std::ios::binary);
    f << "XXXXjunkjunkjunkjunkjunk";
  }
  CHECK_THROWS_WITH_AS(read_volume(path), doctest::Contains("bad-magic"), Error);
  std::remove(path.c_str());
}

TEST_CASE("F4DV truncated payload yields truncated") {
  const std::string path = temp_path("f4dv_trunc.f4dv");
  VolumeGrid g{4, 4, 4, 1.0f};
  ScalarField s{g, std::vector<float>(g.voxels(), 3.0f)};
  write_volume(path, {{"field", s}}, g);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 17);
  CHECK_THROWS_WITH_AS(read_volume(path), doctest::Contains("truncated"), Error);
  std::remove(path.c_str());
}

TEST_CASE("F4DV rejects duplicate and oversized names") {
  const std::string path = temp_path("f4dv_names.f4dv");
  VolumeGrid g{1, 1, 1, 1.0f};
  ScalarField s{g, {1.0f}};
  CHECK_THROWS_AS(write_volume(path, {{"a", s}, {"a", s}}, g), Error);
  CHECK_THROWS_AS(write_volume(path, {{std::string(256, 'n'), s}}, g), Error);
}

TEST_CASE("FlowSample validation enforces venc above max component") {
  VolumeGrid g{2, 2, 2, 1.0f};
  const std::size_t n = g.voxels();
  FlowSample s;
  s.magnitude = ScalarField{g, std::vector<float>(n, 1.0f)};
  s.velocity = VectorField{g, std::vector<float>(n, 10.0f), std::vector<float>(n, 0.0f),
                           std::vector<float>(n, 0.0f)};
  s.mask = FluidMask{g, std::vector<uint8_t>(n, 1)};
  s.venc = 10.0f;  // not strictly above
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("aliasing"), Error);
  s.venc = 10.5f;
  CHECK_NOTHROW(s.validate());
}
