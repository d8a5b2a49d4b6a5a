#include "f4flow/patches.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numeric>

namespace f4flow {

namespace {

constexpr std::size_t kLrVoxels = static_cast<std::size_t>(kLrPatch) * kLrPatch * kLrPatch;
constexpr std::size_t kHrVoxels = static_cast<std::size_t>(kHrPatch) * kHrPatch * kHrPatch;

std::size_t cube_index(int n, int x, int y, int z) {
  return static_cast<std::size_t>(x) + static_cast<std::size_t>(n) * (y + static_cast<std::size_t>(n) * z);
}

Tensor<float> interleave(const std::vector<float>& planar, int n, int channels) {
  const std::size_t vox = static_cast<std::size_t>(n) * n * n;
  Tensor<float> t({n, n, n, channels});
  for (int c = 0; c < channels; ++c) {
    const float* src = planar.data() + static_cast<std::size_t>(c) * vox;
    for (std::size_t p = 0; p < vox; ++p) t.data[p * channels + c] = src[p];
  }
  return t;
}

}  // namespace

Tensor<float> lr_vel_tensor(const PatchPair& p) { return interleave(p.lr_vel, kLrPatch, 3); }
Tensor<float> lr_mag_tensor(const PatchPair& p) { return interleave(p.lr_mag, kLrPatch, 1); }
Tensor<float> hr_vel_tensor(const PatchPair& p) { return interleave(p.hr_vel, kHrPatch, 3); }

std::vector<uint8_t> hr_fluid_region(const PatchPair& p) { return p.hr_mask; }

std::vector<uint8_t> hr_nonfluid_region(const PatchPair& p) {
  std::vector<uint8_t> out(p.hr_mask.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.hr_mask[i] ? 0 : 1;
  return out;
}

Dataset extract_patches(const SynthPair& pair, uint16_t source_model, int stride,
                        double min_fluid_frac) {
  require(stride >= 1, "bad-argument", "stride must be >= 1");
  const VolumeGrid& lg = pair.lr.grid();
  const VolumeGrid& hg = pair.hr.grid();
  require(lg.nx >= kLrPatch && lg.ny >= kLrPatch && lg.nz >= kLrPatch, "bad-argument",
          "LR volume smaller than one patch");
  require(hg.nx == 2 * lg.nx && hg.ny == 2 * lg.ny && hg.nz == 2 * lg.nz, "bad-argument",
          "HR grid must be exactly 2x the LR grid");

  const std::size_t min_fluid =
      static_cast<std::size_t>(std::ceil(min_fluid_frac * static_cast<double>(kLrVoxels)));

  auto positions = [&](int extent) {
    std::vector<int> xs;
    for (int p = 0; p + kLrPatch <= extent; p += stride) xs.push_back(p);
    return xs;
  };
  const std::vector<int> xs = positions(lg.nx), ys = positions(lg.ny), zs = positions(lg.nz);

  Dataset out;
  for (int z0 : zs) {
    for (int y0 : ys) {
      for (int x0 : xs) {
        std::size_t fluid = 0;
        for (int z = 0; z < kLrPatch; ++z)
          for (int y = 0; y < kLrPatch; ++y)
            for (int x = 0; x < kLrPatch; ++x)
              fluid += pair.lr.mask.fluid[linear_index(lg, x0 + x, y0 + y, z0 + z)];
        if (fluid < min_fluid) continue;

        PatchPair p;
        p.compartment = static_cast<uint8_t>(pair.lr.compartment);
        p.source_model = source_model;
        p.venc = pair.lr.venc;
        p.lr_mag.resize(kLrVoxels);
        p.lr_vel.resize(3 * kLrVoxels);
        p.hr_vel.resize(3 * kHrVoxels);
        p.hr_mask.resize(kHrVoxels);
        for (int z = 0; z < kLrPatch; ++z) {
          for (int y = 0; y < kLrPatch; ++y) {
            for (int x = 0; x < kLrPatch; ++x) {
              const std::size_t src = linear_index(lg, x0 + x, y0 + y, z0 + z);
              const std::size_t dst = cube_index(kLrPatch, x, y, z);
              p.lr_mag[dst] = pair.lr.magnitude.values[src];
              p.lr_vel[dst] = pair.lr.velocity.vx[src];
              p.lr_vel[kLrVoxels + dst] = pair.lr.velocity.vy[src];
              p.lr_vel[2 * kLrVoxels + dst] = pair.lr.velocity.vz[src];
            }
          }
        }
        const int hx0 = 2 * x0, hy0 = 2 * y0, hz0 = 2 * z0;
        for (int z = 0; z < kHrPatch; ++z) {
          for (int y = 0; y < kHrPatch; ++y) {
            for (int x = 0; x < kHrPatch; ++x) {
              const std::size_t src = linear_index(hg, hx0 + x, hy0 + y, hz0 + z);
              const std::size_t dst = cube_index(kHrPatch, x, y, z);
              p.hr_vel[dst] = pair.hr.velocity.vx[src];
              p.hr_vel[kHrVoxels + dst] = pair.hr.velocity.vy[src];
              p.hr_vel[2 * kHrVoxels + dst] = pair.hr.velocity.vz[src];
              p.hr_mask[dst] = pair.hr.mask.fluid[src];
            }
          }
        }
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

namespace {

/// One right-handed quarter turn. Lattice map and vector map come from the
/// same rotation matrix R:
///   z: (x,y) -> (n-1-y, x),  v -> (-vy, vx, vz)
///   x: (y,z) -> (n-1-z, y),  v -> (vx, -vz, vy)
///   y: (z,x) -> (n-1-x, z),  v -> (vz, vy, -vx)
void quarter_turn_cube(const float* src, float* dst, int n, char axis) {
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int xd = x, yd = y, zd = z;
        switch (axis) {
          case 'z': xd = n - 1 - y; yd = x; break;
          case 'x': yd = n - 1 - z; zd = y; break;
          case 'y': zd = n - 1 - x; xd = z; break;
          default: fail("bad-argument", "axis must be x, y, or z");
        }
        dst[cube_index(n, xd, yd, zd)] = src[cube_index(n, x, y, z)];
      }
    }
  }
}

void quarter_turn_cube_u8(const uint8_t* src, uint8_t* dst, int n, char axis) {
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int xd = x, yd = y, zd = z;
        switch (axis) {
          case 'z': xd = n - 1 - y; yd = x; break;
          case 'x': yd = n - 1 - z; zd = y; break;
          case 'y': zd = n - 1 - x; xd = z; break;
          default: fail("bad-argument", "axis must be x, y, or z");
        }
        dst[cube_index(n, xd, yd, zd)] = src[cube_index(n, x, y, z)];
      }
    }
  }
}

/// Rotates a planar 3-component field one quarter turn: lattice positions
/// move and components transform as v' = R v.
void quarter_turn_vector(const std::vector<float>& src, std::vector<float>& dst, int n,
                         char axis) {
  const std::size_t vox = static_cast<std::size_t>(n) * n * n;
  std::vector<float> vx(src.begin(), src.begin() + vox);
  std::vector<float> vy(src.begin() + vox, src.begin() + 2 * vox);
  std::vector<float> vz(src.begin() + 2 * vox, src.end());
  std::vector<float> rx(vox), ry(vox), rz(vox);
  quarter_turn_cube(vx.data(), rx.data(), n, axis);
  quarter_turn_cube(vy.data(), ry.data(), n, axis);
  quarter_turn_cube(vz.data(), rz.data(), n, axis);
  dst.resize(3 * vox);
  switch (axis) {
    case 'z':
      for (std::size_t i = 0; i < vox; ++i) {
        dst[i] = -ry[i];
        dst[vox + i] = rx[i];
        dst[2 * vox + i] = rz[i];
      }
      break;
    case 'x':
      for (std::size_t i = 0; i < vox; ++i) {
        dst[i] = rx[i];
        dst[vox + i] = -rz[i];
        dst[2 * vox + i] = ry[i];
      }
      break;
    case 'y':
      for (std::size_t i = 0; i < vox; ++i) {
        dst[i] = rz[i];
        dst[vox + i] = ry[i];
        dst[2 * vox + i] = -rx[i];
      }
      break;
    default: fail("bad-argument", "axis must be x, y, or z");
  }
}

}  // namespace

PatchPair rotate_patch(const PatchPair& p, char axis, int quarter_turns) {
  require(axis == 'x' || axis == 'y' || axis == 'z', "bad-argument", "axis must be x, y, or z");
  require(quarter_turns >= 1 && quarter_turns <= 3, "bad-argument",
          "quarter_turns must be in {1,2,3}");
  PatchPair out = p;
  for (int t = 0; t < quarter_turns; ++t) {
    PatchPair next = out;
    std::vector<float> mag(kLrVoxels);
    quarter_turn_cube(out.lr_mag.data(), mag.data(), kLrPatch, axis);
    next.lr_mag = std::move(mag);
    quarter_turn_vector(out.lr_vel, next.lr_vel, kLrPatch, axis);
    quarter_turn_vector(out.hr_vel, next.hr_vel, kHrPatch, axis);
    std::vector<uint8_t> mask(kHrVoxels);
    quarter_turn_cube_u8(out.hr_mask.data(), mask.data(), kHrPatch, axis);
    next.hr_mask = std::move(mask);
    out = std::move(next);
  }
  return out;
}

Dataset augment_with_rotations(const Dataset& patches, int multiplier, uint64_t seed) {
  require(multiplier >= 0 && multiplier <= 9, "bad-argument",
          "rotation multiplier must be in [0,9]");
  struct Rot {
    char axis;
    int turns;
  };
  static constexpr Rot kRotations[9] = {{'x', 1}, {'x', 2}, {'x', 3}, {'y', 1}, {'y', 2},
                                        {'y', 3}, {'z', 1}, {'z', 2}, {'z', 3}};
  Dataset out;
  out.reserve(patches.size() * (1 + multiplier));
  Rng rng(seed);
  for (const PatchPair& p : patches) {
    out.push_back(p);
    std::array<int, 9> order{0, 1, 2, 3, 4, 5, 6, 7, 8};
    for (int i = 8; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_index(static_cast<uint64_t>(i) + 1)]);
    }
    for (int r = 0; r < multiplier; ++r) {
      const Rot rot = kRotations[order[r]];
      out.push_back(rotate_patch(p, rot.axis, rot.turns));
    }
  }
  return out;
}

DatasetSplit split_by_model(const Dataset& patches, std::array<int, 3> ratios, uint64_t seed) {
  require(ratios[0] > 0 && ratios[1] > 0 && ratios[2] > 0, "bad-argument",
          "split ratios must be positive");
  std::map<uint16_t, std::vector<std::size_t>> by_model;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    by_model[patches[i].source_model].push_back(i);
  }
  require(by_model.size() >= 3, "bad-argument",
          "model-wise split needs at least 3 source models, got " +
              std::to_string(by_model.size()));

  struct ModelGroup {
    uint16_t model;
    std::vector<std::size_t> idx;
    uint64_t tie_break;
  };
  std::vector<ModelGroup> groups;
  Rng rng(seed);
  for (auto& [model, idx] : by_model) {
    groups.push_back({model, std::move(idx), rng.next_u64()});
  }
  std::sort(groups.begin(), groups.end(), [](const ModelGroup& a, const ModelGroup& b) {
    if (a.idx.size() != b.idx.size()) return a.idx.size() > b.idx.size();
    return a.tie_break < b.tie_break;
  });

  DatasetSplit split;
  std::array<std::vector<std::size_t>*, 3> bins = {&split.train, &split.validation, &split.test};
  std::array<double, 3> filled = {0.0, 0.0, 0.0};
  for (const ModelGroup& g : groups) {
    // place where the post-assignment fill relative to the ratio is smallest
    int best = 0;
    double best_score = 0.0;
    for (int s = 0; s < 3; ++s) {
      const double score = (filled[s] + static_cast<double>(g.idx.size())) / ratios[s];
      if (s == 0 || score < best_score) {
        best_score = score;
        best = s;
      }
    }
    bins[best]->insert(bins[best]->end(), g.idx.begin(), g.idx.end());
    filled[best] += static_cast<double>(g.idx.size());
  }
  return split;
}

BatchComposition batch_composition(const Dataset& ds, std::span<const std::size_t> batch) {
  BatchComposition comp;
  for (std::size_t i : batch) comp.counts[ds[i].compartment]++;
  return comp;
}

EpochSampler::EpochSampler(std::vector<std::size_t> indices, std::size_t batch_size, Rng& rng)
    : order_(std::move(indices)), batch_size_(batch_size) {
  require(batch_size_ >= 1, "bad-argument", "batch size must be >= 1");
  require(!order_.empty(), "bad-argument", "cannot sample an empty dataset");
  for (std::size_t i = order_.size() - 1; i > 0; --i) {
    std::swap(order_[i], order_[rng.uniform_index(i + 1)]);
  }
}

bool EpochSampler::next(std::vector<std::size_t>& batch) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t end = std::min(cursor_ + batch_size_, order_.size());
  batch.assign(order_.begin() + cursor_, order_.begin() + end);
  cursor_ = end;
  return true;
}

// ---------------------------------------------------------------------------
// F4DP container

namespace {
constexpr char kMagic[4] = {'F', '4', 'D', 'P'};
constexpr uint32_t kVersion = 1;
}  // namespace

void write_dataset(const std::string& path, const Dataset& patches) {
  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  require(f != nullptr, "io", "cannot open '" + tmp + "' for writing");
  auto put = [&](const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f) != n) {
      std::fclose(f);
      std::remove(tmp.c_str());
      fail("io", "short write to '" + tmp + "'");
    }
  };
  put(kMagic, 4);
  const uint32_t version = kVersion;
  put(&version, 4);
  const uint16_t patch_lr = kLrPatch, factor = kSrFactor;
  put(&patch_lr, 2);
  put(&factor, 2);
  const uint64_t count = patches.size();
  put(&count, 8);
  for (const PatchPair& p : patches) {
    put(&p.compartment, 1);
    put(&p.source_model, 2);
    put(&p.venc, 4);
    put(p.lr_mag.data(), kLrVoxels * sizeof(float));
    put(p.lr_vel.data(), 3 * kLrVoxels * sizeof(float));
    put(p.hr_vel.data(), 3 * kHrVoxels * sizeof(float));
    put(p.hr_mask.data(), kHrVoxels);
  }
  require(std::fclose(f) == 0, "io", "close failed for '" + tmp + "'");
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "io", "rename failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "io", "cannot open '" + path + "'");
  auto get = [&](void* p, std::size_t n) {
    if (std::fread(p, 1, n, f) != n) {
      std::fclose(f);
      fail("truncated", "unexpected end of '" + path + "'");
    }
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    std::fclose(f);
    fail("bad-magic", "'" + path + "' is not an F4DP dataset");
  }
  uint32_t version;
  get(&version, 4);
  if (version != kVersion) {
    std::fclose(f);
    fail("bad-version", "unsupported F4DP version");
  }
  uint16_t patch_lr, factor;
  get(&patch_lr, 2);
  get(&factor, 2);
  if (patch_lr != kLrPatch || factor != kSrFactor) {
    std::fclose(f);
    fail("bad-version", "unsupported patch geometry in '" + path + "'");
  }
  uint64_t count;
  get(&count, 8);
  Dataset out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    PatchPair p;
    get(&p.compartment, 1);
    get(&p.source_model, 2);
    get(&p.venc, 4);
    p.lr_mag.resize(kLrVoxels);
    p.lr_vel.resize(3 * kLrVoxels);
    p.hr_vel.resize(3 * kHrVoxels);
    p.hr_mask.resize(kHrVoxels);
    get(p.lr_mag.data(), kLrVoxels * sizeof(float));
    get(p.lr_vel.data(), 3 * kLrVoxels * sizeof(float));
    get(p.hr_vel.data(), 3 * kHrVoxels * sizeof(float));
    get(p.hr_mask.data(), kHrVoxels);
    out.push_back(std::move(p));
  }
  const int c = std::fgetc(f);
  std::fclose(f);
  require(c == EOF, "io", "trailing bytes in '" + path + "'");
  return out;
}

}  // namespace f4flow
