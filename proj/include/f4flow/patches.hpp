#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "f4flow/mrsynth.hpp"
#include "f4flow/rng.hpp"
#include "f4flow/tensor.hpp"
#include "f4flow/volume.hpp"

namespace f4flow {

inline constexpr int kLrPatch = 12;
inline constexpr int kHrPatch = 24;
inline constexpr int kSrFactor = 2;

/// One training sample: a 12^3 LR window paired with its aligned 24^3 HR
/// target. Velocity arrays are planar (vx, vy, vz concatenated), matching
/// the F4DP record layout.
struct PatchPair {
  uint8_t compartment = 0;
  uint16_t source_model = 0;
  float venc = 0.0f;
  std::vector<float> lr_mag;    // 12^3
  std::vector<float> lr_vel;    // 3 * 12^3
  std::vector<float> hr_vel;    // 3 * 24^3
  std::vector<uint8_t> hr_mask; // 24^3
};

using Dataset = std::vector<PatchPair>;

/// Channels-last views used by the networks.
Tensor<float> lr_vel_tensor(const PatchPair& p);
Tensor<float> lr_mag_tensor(const PatchPair& p);
Tensor<float> hr_vel_tensor(const PatchPair& p);
/// Non-fluid is the complement of the fluid mask.
std::vector<uint8_t> hr_fluid_region(const PatchPair& p);
std::vector<uint8_t> hr_nonfluid_region(const PatchPair& p);

/// Windows slide over the LR grid at `stride`; a window is kept iff its
/// LR fluid-voxel count reaches ceil(min_fluid_frac * 12^3) (87 at 5%).
Dataset extract_patches(const SynthPair& pair, uint16_t source_model, int stride,
                        double min_fluid_frac = 0.05);

/// Exact 90-degree lattice rotation: scalars rotate as scalars, velocity
/// vectors as v' = R v. Bit-exact (pure permutation and negation).
PatchPair rotate_patch(const PatchPair& p, char axis, int quarter_turns);

/// Appends `multiplier` distinct non-identity rotations per patch (seeded
/// choice among the 9 axis/turn combinations), originals first.
Dataset augment_with_rotations(const Dataset& patches, int multiplier, uint64_t seed);

struct DatasetSplit {
  std::vector<std::size_t> train, validation, test;
};

/// Model-wise split: whole source models are assigned to train/val/test by a
/// greedy bin-fill toward the 6:2:2 patch-count ratio. Deterministic per seed.
DatasetSplit split_by_model(const Dataset& patches, std::array<int, 3> ratios, uint64_t seed);

/// Realized per-compartment sample counts of one batch (Eq.-3 bookkeeping).
struct BatchComposition {
  std::map<uint8_t, int> counts;
  int n_compartments() const { return static_cast<int>(counts.size()); }
};

BatchComposition batch_composition(const Dataset& ds, std::span<const std::size_t> batch);

/// Draws batches without replacement from a seeded epoch permutation; every
/// index appears exactly once per epoch.
class EpochSampler {
 public:
  EpochSampler(std::vector<std::size_t> indices, std::size_t batch_size, Rng& rng);
  bool next(std::vector<std::size_t>& batch);

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

/// F4DP dataset container (bit-exact round-trip).
void write_dataset(const std::string& path, const Dataset& patches);
Dataset read_dataset(const std::string& path);

}  // namespace f4flow
