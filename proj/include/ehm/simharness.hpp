// Copyright 2026 The ehm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EHM_SIMHARNESS_HPP_
#define EHM_SIMHARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ehm/core.hpp"
#include "ehm/hierarchy.hpp"

namespace ehm {

// Desk-scale stand-in for a pretraining run: synthetic scenes, an oracle
// similarity whose noise anneals linearly to zero, tree building, and the
// epoch-scheduled evolved masks, with per-epoch diagnostics.
struct SimConfig {
  int height_patches = 8;
  int width_patches = 8;
  int patch_size_px = 16;
  int segment_count = 4;
  int total_epochs = 10;
  double ratio = 0.75;
  double epsilon0 = 0.9;  // oracle noise at epoch 0, annealed as 1 - t/T
  double jitter_std = 0.0;
  uint64_t master_seed = 0;
  int images_per_epoch = 1;
  bool fixed_scene = false;      // reuse one scene instead of one per image
  int fixed_tree_height = 0;     // 0: schedule against each image's height
  Linkage linkage = Linkage::children_average;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double depth = 0.0;  // mean frontier depth across images
  double noise = 0.0;
  int masked_count = 0;
  double purity = 0.0;
  double mean_component_size = 0.0;
  double mean_attention_distance = 0.0;
};

// Seeded Voronoi partition of the grid: segment_count distinct centers drawn
// without replacement, each patch assigned to its nearest center (squared
// Euclidean over patch coordinates), distance ties to the lowest center
// index.
Scene make_scene(const PatchGrid& grid, int segment_count, uint64_t seed);

// Runs the loop. Per-image work is seeded as mix(mix(master, epoch), image)
// and per-epoch values are means reduced in image order, so the result is a
// pure function of the config. If mask_dump_dir is given, the first image's
// mask of each epoch is written there as epoch_<t>.ehmk.
std::vector<EpochReport> run_simulation(
    const SimConfig& config,
    const std::optional<std::filesystem::path>& mask_dump_dir = std::nullopt);

// Report table: one header line, one row per epoch, floats with 6
// significant digits.
void write_reports(const std::vector<EpochReport>& reports, std::ostream& out);

SimConfig load_sim_config(const std::filesystem::path& path);

}  // namespace ehm

#endif  // EHM_SIMHARNESS_HPP_
