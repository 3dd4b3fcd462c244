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

#include "ehm/simharness.hpp"

#include <fstream>
#include <ostream>

#include <json.hpp>

#include "ehm/analytics.hpp"
#include "ehm/attention.hpp"
#include "ehm/maskgen.hpp"
#include "ehm/rng.hpp"

namespace ehm {

void SimConfig::validate() const {
  PatchGrid grid(height_patches, width_patches, patch_size_px);
  if (segment_count < 1 || segment_count > grid.tokens()) {
    throw Error(Errc::too_many_segments,
                "segment count must be in [1, patches]");
  }
  if (total_epochs < 1) {
    throw Error(Errc::range_out_of_bounds, "total epochs must be >= 1");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(Errc::range_out_of_bounds, "ratio must be in (0, 1]");
  }
  if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) {
    throw Error(Errc::range_out_of_bounds, "epsilon0 must be in [0, 1]");
  }
  if (!(jitter_std >= 0.0)) {
    throw Error(Errc::range_out_of_bounds, "jitter std must be >= 0");
  }
  if (images_per_epoch < 1) {
    throw Error(Errc::range_out_of_bounds, "images per epoch must be >= 1");
  }
  if (fixed_tree_height < 0) {
    throw Error(Errc::range_out_of_bounds, "fixed tree height must be >= 0");
  }
}

Scene make_scene(const PatchGrid& grid, int segment_count, uint64_t seed) {
  if (segment_count > grid.tokens()) {
    throw Error(Errc::too_many_segments, "more segments than patches");
  }
  if (segment_count < 1) {
    throw Error(Errc::range_out_of_bounds, "segment count must be >= 1");
  }
  SplitMix64 rng(seed);
  const std::vector<int> centers = rng.sample(grid.tokens(), segment_count);
  std::vector<int> segment_of(grid.tokens());
  for (int i = 0; i < grid.tokens(); ++i) {
    const int row = grid.row_of(i);
    const int col = grid.col_of(i);
    int best = 0;
    long long best_dist = -1;
    for (int c = 0; c < segment_count; ++c) {
      const long long dr = row - grid.row_of(centers[c]);
      const long long dc = col - grid.col_of(centers[c]);
      const long long dist = dr * dr + dc * dc;
      if (best_dist < 0 || dist < best_dist) {  // ties keep the lowest index
        best_dist = dist;
        best = c;
      }
    }
    segment_of[i] = best;
  }
  return Scene(grid, std::move(segment_of), segment_count);
}

std::vector<EpochReport> run_simulation(
    const SimConfig& config,
    const std::optional<std::filesystem::path>& mask_dump_dir) {
  config.validate();
  const PatchGrid grid(config.height_patches, config.width_patches,
                       config.patch_size_px);
  const int T = config.total_epochs;
  std::vector<EpochReport> reports;
  reports.reserve(T);

  for (int t = 0; t < T; ++t) {
    const double eps = config.epsilon0 * (1.0 - static_cast<double>(t) / T);
    EpochReport report;
    report.epoch = t;
    report.noise = eps;
    double depth_sum = 0.0;
    double purity_sum = 0.0;
    double component_sum = 0.0;
    double mad_sum = 0.0;

    const uint64_t epoch_seed = SplitMix64::mix(config.master_seed, t);
    for (int image = 0; image < config.images_per_epoch; ++image) {
      const uint64_t item_seed = SplitMix64::mix(epoch_seed, image);
      const uint64_t scene_seed = config.fixed_scene
                                      ? SplitMix64::mix(config.master_seed, 0)
                                      : SplitMix64::mix(item_seed, 0);
      const uint64_t jitter_seed = SplitMix64::mix(item_seed, 1);
      const uint64_t mask_seed = SplitMix64::mix(item_seed, 2);

      const Scene scene = make_scene(grid, config.segment_count, scene_seed);
      const Matd similarity =
          oracle_attention(scene, eps, config.jitter_std, jitter_seed);
      const HierarchyTree tree = build_tree(similarity, config.linkage);
      const int schedule_height = config.fixed_tree_height > 0
                                      ? config.fixed_tree_height
                                      : tree.height();
      const int depth = std::min(mask_depth(t, T, schedule_height),
                                 tree.height());
      const Mask mask =
          generate_mask(tree, grid, depth, config.ratio, mask_seed);

      depth_sum += depth;
      purity_sum += mask_purity(mask, scene).purity;
      component_sum += mask_stats(mask).mean_component_size;
      mad_sum += mean_attention_distance(similarity, grid);
      report.masked_count = mask.masked_count;

      if (mask_dump_dir && image == 0) {
        write_mask(mask, *mask_dump_dir /
                             ("epoch_" + std::to_string(t) + ".ehmk"));
      }
    }
    const double images = config.images_per_epoch;
    report.depth = depth_sum / images;
    report.purity = purity_sum / images;
    report.mean_component_size = component_sum / images;
    report.mean_attention_distance = mad_sum / images;
    reports.push_back(report);
  }
  return reports;
}

void write_reports(const std::vector<EpochReport>& reports,
                   std::ostream& out) {
  out << "epoch depth noise masked_count purity mean_component_size "
         "mean_attention_distance\n";
  for (const EpochReport& r : reports) {
    out << r.epoch << ' ' << format_g6(r.depth) << ' ' << format_g6(r.noise)
        << ' ' << r.masked_count << ' ' << format_g6(r.purity) << ' '
        << format_g6(r.mean_component_size) << ' '
        << format_g6(r.mean_attention_distance) << '\n';
  }
  if (!out) {
    throw Error(Errc::io_error, "write failed");
  }
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_header,
                "bad simulation config: " + std::string(e.what()));
  }
  SimConfig config;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "height_patches") {
        config.height_patches = value.get<int>();
      } else if (key == "width_patches") {
        config.width_patches = value.get<int>();
      } else if (key == "patch_size_px") {
        config.patch_size_px = value.get<int>();
      } else if (key == "segment_count") {
        config.segment_count = value.get<int>();
      } else if (key == "total_epochs") {
        config.total_epochs = value.get<int>();
      } else if (key == "ratio") {
        config.ratio = value.get<double>();
      } else if (key == "epsilon0") {
        config.epsilon0 = value.get<double>();
      } else if (key == "jitter_std") {
        config.jitter_std = value.get<double>();
      } else if (key == "master_seed") {
        config.master_seed = value.get<uint64_t>();
      } else if (key == "images_per_epoch") {
        config.images_per_epoch = value.get<int>();
      } else if (key == "fixed_scene") {
        config.fixed_scene = value.get<bool>();
      } else if (key == "fixed_tree_height") {
        config.fixed_tree_height = value.get<int>();
      } else if (key == "linkage") {
        const std::string name = value.get<std::string>();
        if (name == "children-average") {
          config.linkage = Linkage::children_average;
        } else if (name == "leaf-average") {
          config.linkage = Linkage::leaf_average;
        } else {
          throw Error(Errc::invalid_value, "unknown linkage: " + name);
        }
      } else {
        throw Error(Errc::invalid_value,
                    "unknown simulation config key: " + key);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_value,
                  "bad value for " + key + ": " + std::string(e.what()));
    }
  }
  config.validate();
  return config;
}

}  // namespace ehm
