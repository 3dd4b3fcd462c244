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

#include "ehm/analytics.hpp"

#include <algorithm>
#include <unordered_map>

namespace ehm {

LabelMap partition_map(const HierarchyTree& tree, const PatchGrid& grid,
                       int depth) {
  if (grid.tokens() != tree.leaf_count) {
    throw Error(Errc::grid_mismatch, "grid does not match the tree's leaves");
  }
  if (depth < 1 || depth > tree.height()) {
    throw Error(Errc::depth_out_of_range, "depth outside [1, tree height]");
  }
  const std::vector<int> frontier = frontier_cut(tree, depth);
  LabelMap map(grid);
  map.label_count = static_cast<int>(frontier.size());
  for (size_t label = 0; label < frontier.size(); ++label) {
    for (int leaf : tree.nodes[frontier[label]].leaf_span) {
      map.labels[leaf] = static_cast<int>(label);
    }
  }
  return map;
}

std::vector<std::vector<int>> masked_components(const Mask& mask) {
  const PatchGrid& grid = mask.grid;
  std::vector<std::vector<int>> components;
  std::vector<uint8_t> seen(grid.tokens(), 0);
  std::vector<int> stack;
  for (int start = 0; start < grid.tokens(); ++start) {
    if (mask.bits[start] != 0 || seen[start]) continue;
    std::vector<int> component;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      component.push_back(cell);
      const int row = grid.row_of(cell);
      const int col = grid.col_of(cell);
      const int neighbors[4][2] = {
          {row - 1, col}, {row + 1, col}, {row, col - 1}, {row, col + 1}};
      for (const auto& [nr, nc] : neighbors) {
        if (nr < 0 || nr >= grid.height_patches || nc < 0 ||
            nc >= grid.width_patches) {
          continue;
        }
        const int ni = grid.index(nr, nc);
        if (mask.bits[ni] == 0 && !seen[ni]) {
          seen[ni] = 1;
          stack.push_back(ni);
        }
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  return components;
}

MaskStats mask_stats(const Mask& mask) {
  const PatchGrid& grid = mask.grid;
  MaskStats stats;
  int masked = 0;
  std::vector<uint8_t> row_hit(grid.height_patches, 0);
  std::vector<uint8_t> col_hit(grid.width_patches, 0);
  for (int i = 0; i < grid.tokens(); ++i) {
    if (mask.bits[i] == 0) {
      ++masked;
      row_hit[grid.row_of(i)] = 1;
      col_hit[grid.col_of(i)] = 1;
    }
  }
  const auto components = masked_components(mask);
  stats.component_count = static_cast<int>(components.size());
  stats.mean_component_size =
      components.empty() ? 0.0
                         : static_cast<double>(masked) / components.size();
  stats.masked_fraction = static_cast<double>(masked) / grid.tokens();
  const int rows_covered =
      static_cast<int>(std::count(row_hit.begin(), row_hit.end(), 1));
  const int cols_covered =
      static_cast<int>(std::count(col_hit.begin(), col_hit.end(), 1));
  stats.bounding_coverage =
      static_cast<double>(rows_covered + cols_covered) /
      (grid.height_patches + grid.width_patches);
  return stats;
}

PurityReport mask_purity(const Mask& mask, const Scene& scene) {
  if (mask.grid.height_patches != scene.grid.height_patches ||
      mask.grid.width_patches != scene.grid.width_patches) {
    throw Error(Errc::grid_mismatch, "mask and scene grids differ");
  }
  std::vector<std::vector<int>> regions;
  if (mask.provenance.kind == MaskProvenance::Kind::evolved &&
      !mask.selected_spans.empty()) {
    regions = mask.selected_spans;
  } else {
    regions = masked_components(mask);
  }

  PurityReport report;
  if (regions.empty()) {
    report.purity = 1.0;  // vacuous: nothing is masked
    return report;
  }
  double weighted = 0.0;
  int total = 0;
  std::unordered_map<int, int> votes;
  for (const std::vector<int>& region : regions) {
    votes.clear();
    int best = 0;
    for (int cell : region) {
      const int count = ++votes[scene.segment_of[cell]];
      best = std::max(best, count);
    }
    const double purity = static_cast<double>(best) / region.size();
    report.per_region.push_back(purity);
    weighted += purity * region.size();
    total += static_cast<int>(region.size());
  }
  report.purity = weighted / total;
  return report;
}

}  // namespace ehm
