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

#ifndef EHM_ANALYTICS_HPP_
#define EHM_ANALYTICS_HPP_

#include <vector>

#include "ehm/core.hpp"
#include "ehm/hierarchy.hpp"
#include "ehm/maskgen.hpp"

namespace ehm {

// One label per patch, one label value per frontier node at the queried
// depth, numbered in frontier order starting at 0.
struct LabelMap {
  PatchGrid grid;
  std::vector<int> labels;
  int label_count = 0;

  explicit LabelMap(PatchGrid g) : grid(g), labels(g.tokens(), 0) {}
};

struct MaskStats {
  int component_count = 0;        // 4-connected components of masked cells
  double mean_component_size = 0.0;
  double masked_fraction = 0.0;
  double bounding_coverage = 0.0;  // rows+cols touching a masked cell / (H+W)
};

struct PurityReport {
  double purity = 1.0;              // masked-patch-weighted mean over regions
  std::vector<double> per_region;   // one entry per region
};

// Attention-weighted mean distance from each query patch to all patches, in
// pixels. Weights are row-normalized, distances are Euclidean over patch
// coordinates scaled by the patch size. Invariant under positive per-row
// rescaling of the weights.
template <typename Derived>
double mean_attention_distance(const Eigen::MatrixBase<Derived>& weights,
                               const PatchGrid& grid);

// Patch labels induced by the frontier cut at `depth`. Requires
// 1 <= depth <= tree height and a grid matching the tree's leaf count.
LabelMap partition_map(const HierarchyTree& tree, const PatchGrid& grid,
                       int depth);

MaskStats mask_stats(const Mask& mask);

// Purity of the masked area against a ground-truth scene: per region, the
// largest single-segment share of the region. Regions are the selected
// subtree spans when the mask carries evolved provenance and the 4-connected
// masked components otherwise. An empty mask is vacuously pure.
PurityReport mask_purity(const Mask& mask, const Scene& scene);

// 4-connected components of masked (0) cells, as lists of raster indices.
std::vector<std::vector<int>> masked_components(const Mask& mask);

// --- implementation ---

template <typename Derived>
double mean_attention_distance(const Eigen::MatrixBase<Derived>& weights,
                               const PatchGrid& grid) {
  const int n = grid.tokens();
  if (weights.rows() != n || weights.cols() != n) {
    throw Error(Errc::grid_mismatch,
                "weight matrix does not match the patch grid");
  }
  Matd w = weights.template cast<double>();
  Eigen::VectorXd rows(n), cols(n);
  for (int i = 0; i < n; ++i) {
    rows(i) = grid.row_of(i);
    cols(i) = grid.col_of(i);
  }
  double total = 0.0;
  Eigen::VectorXd dist(n);
  for (int q = 0; q < n; ++q) {
    const double row_sum = w.row(q).sum();
    if (!(row_sum > 0.0)) {
      throw Error(Errc::zero_row,
                  "query row " + std::to_string(q) + " has no mass");
    }
    dist = ((rows.array() - rows(q)).square() +
            (cols.array() - cols(q)).square())
               .sqrt();
    total += w.row(q).dot(dist) / row_sum;
  }
  return total / n * grid.patch_size_px;
}

}  // namespace ehm

#endif  // EHM_ANALYTICS_HPP_
