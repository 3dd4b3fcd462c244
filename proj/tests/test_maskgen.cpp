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

#include "ehm/maskgen.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "ehm/analytics.hpp"
#include "ehm/attention.hpp"
#include "ehm/rng.hpp"

using namespace ehm;

namespace {

Matd example_matrix() {
  Matd s(4, 4);
  s << 0.0, 0.9, 0.1, 0.1,
       0.9, 0.0, 0.1, 0.1,
       0.1, 0.1, 0.0, 0.8,
       0.1, 0.1, 0.8, 0.0;
  return s;
}

std::string mask_text(const Mask& mask) {
  std::ostringstream out;
  write_mask(mask, out);
  return out.str();
}

// Four equal quadrants on an 8x8 grid.
Scene quadrant_scene() {
  PatchGrid grid(8, 8);
  std::vector<int> seg(grid.tokens());
  for (int i = 0; i < grid.tokens(); ++i) {
    seg[i] = (grid.row_of(i) >= 4 ? 2 : 0) + (grid.col_of(i) >= 4 ? 1 : 0);
  }
  return Scene(grid, std::move(seg), 4);
}

}  // namespace

TEST_CASE("mask depth follows the epoch schedule") {
  CHECK(mask_depth(0, 100, 5) == 1);
  CHECK(mask_depth(50, 100, 5) == 3);
  CHECK(mask_depth(99, 100, 5) == 5);
  CHECK_THROWS_AS(mask_depth(-1, 100, 5), Error);
  CHECK_THROWS_AS(mask_depth(100, 100, 5), Error);
  CHECK_THROWS_AS(mask_depth(0, 0, 5), Error);
}

TEST_CASE("mask depth is nondecreasing and spans [1, l]") {
  for (int total = 1; total <= 24; ++total) {
    for (int height = 1; height <= 10; ++height) {
      int prev = 1;
      for (int t = 0; t < total; ++t) {
        const int h = mask_depth(t, total, height);
        CHECK(h >= 1);
        CHECK(h <= height);
        CHECK(h >= prev);
        prev = h;
      }
      CHECK(mask_depth(0, total, height) == 1);
      if (total >= height) {
        CHECK(mask_depth(total - 1, total, height) == height);
      }
    }
  }
}

TEST_CASE("generate_mask masks the seed-selected subtree first") {
  const HierarchyTree tree = build_tree(example_matrix());
  const PatchGrid grid(2, 2);
  // seed 3 draws frontier index 0, which is the node covering leaves {0,1}
  CHECK(SplitMix64(3).next_below(2) == 0);
  const Mask mask = generate_mask(tree, grid, 2, 0.5, 3);
  CHECK(mask.bits == std::vector<uint8_t>{0, 0, 1, 1});
  CHECK(mask.masked_count == 2);
  CHECK(mask.provenance.kind == MaskProvenance::Kind::evolved);
  CHECK(mask.provenance.depth == 2);
  REQUIRE(mask.selected_spans.size() == 1);
  CHECK(mask.selected_spans[0] == std::vector<int>{0, 1});
}

TEST_CASE("generate_mask trivial ratios") {
  const HierarchyTree tree = build_tree(example_matrix());
  const PatchGrid grid(2, 2);
  SUBCASE("ratio 1 masks everything") {
    const Mask mask = generate_mask(tree, grid, 2, 1.0, 42);
    CHECK(mask.masked_count == 4);
    CHECK(std::count(mask.bits.begin(), mask.bits.end(), 0) == 4);
  }
  SUBCASE("quarter ratio masks one leaf at depth 1") {
    const Mask mask = generate_mask(tree, grid, 1, 0.25, 42);
    CHECK(mask.masked_count == 1);
    CHECK(std::count(mask.bits.begin(), mask.bits.end(), 0) == 1);
  }
}

TEST_CASE("generate_mask validates its inputs") {
  const HierarchyTree tree = build_tree(example_matrix());
  CHECK_THROWS_AS(generate_mask(tree, PatchGrid(2, 3), 1, 0.5, 0), Error);
  CHECK_THROWS_AS(generate_mask(tree, PatchGrid(2, 2), 0, 0.5, 0), Error);
  CHECK_THROWS_AS(generate_mask(tree, PatchGrid(2, 2), 4, 0.5, 0), Error);
  CHECK_THROWS_AS(generate_mask(tree, PatchGrid(2, 2), 1, 0.0, 0), Error);
  CHECK_THROWS_AS(generate_mask(tree, PatchGrid(2, 2), 1, 1.5, 0), Error);
}

TEST_CASE("every selected subtree except the truncated one is whole") {
  const Scene scene = quadrant_scene();
  const Matd s = oracle_attention(scene, 0.0, 0.0, 1);
  const HierarchyTree tree = build_tree(s);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    for (int depth = 1; depth <= tree.height(); ++depth) {
      const Mask mask = generate_mask(tree, scene.grid, depth, 0.75, seed);
      const std::vector<int> frontier = frontier_cut(tree, depth);
      std::set<std::vector<int>> frontier_spans;
      for (int node : frontier) {
        frontier_spans.insert(tree.nodes[node].leaf_span);
      }
      REQUIRE(!mask.selected_spans.empty());
      for (size_t i = 0; i < mask.selected_spans.size(); ++i) {
        const std::vector<int>& span = mask.selected_spans[i];
        for (int leaf : span) CHECK(mask.bits[leaf] == 0);
        if (i + 1 < mask.selected_spans.size()) {
          CHECK(frontier_spans.count(span) == 1);
        }
      }
      int covered = 0;
      for (const auto& span : mask.selected_spans) {
        covered += static_cast<int>(span.size());
      }
      CHECK(covered == mask.masked_count);
    }
  }
}

TEST_CASE("random_mask hits the exact count deterministically") {
  const PatchGrid grid(4, 4);
  const Mask mask = random_mask(grid, 0.75, 7);
  CHECK(mask.masked_count == 12);
  CHECK(std::count(mask.bits.begin(), mask.bits.end(), 0) == 12);
  CHECK(random_mask(grid, 0.75, 7).bits == mask.bits);
  CHECK(random_mask(grid, 1.0, 3).masked_count == 16);
}

TEST_CASE("grid_mask is the anchored lattice") {
  const Mask mask = grid_mask(PatchGrid(4, 4), 0.75);
  CHECK(mask.masked_count == 12);
  CHECK(mask.provenance.stride == 2);
  for (int row = 0; row < 4; ++row) {
    for (int col = 0; col < 4; ++col) {
      const bool visible = row % 2 == 0 && col % 2 == 0;
      CHECK(mask.bits[mask.grid.index(row, col)] == (visible ? 1 : 0));
    }
  }

  const Mask tiny = grid_mask(PatchGrid(2, 2), 0.75);
  CHECK(tiny.bits == std::vector<uint8_t>{1, 0, 0, 0});

  CHECK_THROWS_AS(grid_mask(PatchGrid(4, 4), 0.3), Error);
  try {
    grid_mask(PatchGrid(10, 10), 0.3);
    FAIL("expected UnsupportedRatio");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unsupported_ratio);
  }

  // near-total masking falls on the first stride within tolerance
  const Mask dense = grid_mask(PatchGrid(16, 16), 1.0);
  CHECK(dense.provenance.stride == 8);
  CHECK(dense.masked_count == 256 - 4);
  CHECK(dense.ratio == 252.0 / 256.0);
}

TEST_CASE("block_mask covers the exact budget") {
  const Mask mask = block_mask(PatchGrid(14, 14), 0.75, 11);
  CHECK(mask.masked_count == 147);
  CHECK(std::count(mask.bits.begin(), mask.bits.end(), 0) == 147);
  CHECK(block_mask(PatchGrid(14, 14), 0.75, 11).bits == mask.bits);

  const Mask full = block_mask(PatchGrid(4, 4), 1.0, 5);
  CHECK(full.masked_count == 16);
  CHECK(std::count(full.bits.begin(), full.bits.end(), 0) == 16);

  try {
    block_mask(PatchGrid(3, 3), 0.75, 1);
    FAIL("expected GridTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::grid_too_small);
  }
}

TEST_CASE("seeded generators differ across seeds") {
  const PatchGrid grid(14, 14);
  const HierarchyTree tree =
      build_tree(oracle_attention(quadrant_scene(), 0.0, 0.0, 1));
  int random_same = 0, block_same = 0, evolved_same = 0;
  for (uint64_t pair = 0; pair < 100; ++pair) {
    const uint64_t a = SplitMix64::mix(42, 2 * pair);
    const uint64_t b = SplitMix64::mix(42, 2 * pair + 1);
    random_same += random_mask(grid, 0.75, a).bits ==
                   random_mask(grid, 0.75, b).bits;
    block_same += block_mask(grid, 0.75, a).bits ==
                  block_mask(grid, 0.75, b).bits;
    evolved_same +=
        generate_mask(tree, PatchGrid(8, 8), 3, 0.75, a).bits ==
        generate_mask(tree, PatchGrid(8, 8), 3, 0.75, b).bits;
  }
  CHECK(random_same == 0);
  CHECK(block_same == 0);
  CHECK(evolved_same == 0);
}

TEST_CASE("exact mask ratio holds across grids and ratios") {
  for (const double r : {0.25, 0.5, 0.75, 1.0}) {
    for (const int side : {1, 2, 3, 5, 8, 13, 16}) {
      const PatchGrid grid(side, side + 1);
      const int target =
          static_cast<int>(round_ties_even(grid.tokens() * r));
      CHECK(random_mask(grid, r, 3).masked_count == target);
      if (grid.tokens() >= 16) {
        CHECK(block_mask(grid, r, 3).masked_count == target);
      }
      const HierarchyTree tree =
          build_tree(Matd::Constant(grid.tokens(), grid.tokens(), 0.5));
      const Mask evolved = generate_mask(tree, grid, 2, r, 3);
      CHECK(evolved.masked_count == target);
      CHECK(std::count(evolved.bits.begin(), evolved.bits.end(), 0) ==
            target);
    }
  }
}

TEST_CASE("EHMK round-trips byte for byte") {
  const PatchGrid grid(3, 5);
  for (const Mask& mask :
       {random_mask(grid, 0.5, 77), grid_mask(grid, 0.75),
        block_mask(PatchGrid(4, 4), 0.75, 9),
        generate_mask(build_tree(example_matrix()), PatchGrid(2, 2), 2, 0.5,
                      3)}) {
    const std::string first = mask_text(mask);
    std::istringstream in(first);
    const Mask parsed = read_mask(in);
    CHECK(parsed.masked_count == mask.masked_count);
    CHECK(parsed.bits == mask.bits);
    CHECK(parsed.provenance.kind == mask.provenance.kind);
    CHECK(mask_text(parsed) == first);
  }
}

TEST_CASE("EHMK parser rejects corrupted files") {
  const std::string good = mask_text(random_mask(PatchGrid(2, 3), 0.5, 1));
  SUBCASE("bad magic") {
    std::istringstream in("EHMX" + good.substr(4));
    CHECK_THROWS_AS(read_mask(in), Error);
  }
  SUBCASE("short row") {
    std::string bad = good;
    bad.erase(bad.size() - 2, 1);
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_mask(in), Error);
  }
  SUBCASE("missing row") {
    std::istringstream in(good.substr(0, good.rfind('\n', good.size() - 2)));
    CHECK_THROWS_AS(read_mask(in), Error);
  }
  SUBCASE("stray character") {
    std::string bad = good;
    bad[bad.find('\n') + 1] = '2';
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_mask(in), Error);
  }
}

TEST_CASE("provenance tags parse back to themselves") {
  for (const MaskProvenance& p :
       {MaskProvenance{MaskProvenance::Kind::evolved, 3, 0, 123},
        MaskProvenance{MaskProvenance::Kind::random, 0, 0, 9},
        MaskProvenance{MaskProvenance::Kind::grid, 0, 2, 0},
        MaskProvenance{MaskProvenance::Kind::block, 0, 0, 77}}) {
    const MaskProvenance q = MaskProvenance::parse_tag(p.tag());
    CHECK(q.tag() == p.tag());
  }
  CHECK_THROWS_AS(MaskProvenance::parse_tag("mystery(x=1)"), Error);
}

TEST_CASE("masked components grow with the frontier depth") {
  const Scene scene = quadrant_scene();
  const Matd s = oracle_attention(scene, 0.0, 0.0, 1);
  const HierarchyTree tree = build_tree(s);
  const int height = tree.height();
  const int seeds = 200;
  auto mean_component_size = [&](int h, double ratio) {
    double sum = 0.0;
    for (int seed = 0; seed < seeds; ++seed) {
      const Mask mask = generate_mask(tree, scene.grid, h, ratio,
                                      SplitMix64::mix(2024, seed));
      sum += mask_stats(mask).mean_component_size;
    }
    return sum / seeds;
  };

  // At ratio 0.5 the budget is a whole number of subtrees at every depth of
  // this tree, so components grow monotonically with the frontier depth.
  std::vector<double> at_half(height + 1, 0.0);
  for (int h = 1; h <= height; ++h) at_half[h] = mean_component_size(h, 0.5);
  for (int h = 1; h < height; ++h) {
    CHECK(at_half[h + 1] >= at_half[h] - 1e-9);
  }

  // At ratio 0.75 the truncated last subtree can split off fragments at
  // intermediate depths, so only the coarse trend is stable.
  CHECK(mean_component_size(height, 0.75) > mean_component_size(1, 0.75));
}
