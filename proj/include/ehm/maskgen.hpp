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

#ifndef EHM_MASKGEN_HPP_
#define EHM_MASKGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ehm/core.hpp"
#include "ehm/hierarchy.hpp"

namespace ehm {

struct MaskProvenance {
  enum class Kind { evolved, random, grid, block };
  Kind kind = Kind::random;
  int depth = 0;      // evolved
  int stride = 0;     // grid
  uint64_t seed = 0;  // evolved, random, block

  std::string tag() const;
  static MaskProvenance parse_tag(const std::string& tag);
};

// Binary patch mask. bit 0 = masked, bit 1 = visible.
struct Mask {
  PatchGrid grid;
  std::vector<uint8_t> bits;  // tokens() entries, raster order
  int masked_count = 0;
  double ratio = 0.0;  // the ratio the mask was built with
  MaskProvenance provenance;
  // For evolved masks: leaf spans of the selected frontier nodes in selection
  // order, the last one truncated to the exact budget. Not serialized.
  std::vector<std::vector<int>> selected_spans;

  explicit Mask(PatchGrid g) : grid(g), bits(g.tokens(), 1) {}
};

// Depth of the masking frontier for epoch t of total_epochs on a tree of
// height l: 1 + floor(l * t / total_epochs), clamped to [1, l]. Starts at 1
// and reaches l at the last epoch whenever total_epochs >= l.
int mask_depth(int epoch, int total_epochs, int tree_height);

// Masks whole frontier subtrees at the given depth. Frontier nodes are drawn
// uniformly without replacement until their spans cover round(H*W*ratio)
// leaves; the concatenation (selection order, raster order inside a span) is
// truncated to exactly that count.
Mask generate_mask(const HierarchyTree& tree, const PatchGrid& grid, int depth,
                   double ratio, uint64_t seed);

// Exactly round(H*W*ratio) positions drawn uniformly without replacement.
Mask random_mask(const PatchGrid& grid, double ratio, uint64_t seed);

// Regular lattice: visible iff row % s == 0 and col % s == 0, with s the
// smallest stride such that |ratio - (1 - 1/s^2)| <= 0.02. The mask's stored
// ratio is the realized masked fraction of the lattice.
Mask grid_mask(const PatchGrid& grid, double ratio);

// Union of random rectangles (area uniform in [min_block, remaining], aspect
// log-uniform, position uniform) until round(H*W*ratio) patches are covered;
// overshoot is trimmed by un-masking uniformly drawn masked patches.
Mask block_mask(const PatchGrid& grid, double ratio, uint64_t seed,
                int min_block = 16, double aspect_lo = 0.3,
                double aspect_hi = 10.0 / 3.0);

// EHMK text format: "EHMK <H> <W> <ratio> <provenance>" then H rows of W
// characters from {0,1}, 0 = masked. Byte-exact round trip.
void write_mask(const Mask& mask, std::ostream& out);
void write_mask(const Mask& mask, const std::filesystem::path& path);
Mask read_mask(std::istream& in);
Mask read_mask(const std::filesystem::path& path);

}  // namespace ehm

#endif  // EHM_MASKGEN_HPP_
