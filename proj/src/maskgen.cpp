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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ehm/rng.hpp"

namespace ehm {

namespace {

void validate_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(Errc::range_out_of_bounds, "mask ratio must be in (0, 1]");
  }
}

int target_count(const PatchGrid& grid, double ratio) {
  return static_cast<int>(round_ties_even(grid.tokens() * ratio));
}

}  // namespace

std::string MaskProvenance::tag() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::evolved:
      out << "evolved(h=" << depth << ",seed=" << seed << ")";
      break;
    case Kind::random:
      out << "random(seed=" << seed << ")";
      break;
    case Kind::grid:
      out << "grid(stride=" << stride << ")";
      break;
    case Kind::block:
      out << "block(seed=" << seed << ")";
      break;
  }
  return out.str();
}

MaskProvenance MaskProvenance::parse_tag(const std::string& tag) {
  const size_t open = tag.find('(');
  if (open == std::string::npos || tag.back() != ')') {
    throw Error(Errc::invalid_value, "bad provenance tag: " + tag);
  }
  MaskProvenance p;
  const std::string kind = tag.substr(0, open);
  if (kind == "evolved") {
    p.kind = Kind::evolved;
  } else if (kind == "random") {
    p.kind = Kind::random;
  } else if (kind == "grid") {
    p.kind = Kind::grid;
  } else if (kind == "block") {
    p.kind = Kind::block;
  } else {
    throw Error(Errc::invalid_value, "unknown provenance kind: " + kind);
  }
  std::string body = tag.substr(open + 1, tag.size() - open - 2);
  std::istringstream fields(body);
  std::string field;
  while (std::getline(fields, field, ',')) {
    const size_t eq = field.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::invalid_value, "bad provenance field: " + field);
    }
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "h") {
      p.depth = std::stoi(value);
    } else if (key == "seed") {
      p.seed = std::stoull(value);
    } else if (key == "stride") {
      p.stride = std::stoi(value);
    } else {
      throw Error(Errc::invalid_value, "unknown provenance field: " + key);
    }
  }
  return p;
}

int mask_depth(int epoch, int total_epochs, int tree_height) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
    throw Error(Errc::epoch_out_of_range, "epoch must be in [0, total)");
  }
  if (tree_height < 1) {
    throw Error(Errc::range_out_of_bounds, "tree height must be >= 1");
  }
  const long long h =
      1 + static_cast<long long>(tree_height) * epoch / total_epochs;
  return static_cast<int>(std::clamp<long long>(h, 1, tree_height));
}

Mask generate_mask(const HierarchyTree& tree, const PatchGrid& grid, int depth,
                   double ratio, uint64_t seed) {
  if (tree.leaf_count != grid.tokens()) {
    throw Error(Errc::leaf_count_mismatch,
                "tree leaves do not match the patch grid");
  }
  if (depth < 1 || depth > tree.height()) {
    throw Error(Errc::depth_out_of_range, "depth outside [1, tree height]");
  }
  validate_ratio(ratio);

  Mask mask(grid);
  mask.ratio = ratio;
  mask.provenance = {MaskProvenance::Kind::evolved, depth, 0, seed};
  const int target = target_count(grid, ratio);

  const std::vector<int> frontier = frontier_cut(tree, depth);
  std::vector<int> order(frontier.size());
  std::iota(order.begin(), order.end(), 0);

  SplitMix64 rng(seed);
  int covered = 0;
  std::vector<int> drawn;
  for (size_t i = 0; i < order.size() && covered < target; ++i) {
    const size_t j =
        i + static_cast<size_t>(rng.next_below(order.size() - i));
    std::swap(order[i], order[j]);
    const int node = frontier[order[i]];
    drawn.push_back(node);
    covered += static_cast<int>(tree.nodes[node].leaf_span.size());
  }

  int remaining = target;
  for (int node : drawn) {
    const std::vector<int>& span = tree.nodes[node].leaf_span;
    const int take = std::min<int>(remaining, static_cast<int>(span.size()));
    std::vector<int> kept(span.begin(), span.begin() + take);
    for (int leaf : kept) mask.bits[leaf] = 0;
    mask.selected_spans.push_back(std::move(kept));
    remaining -= take;
  }
  mask.masked_count = target;
  return mask;
}

Mask random_mask(const PatchGrid& grid, double ratio, uint64_t seed) {
  validate_ratio(ratio);
  Mask mask(grid);
  mask.ratio = ratio;
  mask.provenance = {MaskProvenance::Kind::random, 0, 0, seed};
  const int target = target_count(grid, ratio);
  SplitMix64 rng(seed);
  for (int i : rng.sample(grid.tokens(), target)) mask.bits[i] = 0;
  mask.masked_count = target;
  return mask;
}

Mask grid_mask(const PatchGrid& grid, double ratio) {
  validate_ratio(ratio);
  int stride = 0;
  for (int s = 1; s <= 64; ++s) {
    const double lattice_ratio = 1.0 - 1.0 / (static_cast<double>(s) * s);
    if (std::abs(ratio - lattice_ratio) <= 0.02) {
      stride = s;
      break;
    }
  }
  if (stride == 0) {
    throw Error(Errc::unsupported_ratio,
                "no stride s with ratio close to 1 - 1/s^2");
  }
  Mask mask(grid);
  mask.provenance = {MaskProvenance::Kind::grid, 0, stride, 0};
  int masked = 0;
  for (int row = 0; row < grid.height_patches; ++row) {
    for (int col = 0; col < grid.width_patches; ++col) {
      if (row % stride == 0 && col % stride == 0) continue;
      mask.bits[grid.index(row, col)] = 0;
      ++masked;
    }
  }
  mask.masked_count = masked;
  // The lattice cannot hit arbitrary ratios exactly, so the stored ratio is
  // the realized masked fraction.
  mask.ratio = static_cast<double>(masked) / grid.tokens();
  return mask;
}

Mask block_mask(const PatchGrid& grid, double ratio, uint64_t seed,
                int min_block, double aspect_lo, double aspect_hi) {
  validate_ratio(ratio);
  if (min_block < 1 || !(aspect_lo > 0.0) || !(aspect_hi >= aspect_lo)) {
    throw Error(Errc::range_out_of_bounds, "bad block mask parameters");
  }
  if (grid.tokens() < min_block) {
    throw Error(Errc::grid_too_small,
                "grid smaller than the minimum block size");
  }
  Mask mask(grid);
  mask.ratio = ratio;
  mask.provenance = {MaskProvenance::Kind::block, 0, 0, seed};
  const int target = target_count(grid, ratio);
  mask.masked_count = target;
  if (target == 0) return mask;

  const int h = grid.height_patches;
  const int w = grid.width_patches;
  SplitMix64 rng(seed);
  int masked = 0;
  int stalled = 0;
  const double log_lo = std::log(aspect_lo);
  const double log_hi = std::log(aspect_hi);
  while (masked < target && stalled < 64) {
    const int remaining = target - masked;
    const int hi_area = std::max(min_block, remaining);
    const int area =
        min_block + static_cast<int>(rng.next_below(hi_area - min_block + 1));
    const double aspect =
        std::exp(log_lo + rng.next_double() * (log_hi - log_lo));
    const int rect_h = std::clamp<int>(
        static_cast<int>(std::llround(std::sqrt(area * aspect))), 1, h);
    const int rect_w = std::clamp<int>(
        static_cast<int>(std::llround(std::sqrt(area / aspect))), 1, w);
    const int row0 = static_cast<int>(rng.next_below(h - rect_h + 1));
    const int col0 = static_cast<int>(rng.next_below(w - rect_w + 1));
    int gained = 0;
    for (int row = row0; row < row0 + rect_h; ++row) {
      for (int col = col0; col < col0 + rect_w; ++col) {
        uint8_t& bit = mask.bits[grid.index(row, col)];
        if (bit == 1) {
          bit = 0;
          ++gained;
        }
      }
    }
    masked += gained;
    stalled = gained == 0 ? stalled + 1 : 0;
  }
  if (masked < target) {
    // Rectangles stopped making progress; fill from the visible cells.
    std::vector<int> visible;
    for (int i = 0; i < grid.tokens(); ++i) {
      if (mask.bits[i] == 1) visible.push_back(i);
    }
    for (int pick :
         rng.sample(static_cast<int>(visible.size()), target - masked)) {
      mask.bits[visible[pick]] = 0;
    }
    masked = target;
  }
  if (masked > target) {
    std::vector<int> masked_ids;
    for (int i = 0; i < grid.tokens(); ++i) {
      if (mask.bits[i] == 0) masked_ids.push_back(i);
    }
    for (int pick :
         rng.sample(static_cast<int>(masked_ids.size()), masked - target)) {
      mask.bits[masked_ids[pick]] = 1;
    }
  }
  return mask;
}

void write_mask(const Mask& mask, std::ostream& out) {
  out << "EHMK " << mask.grid.height_patches << ' '
      << mask.grid.width_patches << ' ' << format_g6(mask.ratio) << ' '
      << mask.provenance.tag() << '\n';
  for (int row = 0; row < mask.grid.height_patches; ++row) {
    for (int col = 0; col < mask.grid.width_patches; ++col) {
      out << (mask.bits[mask.grid.index(row, col)] ? '1' : '0');
    }
    out << '\n';
  }
  if (!out) {
    throw Error(Errc::io_error, "write failed");
  }
}

void write_mask(const Mask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot open " + path.string() +
                                    " for writing");
  }
  write_mask(mask, out);
}

Mask read_mask(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Errc::malformed_header, "empty EHMK file");
  }
  std::istringstream header(line);
  std::string magic, tag;
  int height = 0, width = 0;
  double ratio = 0.0;
  if (!(header >> magic >> height >> width >> ratio >> tag) ||
      magic != "EHMK") {
    throw Error(Errc::malformed_header, "bad EHMK header");
  }
  if (height < 1 || width < 1) {
    throw Error(Errc::malformed_header, "bad EHMK dimensions");
  }
  Mask mask{PatchGrid(height, width)};
  mask.ratio = ratio;
  mask.provenance = MaskProvenance::parse_tag(tag);
  int masked = 0;
  for (int row = 0; row < height; ++row) {
    if (!std::getline(in, line)) {
      throw Error(Errc::dimension_mismatch, "missing EHMK rows");
    }
    if (static_cast<int>(line.size()) != width) {
      throw Error(Errc::dimension_mismatch, "EHMK row width mismatch");
    }
    for (int col = 0; col < width; ++col) {
      if (line[col] == '0') {
        mask.bits[mask.grid.index(row, col)] = 0;
        ++masked;
      } else if (line[col] != '1') {
        throw Error(Errc::invalid_value, "EHMK rows must be 0/1");
      }
    }
  }
  if (std::getline(in, line) && !line.empty()) {
    throw Error(Errc::dimension_mismatch, "trailing content in EHMK file");
  }
  mask.masked_count = masked;
  return mask;
}

Mask read_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  return read_mask(in);
}

}  // namespace ehm
