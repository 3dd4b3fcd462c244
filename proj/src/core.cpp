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

#include "ehm/core.hpp"

#include <cstdio>

namespace ehm {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::io_error: return "IoError";
    case Errc::malformed_header: return "MalformedHeader";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::invalid_value: return "InvalidValue";
    case Errc::range_out_of_bounds: return "RangeOutOfBounds";
    case Errc::not_symmetric: return "NotSymmetric";
    case Errc::negative_entry: return "NegativeEntry";
    case Errc::empty_matrix: return "EmptyMatrix";
    case Errc::ancestor_pair: return "AncestorPair";
    case Errc::epoch_out_of_range: return "EpochOutOfRange";
    case Errc::depth_out_of_range: return "DepthOutOfRange";
    case Errc::leaf_count_mismatch: return "LeafCountMismatch";
    case Errc::unsupported_ratio: return "UnsupportedRatio";
    case Errc::grid_too_small: return "GridTooSmall";
    case Errc::too_many_segments: return "TooManySegments";
    case Errc::grid_mismatch: return "GridMismatch";
    case Errc::zero_row: return "ZeroRow";
  }
  return "UnknownError";
}

Scene::Scene(PatchGrid g, std::vector<int> segments, int count)
    : grid(g), segment_of(std::move(segments)), segment_count(count) {
  if (segment_count < 1 ||
      segment_of.size() != static_cast<size_t>(grid.tokens())) {
    throw Error(Errc::range_out_of_bounds,
                "scene segmentation does not cover the grid");
  }
  std::vector<int> sizes(segment_count, 0);
  for (int s : segment_of) {
    if (s < 0 || s >= segment_count) {
      throw Error(Errc::range_out_of_bounds, "segment id out of range");
    }
    ++sizes[s];
  }
  for (int size : sizes) {
    if (size == 0) {
      throw Error(Errc::range_out_of_bounds, "empty segment");
    }
  }
}

std::vector<int> Scene::segment_sizes() const {
  std::vector<int> sizes(segment_count, 0);
  for (int s : segment_of) ++sizes[s];
  return sizes;
}

long long round_ties_even(double x) {
  const double floor_x = std::floor(x);
  const double frac = x - floor_x;
  long long base = static_cast<long long>(floor_x);
  if (frac > 0.5) return base + 1;
  if (frac < 0.5) return base;
  return (base % 2 == 0) ? base : base + 1;
}

std::string format_g6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

}  // namespace ehm
