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

#ifndef EHM_CORE_HPP_
#define EHM_CORE_HPP_

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ehm {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Matd = Mat<double>;
// Attention payloads are stored row-major float32 on disk; keeping the same
// layout in memory makes file round-trips bit-exact.
using RowMatf =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Errc {
  // format class: broken files and streams
  io_error,
  malformed_header,
  dimension_mismatch,
  invalid_value,
  // validation class: structurally sound inputs that violate a contract
  range_out_of_bounds,
  not_symmetric,
  negative_entry,
  empty_matrix,
  ancestor_pair,
  epoch_out_of_range,
  depth_out_of_range,
  leaf_count_mismatch,
  unsupported_ratio,
  grid_too_small,
  too_many_segments,
  grid_mismatch,
  zero_row,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

  // Format errors map to CLI exit 2, validation errors to exit 3.
  bool is_format_error() const {
    return code_ == Errc::io_error || code_ == Errc::malformed_header ||
           code_ == Errc::dimension_mismatch || code_ == Errc::invalid_value;
  }

 private:
  Errc code_;
};

// Patch lattice of an image. Token index i = row * width + col, zero based.
struct PatchGrid {
  int height_patches;
  int width_patches;
  int patch_size_px;

  PatchGrid(int height, int width, int patch_px = 16)
      : height_patches(height), width_patches(width), patch_size_px(patch_px) {
    if (height < 1 || width < 1 || patch_px < 1) {
      throw Error(Errc::range_out_of_bounds,
                  "patch grid dimensions must be >= 1");
    }
  }

  int tokens() const { return height_patches * width_patches; }
  int index(int row, int col) const { return row * width_patches + col; }
  int row_of(int token) const { return token / width_patches; }
  int col_of(int token) const { return token % width_patches; }

  bool operator==(const PatchGrid&) const = default;
};

// Ground-truth segmentation of a patch grid: one segment id per patch.
struct Scene {
  PatchGrid grid;
  std::vector<int> segment_of;
  int segment_count;

  Scene(PatchGrid g, std::vector<int> segments, int count);

  std::vector<int> segment_sizes() const;
};

// Nearest integer with ties to even. Used everywhere a patch count is
// derived from a real-valued ratio.
long long round_ties_even(double x);

// Shortest stable decimal with 6 significant digits ("%.6g"). Values written
// through this round-trip to the identical string, which keeps every text
// format byte-reproducible.
std::string format_g6(double value);

}  // namespace ehm

#endif  // EHM_CORE_HPP_
