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

#ifndef EHM_ATTENTION_HPP_
#define EHM_ATTENTION_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ehm/core.hpp"

namespace ehm {

// A stack of per-(image, layer, head) attention maps over N tokens, as read
// from an EHMA file. Entries are nonnegative; rows need not be normalized.
struct AttentionBatch {
  uint32_t images = 0;
  uint32_t layers = 0;
  uint32_t heads = 0;
  uint32_t tokens = 0;
  std::vector<RowMatf> maps;  // images * layers * heads matrices, N x N

  const RowMatf& map(uint32_t image, uint32_t layer, uint32_t head) const {
    return maps[(static_cast<size_t>(image) * layers + layer) * heads + head];
  }
};

// EHMA binary format, little endian:
//   "EHMA"  magic, 4 bytes
//   u8      version = 1
//   u8[3]   reserved, zero
//   u32     images, layers, heads, tokens
//   f32[]   images*layers*heads*tokens*tokens values, row-major per matrix,
//           heads fastest, then layers, then images
// NaN and negative values are rejected on load.
AttentionBatch load_attention(std::istream& in);
AttentionBatch load_attention(const std::filesystem::path& path);
void save_attention(const AttentionBatch& batch, std::ostream& out);
void save_attention(const AttentionBatch& batch,
                    const std::filesystem::path& path);

// Per-image similarity matrix: element-wise mean over all heads of layers
// [layer_lo, layer_hi] (inclusive), then symmetrized as (M + M^T) / 2.
// The output is exactly symmetric; the diagonal is kept but every consumer
// skips i == j pairs.
Matd aggregate(const AttentionBatch& batch, uint32_t image_index,
               uint32_t layer_lo, uint32_t layer_hi);

// Synthetic similarity standing in for a trained encoder. The clean signal is
//   base(i, j) = (1 - eps) * [segment(i) == segment(j)] / |segment(i)|
//              + eps / N
// so eps = 0 is block-constant on segments and eps = 1 is uniform. Gaussian
// jitter with std `jitter_std` is added entry by entry in row-major order,
// then the matrix is clamped at zero and symmetrized. Deterministic in
// (scene, eps, jitter_std, seed).
Matd oracle_attention(const Scene& scene, double eps, double jitter_std,
                      uint64_t seed);

// (expr + expr^T) / 2, evaluated once. Exactly symmetric.
template <typename Derived>
Matd symmetrized(const Eigen::MatrixBase<Derived>& expr) {
  Matd m = expr.template cast<double>();
  return (m + m.transpose()) * 0.5;
}

}  // namespace ehm

#endif  // EHM_ATTENTION_HPP_
