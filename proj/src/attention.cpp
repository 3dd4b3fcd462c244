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

#include "ehm/attention.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ehm/rng.hpp"

namespace ehm {

namespace {

constexpr char kMagic[4] = {'E', 'H', 'M', 'A'};
constexpr uint8_t kVersion = 1;

uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void write_u32_le(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

AttentionBatch load_attention(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(Errc::malformed_header, "missing EHMA magic");
  }
  unsigned char version_and_reserved[4];
  in.read(reinterpret_cast<char*>(version_and_reserved), 4);
  if (!in || version_and_reserved[0] != kVersion) {
    throw Error(Errc::malformed_header, "unsupported EHMA version");
  }

  AttentionBatch batch;
  batch.images = read_u32_le(in);
  batch.layers = read_u32_le(in);
  batch.heads = read_u32_le(in);
  batch.tokens = read_u32_le(in);
  if (!in) {
    throw Error(Errc::malformed_header, "truncated EHMA header");
  }
  if (batch.images == 0 || batch.layers == 0 || batch.heads == 0 ||
      batch.tokens == 0) {
    throw Error(Errc::malformed_header, "zero dimension in EHMA header");
  }

  const uint64_t matrices = static_cast<uint64_t>(batch.images) *
                            batch.layers * batch.heads;
  const uint64_t per_matrix =
      static_cast<uint64_t>(batch.tokens) * batch.tokens;
  batch.maps.reserve(matrices);
  const int n = static_cast<int>(batch.tokens);
  std::vector<float> buffer(per_matrix);
  for (uint64_t m = 0; m < matrices; ++m) {
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(per_matrix * sizeof(float)));
    if (in.gcount() !=
        static_cast<std::streamsize>(per_matrix * sizeof(float))) {
      throw Error(Errc::dimension_mismatch,
                  "payload shorter than the declared dimensions");
    }
    RowMatf map(n, n);
    std::memcpy(map.data(), buffer.data(), per_matrix * sizeof(float));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const float v = map(i, j);
        if (std::isnan(v)) {
          throw Error(Errc::invalid_value, "NaN attention value");
        }
        if (v < 0.0f) {
          throw Error(Errc::invalid_value, "negative attention value");
        }
      }
    }
    batch.maps.push_back(std::move(map));
  }
  // Anything left over means the header undersold the payload.
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0) {
    throw Error(Errc::dimension_mismatch,
                "payload longer than the declared dimensions");
  }
  return batch;
}

AttentionBatch load_attention(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  return load_attention(in);
}

void save_attention(const AttentionBatch& batch, std::ostream& out) {
  out.write(kMagic, 4);
  const unsigned char version_and_reserved[4] = {kVersion, 0, 0, 0};
  out.write(reinterpret_cast<const char*>(version_and_reserved), 4);
  write_u32_le(out, batch.images);
  write_u32_le(out, batch.layers);
  write_u32_le(out, batch.heads);
  write_u32_le(out, batch.tokens);
  const size_t per_matrix =
      static_cast<size_t>(batch.tokens) * batch.tokens * sizeof(float);
  for (const RowMatf& map : batch.maps) {
    out.write(reinterpret_cast<const char*>(map.data()),
              static_cast<std::streamsize>(per_matrix));
  }
  if (!out) {
    throw Error(Errc::io_error, "write failed");
  }
}

void save_attention(const AttentionBatch& batch,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot open " + path.string() +
                                    " for writing");
  }
  save_attention(batch, out);
}

Matd aggregate(const AttentionBatch& batch, uint32_t image_index,
               uint32_t layer_lo, uint32_t layer_hi) {
  if (image_index >= batch.images) {
    throw Error(Errc::range_out_of_bounds, "image index out of range");
  }
  if (layer_lo > layer_hi || layer_hi >= batch.layers) {
    throw Error(Errc::range_out_of_bounds, "layer range out of range");
  }
  const int n = static_cast<int>(batch.tokens);
  Matd sum = Matd::Zero(n, n);
  int count = 0;
  for (uint32_t layer = layer_lo; layer <= layer_hi; ++layer) {
    for (uint32_t head = 0; head < batch.heads; ++head) {
      sum += batch.map(image_index, layer, head).cast<double>();
      ++count;
    }
  }
  sum /= count;
  return symmetrized(sum);
}

Matd oracle_attention(const Scene& scene, double eps, double jitter_std,
                      uint64_t seed) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw Error(Errc::range_out_of_bounds, "eps must be in [0, 1]");
  }
  if (!(jitter_std >= 0.0)) {
    throw Error(Errc::range_out_of_bounds, "jitter std must be >= 0");
  }
  const int n = scene.grid.tokens();
  const std::vector<int> sizes = scene.segment_sizes();
  const double uniform = eps / n;

  Matd m(n, n);
  for (int i = 0; i < n; ++i) {
    const int seg = scene.segment_of[i];
    const double within = (1.0 - eps) / sizes[seg] + uniform;
    for (int j = 0; j < n; ++j) {
      m(i, j) = (scene.segment_of[j] == seg) ? within : uniform;
    }
  }
  if (jitter_std > 0.0) {
    SplitMix64 rng(seed);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        m(i, j) += jitter_std * rng.next_normal();
      }
    }
  }
  m = m.cwiseMax(0.0);
  return symmetrized(m);
}

}  // namespace ehm
