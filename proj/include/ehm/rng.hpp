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

#ifndef EHM_RNG_HPP_
#define EHM_RNG_HPP_

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace ehm {

// The single random stream used by every seeded operation in this project.
//
// It is the splitmix64 generator: state advances by the 64-bit golden ratio
// and each output is the finalizer scramble of the new state. All sampling
// primitives are defined on top of `next()` exactly as below, so any
// implementation (in any language) that follows these definitions reproduces
// our masks, scenes, and simulations bit for bit:
//
//   next()        z = state += 0x9E3779B97F4A7C15
//                 z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//                 z = (z ^ z>>27) * 0x94D049BB133111EB
//                 return z ^ z>>31
//   next_double() (next() >> 11) * 2^-53, in [0,1)
//   next_below(n) floor(next() / 2^64 * n) via 128-bit multiply, in [0,n)
//   next_normal() Box-Muller from exactly two draws:
//                 u1 = ((next() >> 11) + 1) * 2^-53   in (0,1]
//                 u2 = (next() >> 11) * 2^-53         in [0,1)
//                 return sqrt(-2 ln u1) * cos(2 pi u2)
//   sample(n, k)  partial Fisher-Yates over 0..n-1: for i in 0..k-1 swap
//                 idx[i] with idx[i + next_below(n - i)], keep first k
//   mix(s, i)     scramble(s + 0x9E3779B97F4A7C15 * (i + 1)), the derived
//                 seed for item i of a batch seeded with s
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return scramble(state_);
  }

  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  uint64_t next_below(uint64_t n) {
    assert(n >= 1);
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double next_normal() {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // First `k` elements of a seeded partial Fisher-Yates pass over 0..n-1.
  std::vector<int> sample(int n, int k) {
    assert(0 <= k && k <= n);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(next_below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  static uint64_t mix(uint64_t seed, uint64_t index) {
    return scramble(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
  }

 private:
  static uint64_t scramble(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

}  // namespace ehm

#endif  // EHM_RNG_HPP_
