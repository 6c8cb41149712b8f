// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Portable seeded randomness.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions do not, so every draw used by the toolkit goes through the
// small mappings below. Results are therefore identical on every platform:
//
//   uniform01()        = (next() >> 11) * 2^-53
//   uniform_index(n)   = rejection sampling on next() with limit
//                        2^64 - (2^64 mod n), then mod n
//   sample_without_replacement(n, m)
//                      = first m slots of a forward Fisher-Yates shuffle
//                        of [0, n) with j = i + uniform_index(n - i)

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "biaslens/error.hpp"

namespace biaslens {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent sub-stream seed for a named stage of a pipeline.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  std::size_t uniform_index(std::size_t n) {
    require(n > 0, ErrorKind::kInvalidArgument, "uniform_index: empty range");
    const std::uint64_t range = n;
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % range + 1) % range;
    std::uint64_t x = next();
    while (x > limit) x = next();
    return static_cast<std::size_t>(x % range);
  }

  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
    require(m <= n, ErrorKind::kInvalidArgument,
            "cannot draw " + std::to_string(m) + " of " + std::to_string(n) +
                " without replacement");
    std::vector<std::size_t> slots(n);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t j = i + uniform_index(n - i);
      std::swap(slots[i], slots[j]);
    }
    slots.resize(m);
    return slots;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace biaslens
