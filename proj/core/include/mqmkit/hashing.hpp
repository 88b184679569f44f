/*
 * Copyright 2026 The mqmkit Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Stable hashing and counter-based random streams.
//
// Everything here is fixed by value, not by implementation: results must be
// identical across compilers, platforms and thread counts, so nothing in this
// header may depend on std::hash or the unspecified <random> distributions.

#include <cstdint>
#include <string>
#include <string_view>

namespace mqmkit {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v));
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// 16 lowercase hex digits.
std::string to_hex(std::uint64_t v);

// Seed for a named randomized stage, derived from the run's global seed.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage) {
  return hash_combine(global_seed, fnv1a64(stage));
}

// Resampling contract: the random bits used for resample `k` of system pair
// (i, j) are a pure function of (seed, i, j, k). Bit t of word `block`
// decides the fate of element 64 * block + t.
constexpr std::uint64_t resample_word(std::uint64_t seed, std::uint64_t i,
                                      std::uint64_t j, std::uint64_t k,
                                      std::uint64_t block) noexcept {
  return hash_combine(hash_combine(hash_combine(hash_combine(seed, i), j), k), block);
}

constexpr bool resample_bit(std::uint64_t seed, std::uint64_t i, std::uint64_t j,
                            std::uint64_t k, std::uint64_t element) noexcept {
  return (resample_word(seed, i, j, k, element / 64) >> (element % 64)) & 1U;
}

// Sequential generator on top of splitmix64; used where a plain stream of
// numbers is needed (subsampling, synthetic data).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with
  // rejection, so the distribution is exact.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace mqmkit
