/*
Copyright (c) 2026 The gasline Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <cstdint>

namespace gasline {

/// 64-bit linear congruential generator, state' = A * state + C (mod 2^64),
/// with Knuth's MMIX constants. Fixed here so parameters and synthetic data
/// are reproducible across platforms and standard libraries.
class Lcg64 {
 public:
  static constexpr std::uint64_t kA = 6364136223846793005ULL;
  static constexpr std::uint64_t kC = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ = kA * state_ + kC;
    return state_;
  }

  /// Top 24 bits as a float in [0, 1); exact, since floats carry 24 bits.
  float uniform() noexcept { return static_cast<float>(next() >> 40) * 0x1p-24f; }

  /// Top 53 bits as a double in [0, 1).
  double uniform_double() noexcept { return static_cast<double>(next() >> 11) * 0x1p-53; }

  /// Integer in [0, bound) by multiply-shift on the top 32 bits; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    return ((next() >> 32) * bound) >> 32;
  }

 private:
  std::uint64_t state_;
};

}  // namespace gasline
