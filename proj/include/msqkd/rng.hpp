// Copyright 2026 The msqkd-sim Authors.
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

#pragma once

#include <cstdint>
#include <span>

namespace msqkd {

/// Counter-based splittable random stream.
///
/// Every output is a pure function of (master_seed, stream_id, counter), so
/// streams can be created independently per round and consumed in any order
/// or from any thread while reproducing the exact same draw sequence.
/// The word function is the splitmix64 finaliser driven by a Weyl sequence,
/// keyed once per stream.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed),
        stream_id_(stream_id),
        key_(mix(master_seed + kGamma * (stream_id + 1))) {}

  std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream id reserved for the sifting phase, outside the per-round range.
inline constexpr std::uint64_t kSiftStreamId = 0xffffffffffffffffULL;

/// Draws an index with probability weights[i] / sum(weights).
///
/// Weights are renormalised by their sum so that certainty branches
/// (all weight on one index) are sampled exactly, independent of the
/// rounding of the individual weights.
template <typename Real>
int sample_index(std::span<const Real> weights, RngStream& rng) {
  Real total = 0;
  for (Real w : weights) total += w;
  const Real u = static_cast<Real>(rng.next_double()) * total;
  Real acc = 0;
  int last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0) last_positive = static_cast<int>(k);
    acc += weights[k];
    if (u < acc) return static_cast<int>(k);
  }
  return last_positive;
}

}  // namespace msqkd
