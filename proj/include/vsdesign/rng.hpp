// Copyright 2026 The vsdesign Authors.
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

#ifndef VSDESIGN_RNG_HPP
#define VSDESIGN_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>

namespace vsdesign {

/// A reproducible random stream keyed by (master_seed, stream_id, tag).
/// Identical keys give identical draw sequences; distinct keys are seeded
/// through std::seed_seq so trial streams are decorrelated.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t tag = 0)
      : master_seed_(master_seed), stream_id_(stream_id), tag_(tag) {
    std::seed_seq seq{lo(master_seed), hi(master_seed), lo(stream_id),
                      hi(stream_id),   lo(tag),         hi(tag)};
    engine_.seed(seq);
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t tag() const { return tag_; }

  /// Independent stream for a sub-task of this one.
  RngStream derive(std::uint64_t tag) const { return RngStream(master_seed_, stream_id_, tag); }

  /// Uniform on [0, 1) with 53 random bits; consumes one engine call.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., m-1}; consumes one engine call.
  std::size_t index(std::size_t m) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(m));
    return i < m ? i : m - 1;
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
  static std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t tag_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace vsdesign

#endif  // VSDESIGN_RNG_HPP
