// Copyright 2026 The THzVR Authors. All Rights Reserved.
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

#ifndef THZVR_SEED_HPP_
#define THZVR_SEED_HPP_

#include <cstdint>
#include <initializer_list>

namespace thzvr {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child seed from a key path, e.g. {master, task_id, rollout}.
// The result depends only on the key values, never on call order.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Stream tags so that sibling derivations never collide.
namespace seed_tag {
inline constexpr std::uint64_t kReset = 0x5245534554ULL;
inline constexpr std::uint64_t kMobility = 0x4d4f42ULL;
inline constexpr std::uint64_t kTask = 0x5441534bULL;
inline constexpr std::uint64_t kRollout = 0x524f4c4cULL;
inline constexpr std::uint64_t kInner = 0x494e4e4552ULL;
inline constexpr std::uint64_t kOuter = 0x4f55544552ULL;
inline constexpr std::uint64_t kInit = 0x494e4954ULL;
inline constexpr std::uint64_t kEval = 0x4556414cULL;
inline constexpr std::uint64_t kAdapt = 0x4144415054ULL;
}  // namespace seed_tag

}  // namespace thzvr

#endif  // THZVR_SEED_HPP_
