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

#include "oracles/channel_oracle.hpp"

#include <cmath>
#include <limits>

namespace oracle {

namespace {
constexpr double kC = 3.0e8;  // m/s
constexpr double kPi = 3.14159265358979323846;

double dist(const Xyz& a, const Xyz& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}
}  // namespace

LinkScalars thz_link(const Xyz& sbs, const Xyz& user, bool los,
                     const std::vector<Xyz>& all_sbs, const Radio& r) {
  LinkScalars out{};
  const double d = dist(sbs, user);
  out.delta = std::exp(-r.k_per_m * d);
  out.g = los ? (kC * kC) / (16.0 * kPi * kPi * r.f_hz * r.f_hz * d * d) * out.delta : 0.0;
  // dBm/Hz -> W/Hz, then over the band.
  double noise = std::pow(10.0, (r.n0_dbm_hz - 30.0) / 10.0) * r.w_hz;
  for (const Xyz& l : all_sbs) {
    const double rl = dist(l, user);
    noise += r.p_w * (kC * kC) / (16.0 * kPi * kPi * r.f_hz * r.f_hz * rl * rl) *
             (1.0 - std::exp(-r.k_per_m * rl));
  }
  out.noise = noise;
  out.rate = r.w_hz * std::log(1.0 + r.p_w * out.g / noise) / std::log(2.0);
  out.delay = out.rate > 0.0 ? r.s_bits / out.rate : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace oracle
