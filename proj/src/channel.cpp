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

#include "thzvr/channel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "thzvr/error.hpp"

namespace thzvr {

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

void RadioParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(std::string("radio.") + name + " must be positive");
  };
  positive(carrier_freq_hz, "carrier_freq_hz");
  positive(bandwidth_hz, "bandwidth_hz");
  positive(tx_power_w, "tx_power_w");
  positive(absorption_per_m, "absorption_per_m");
  positive(image_bits, "image_bits");
  positive(slot_s, "slot_s");
  positive(noise_density_w_hz, "noise_density_dbm_hz");
}

void OpticsParams::validate() const {
  if (!(fov_semi_angle_deg > 0.0 && fov_semi_angle_deg < 90.0))
    throw Error("optics.fov_semi_angle_deg must lie in (0, 90)");
}

double incidence_angle(const Point3& vap, const Point3& user) {
  const double dz = vap.z - user.z;
  if (!(dz > 0.0)) throw Error("incidence_angle: VAP must be above the receiver");
  return std::atan2(std::hypot(vap.x - user.x, vap.y - user.y), dz);
}

bool localized(std::size_t user_idx, std::span<const Point3> user_positions,
               std::span<const Point3> selected_vaps, const OpticsParams& optics,
               double body_radius) {
  if (selected_vaps.size() != 3)
    throw Error("localized: exactly 3 VAPs must be selected");
  const Point3& rx = user_positions[user_idx];
  for (const Point3& vap : selected_vaps)
    if (incidence_angle(vap, rx) > optics.fov_semi_angle_rad()) return false;
  const auto blockers =
      bodies_except(user_positions, static_cast<int>(user_idx), body_radius);
  for (const Point3& vap : selected_vaps)
    if (!los_clear(vap, rx, blockers)) return false;
  return true;
}

double transmittance(double r, const RadioParams& params) {
  return std::exp(-params.absorption_per_m * r);
}

namespace {
double spreading(double r, const RadioParams& params) {
  const double s = kSpeedOfLight / (4.0 * std::numbers::pi * params.carrier_freq_hz * r);
  return s * s;
}
}  // namespace

double path_loss(const Point3& sbs, const Point3& user, bool los,
                 const RadioParams& params) {
  if (!los) return 0.0;
  const double r = distance(sbs, user);
  return spreading(r, params) * transmittance(r, params);
}

double noise_power(const Point3& user, std::span<const Point3> all_sbs,
                   const RadioParams& params) {
  double noise = params.thermal_noise_w();
  for (const Point3& l : all_sbs) {
    const double r = distance(l, user);
    noise += params.tx_power_w * spreading(r, params) * (1.0 - transmittance(r, params));
  }
  return noise;
}

LinkBudget link_budget_with_noise(const Point3& sbs, const Point3& user,
                                  std::span<const BodyOccupancy> blockers,
                                  double noise_w, const RadioParams& params) {
  LinkBudget lb;
  lb.noise_w = noise_w;
  lb.path_loss = path_loss(sbs, user, los_clear(sbs, user, blockers), params);
  lb.rate_bps =
      params.bandwidth_hz * std::log2(1.0 + params.tx_power_w * lb.path_loss / noise_w);
  lb.delay_s = lb.rate_bps > 0.0 ? params.image_bits / lb.rate_bps
                                 : std::numeric_limits<double>::infinity();
  lb.tx_ok = lb.delay_s <= params.slot_s;
  return lb;
}

LinkBudget link_budget(const Point3& sbs, const Point3& user,
                       std::span<const BodyOccupancy> blockers,
                       std::span<const Point3> all_sbs,
                       const RadioParams& params) {
  return link_budget_with_noise(sbs, user, blockers,
                                noise_power(user, all_sbs, params), params);
}

}  // namespace thzvr
