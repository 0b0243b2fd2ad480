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

#ifndef THZVR_CHANNEL_HPP_
#define THZVR_CHANNEL_HPP_

#include <numbers>
#include <span>

#include "thzvr/geometry.hpp"

namespace thzvr {

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

double dbm_to_watts(double dbm);

// THz link constants, SI units throughout.
struct RadioParams {
  double carrier_freq_hz = 1.0e12;
  double bandwidth_hz = 10.0e9;
  double tx_power_w = 1.0;
  double absorption_per_m = 0.01;  // K(f)
  double image_bits = 20.0e6;
  double slot_s = 10.0e-3;

  // Thermal noise density K_B*T_e. The dBm/Hz figure is what configs carry;
  // set_noise_density_dbm() converts it once.
  double noise_density_dbm_hz = -174.0;
  double noise_density_w_hz = dbm_to_watts(-174.0);

  void set_noise_density_dbm(double dbm_hz) {
    noise_density_dbm_hz = dbm_hz;
    noise_density_w_hz = dbm_to_watts(dbm_hz);
  }
  // Johnson-Nyquist floor over the receive band.
  double thermal_noise_w() const { return noise_density_w_hz * bandwidth_hz; }

  void validate() const;
};

// Receiver normal is fixed vertical-up.
struct OpticsParams {
  double fov_semi_angle_deg = 70.0;

  double fov_semi_angle_rad() const { return fov_semi_angle_deg * std::numbers::pi / 180.0; }

  void validate() const;
};

struct LinkBudget {
  double path_loss = 0.0;  // g, dimensionless
  double noise_w = 0.0;    // I
  double rate_bps = 0.0;   // C
  double delay_s = 0.0;    // d, +inf when C == 0
  bool tx_ok = false;      // h = (d <= slot)
};

// Angle between the user->VAP direction and the vertical receiver normal.
// Throws unless vap.z > user.z.
double incidence_angle(const Point3& vap, const Point3& user);

// Positioning state: all three lit VAPs are inside the FOV and have LoS to
// |user_idx| past every other user's body. user_positions[j].z is both the
// receiver height and the body height of user j.
bool localized(std::size_t user_idx, std::span<const Point3> user_positions,
               std::span<const Point3> selected_vaps, const OpticsParams& optics,
               double body_radius);

// Beer-Lambert transmittance exp(-K(f) r).
double transmittance(double r, const RadioParams& params);

// Free-space spreading times molecular transmittance; exactly 0 if blocked.
double path_loss(const Point3& sbs, const Point3& user, bool los,
                 const RadioParams& params);

// Thermal floor plus molecular re-radiation from every SBS in the room.
double noise_power(const Point3& user, std::span<const Point3> all_sbs,
                   const RadioParams& params);

// Rate, delay and transmission state of a single beam. No inter-SBS
// interference term: pencil beams are assumed isolated.
LinkBudget link_budget(const Point3& sbs, const Point3& user,
                       std::span<const BodyOccupancy> blockers,
                       std::span<const Point3> all_sbs,
                       const RadioParams& params);

// Same, with the noise already known (it does not depend on the serving SBS).
LinkBudget link_budget_with_noise(const Point3& sbs, const Point3& user,
                                  std::span<const BodyOccupancy> blockers,
                                  double noise_w, const RadioParams& params);

}  // namespace thzvr

#endif  // THZVR_CHANNEL_HPP_
