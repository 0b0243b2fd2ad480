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

#include "thzvr/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "thzvr/error.hpp"

namespace thzvr {

RoomGrid::RoomGrid(double room_side, int cells_per_side)
    : room_side_(room_side), cells_per_side_(cells_per_side) {
  if (!(room_side > 0.0)) throw Error("room_side must be positive");
  if (cells_per_side < 1) throw Error("cells_per_side must be >= 1");
  centers_.reserve(cell_count());
  const double s = cell_size();
  for (int cy = 0; cy < cells_per_side_; ++cy)
    for (int cx = 0; cx < cells_per_side_; ++cx)
      centers_.push_back({(cx + 0.5) * s, (cy + 0.5) * s});
}

Point2 RoomGrid::center(int cell) const {
  return centers_.at(static_cast<std::size_t>(cell));
}

int RoomGrid::cell_distance(int a, int b) const {
  return std::max(std::abs(cell_x(a) - cell_x(b)),
                  std::abs(cell_y(a) - cell_y(b)));
}

double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

// Does the open segment rx + g*(tx - rx), g in (0,1), enter the body?
bool hits(const Point3& tx, const Point3& rx, const BodyOccupancy& body) {
  const double dx = tx.x - rx.x;
  const double dy = tx.y - rx.y;
  const double ox = rx.x - body.center_xy.x;
  const double oy = rx.y - body.center_xy.y;
  const double r2 = body.radius * body.radius;

  // |o + g d|^2 <= r^2  <=>  a g^2 + b g + c <= 0
  const double a = dx * dx + dy * dy;
  const double b = 2.0 * (ox * dx + oy * dy);
  const double c = ox * ox + oy * oy - r2;

  double lo = 0.0;
  double hi = 1.0;
  if (a == 0.0) {
    if (c > 0.0) return false;
  } else {
    double disc = b * b - 4.0 * a * c;
    // Blockers sitting exactly on the projected line (radius 0) land on
    // disc == 0 only up to rounding.
    if (disc < 0.0 && disc > -1e-12 * (b * b + 4.0 * a * std::abs(c))) disc = 0.0;
    if (disc < 0.0) return false;
    const double root = std::sqrt(disc);
    lo = std::max(lo, (-b - root) / (2.0 * a));
    hi = std::min(hi, (-b + root) / (2.0 * a));
  }
  if (hi < lo || hi <= 0.0 || lo >= 1.0) return false;

  // z is linear in g, so the lowest point of the overlap is an endpoint.
  const double z_lo = rx.z + lo * (tx.z - rx.z);
  const double z_hi = rx.z + hi * (tx.z - rx.z);
  return std::min(z_lo, z_hi) <= body.height;
}

}  // namespace

bool los_clear(const Point3& tx, const Point3& rx,
               std::span<const BodyOccupancy> blockers) {
  return std::none_of(blockers.begin(), blockers.end(),
                      [&](const BodyOccupancy& b) { return hits(tx, rx, b); });
}

std::vector<BodyOccupancy> bodies_except(std::span<const Point3> users,
                                         int skip, double radius) {
  std::vector<BodyOccupancy> out;
  out.reserve(users.size());
  for (std::size_t m = 0; m < users.size(); ++m) {
    if (static_cast<int>(m) == skip) continue;
    out.push_back({{users[m].x, users[m].y}, users[m].z, radius});
  }
  return out;
}

}  // namespace thzvr
