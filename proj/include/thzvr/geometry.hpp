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

#ifndef THZVR_GEOMETRY_HPP_
#define THZVR_GEOMETRY_HPP_

#include <span>
#include <vector>

namespace thzvr {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Point3&) const = default;
};

// Vertical cylinder standing on the floor. radius = 0 is a line segment.
struct BodyOccupancy {
  Point2 center_xy;
  double height = 0.0;
  double radius = 0.0;
};

// Square room split into cells_per_side x cells_per_side equal cells.
// Cell index = cell_y * cells_per_side + cell_x.
class RoomGrid {
 public:
  RoomGrid(double room_side, int cells_per_side);

  double room_side() const { return room_side_; }
  int cells_per_side() const { return cells_per_side_; }
  int cell_count() const { return cells_per_side_ * cells_per_side_; }
  double cell_size() const { return room_side_ / cells_per_side_; }

  int cell_x(int cell) const { return cell % cells_per_side_; }
  int cell_y(int cell) const { return cell / cells_per_side_; }
  int index(int cx, int cy) const { return cy * cells_per_side_ + cx; }
  Point2 center(int cell) const;
  const std::vector<Point2>& cell_centers() const { return centers_; }

  // Chebyshev distance in cells.
  int cell_distance(int a, int b) const;

 private:
  double room_side_;
  int cells_per_side_;
  std::vector<Point2> centers_;
};

double distance(const Point3& a, const Point3& b);

// True iff the open segment tx -> rx misses every blocker volume.
// The receiver's own body must not be in |blockers|.
bool los_clear(const Point3& tx, const Point3& rx,
               std::span<const BodyOccupancy> blockers);

// Bodies of every user except |skip| (pass -1 to keep all). Each user's
// body reaches its receiver height z.
std::vector<BodyOccupancy> bodies_except(std::span<const Point3> users,
                                         int skip, double radius);

}  // namespace thzvr

#endif  // THZVR_GEOMETRY_HPP_
