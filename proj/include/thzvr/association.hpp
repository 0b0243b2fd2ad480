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

#ifndef THZVR_ASSOCIATION_HPP_
#define THZVR_ASSOCIATION_HPP_

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

#include "thzvr/env.hpp"

namespace thzvr {

struct AssignmentSolution {
  std::vector<int> row_to_col;  // -1 = unmatched
  double objective_value = 0.0;
};

// Maximum-weight matching on a rectangular matrix. Without |allow_skip|
// exactly min(rows, cols) pairs are matched; with it, pairs of weight <= 0
// are never matched. Among optimal matchings the lexicographically smallest
// row_to_col wins, with "unmatched" ordered after every column.
AssignmentSolution hungarian_max(const Eigen::MatrixXd& weights, bool allow_skip);

// Which bodies block a candidate THz beam when building weights.
enum class BlockerMode {
  kAllBodies,      // every other user, localized or not
  kLocalizedOnly,  // only users the network has localized
};

struct AssociationOptions {
  double step = 0.1;  // phi
  int dual_iters = 50;
  bool persist_lambda = false;  // carry lambda into the next period
  BlockerMode blockers = BlockerMode::kAllBodies;

  void validate() const;
};

// Rows are SBSs, columns users: e(i, j) = p_j * h_ij with the VAP set lit.
Eigen::MatrixXd eligibility(std::span<const Point3> users,
                            const std::array<int, 3>& vaps,
                            const ScenarioConfig& config,
                            BlockerMode blockers = BlockerMode::kAllBodies);

// Per-slot subproblem over the localized, not yet served users. Rows are
// SBSs and row_to_col holds global user indices.
AssignmentSolution slot_assign(const EnvState& state, const std::array<int, 3>& vaps,
                               std::span<const double> lambda,
                               const ScenarioConfig& config,
                               BlockerMode blockers = BlockerMode::kAllBodies);

// lambda_j <- max(0, lambda_j - phi (1 - count_j)).
std::vector<double> dual_update(std::span<const double> lambda,
                                std::span<const int> counts, double phi);

struct PeriodAssociation {
  std::vector<std::vector<int>> sbs_to_user;  // [slot][sbs]
  std::vector<std::vector<int>> user_to_sbs;  // [slot][user]
  int total_served = 0;
  double dual_bound = 0.0;  // best Lagrangian upper bound seen
  int dual_rounds = 0;
  std::vector<double> lambda;  // after the last round
};

// Offline solve on known eligibility tensors (one B x U matrix per slot):
// dual rounds with per-slot Hungarian, greedy primal recovery, then
// augmenting paths until the once-per-period matching is maximum.
PeriodAssociation solve_period_assignment(std::span<const Eigen::MatrixXd> elig,
                                          const AssociationOptions& opts = {});

// Same, with the eligibility built from a mobility realization
// (cells[t][j]) and per-user heights.
PeriodAssociation solve_period_association(
    std::span<const std::array<int, 3>> vap_sequence,
    const std::vector<std::vector<int>>& cells, std::span<const double> heights,
    const ScenarioConfig& config, const AssociationOptions& opts = {});

}  // namespace thzvr

#endif  // THZVR_ASSOCIATION_HPP_
