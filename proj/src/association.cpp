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

#include "thzvr/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thzvr/error.hpp"

namespace thzvr {

namespace {

// Min-cost assignment of every row (n <= m) via shortest augmenting paths
// with potentials. Returns row -> column.
std::vector<int> assign_rows(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Any optimal matching; weights are already clamped when skipping is allowed.
std::vector<int> any_optimum(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows(), m = w.cols();
  if (n == 0 || m == 0) return std::vector<int>(n, -1);
  if (n <= m) return assign_rows(-w);
  const std::vector<int> col_to_row = assign_rows(-w.transpose());
  std::vector<int> row_to_col(n, -1);
  for (Eigen::Index c = 0; c < m; ++c) row_to_col[col_to_row[c]] = static_cast<int>(c);
  return row_to_col;
}

double matched_value(const Eigen::MatrixXd& w, const std::vector<int>& row_to_col) {
  double s = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r)
    if (row_to_col[r] >= 0) s += w(static_cast<Eigen::Index>(r), row_to_col[r]);
  return s;
}

// Optimum over rows [first, n) and the columns not in |taken|, indexed by
// global column.
std::vector<int> sub_optimum(const Eigen::MatrixXd& w, int first,
                             const std::vector<char>& taken) {
  std::vector<int> cols;
  for (int c = 0; c < w.cols(); ++c)
    if (!taken[c]) cols.push_back(c);
  const int rows = static_cast<int>(w.rows()) - first;
  Eigen::MatrixXd sub(rows, static_cast<Eigen::Index>(cols.size()));
  for (int r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < cols.size(); ++k) sub(r, k) = w(first + r, cols[k]);
  std::vector<int> local = any_optimum(sub);
  for (int& c : local)
    if (c >= 0) c = cols[c];
  return local;
}

// Drops pairs that add nothing; they are equivalent to leaving the row free.
void drop_nonpositive(const Eigen::MatrixXd& w, std::vector<int>& row_to_col, int first) {
  for (std::size_t r = first; r < row_to_col.size(); ++r)
    if (row_to_col[r] >= 0 && !(w(static_cast<Eigen::Index>(r), row_to_col[r]) > 0.0))
      row_to_col[r] = -1;
}

}  // namespace

AssignmentSolution hungarian_max(const Eigen::MatrixXd& weights, bool allow_skip) {
  if (!weights.allFinite()) throw Error("hungarian_max: weights must be finite");
  const int n = static_cast<int>(weights.rows());
  const int m = static_cast<int>(weights.cols());
  const Eigen::MatrixXd w = allow_skip ? Eigen::MatrixXd(weights.cwiseMax(0.0)) : weights;

  std::vector<int> witness = any_optimum(w);
  if (allow_skip) drop_nonpositive(w, witness, 0);
  const double best = matched_value(w, witness);
  const double tol =
      1e-9 * (1.0 + (w.size() ? w.cwiseAbs().maxCoeff() : 0.0) * std::min(n, m));

  // Row by row, move to the smallest column that still admits an optimum.
  std::vector<char> taken(m, 0);
  double fixed = 0.0;
  for (int r = 0; r < n; ++r) {
    const int limit = witness[r] < 0 ? m : witness[r];
    for (int c = 0; c < limit; ++c) {
      if (taken[c] || (allow_skip && !(w(r, c) > 0.0))) continue;
      taken[c] = 1;
      std::vector<int> rest = sub_optimum(w, r + 1, taken);
      taken[c] = 0;
      double total = fixed + w(r, c);
      for (std::size_t k = 0; k < rest.size(); ++k)
        if (rest[k] >= 0) total += w(r + 1 + static_cast<int>(k), rest[k]);
      if (total >= best - tol) {
        witness[r] = c;
        std::copy(rest.begin(), rest.end(), witness.begin() + r + 1);
        if (allow_skip) drop_nonpositive(w, witness, r + 1);
        break;
      }
    }
    if (witness[r] >= 0) {
      taken[witness[r]] = 1;
      fixed += w(r, witness[r]);
    }
  }

  AssignmentSolution sol;
  sol.row_to_col = std::move(witness);
  sol.objective_value = matched_value(weights, sol.row_to_col);
  return sol;
}

void AssociationOptions::validate() const {
  if (!(step > 0.0)) throw Error("association.step must be positive");
  if (dual_iters < 1) throw Error("association.dual_iters must be >= 1");
}

Eigen::MatrixXd eligibility(std::span<const Point3> users,
                            const std::array<int, 3>& vaps,
                            const ScenarioConfig& config, BlockerMode blockers) {
  const int u = static_cast<int>(users.size());
  const int b = config.sbs_count();
  for (int k = 0; k < 3; ++k)
    if (vaps[k] < 0 || vaps[k] >= config.vap_count())
      throw Error("eligibility: VAP index out of range");
  const std::array<Point3, 3> lit{config.vap_positions[vaps[0]],
                                  config.vap_positions[vaps[1]],
                                  config.vap_positions[vaps[2]]};
  std::vector<std::uint8_t> p(u);
  for (int j = 0; j < u; ++j)
    p[j] = localized(j, users, lit, config.optics, config.body_radius);

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(b, u);
  for (int j = 0; j < u; ++j) {
    if (!p[j]) continue;
    std::vector<BodyOccupancy> bodies;
    if (blockers == BlockerMode::kAllBodies) {
      bodies = bodies_except(users, j, config.body_radius);
    } else {
      for (int k = 0; k < u; ++k)
        if (k != j && p[k])
          bodies.push_back({{users[k].x, users[k].y}, users[k].z, config.body_radius});
    }
    const double noise = noise_power(users[j], config.sbs_positions, config.radio);
    for (int i = 0; i < b; ++i)
      e(i, j) = link_budget_with_noise(config.sbs_positions[i], users[j], bodies, noise,
                                       config.radio)
                        .tx_ok
                    ? 1.0
                    : 0.0;
  }
  return e;
}

AssignmentSolution slot_assign(const EnvState& state, const std::array<int, 3>& vaps,
                               std::span<const double> lambda,
                               const ScenarioConfig& config, BlockerMode blockers) {
  const int u = config.num_users;
  if (lambda.size() != static_cast<std::size_t>(u))
    throw Error("slot_assign: lambda length must equal num_users");
  const auto users = user_positions(state, config);
  const Eigen::MatrixXd e = eligibility(users, vaps, config, blockers);

  const std::array<Point3, 3> lit{config.vap_positions[vaps[0]],
                                  config.vap_positions[vaps[1]],
                                  config.vap_positions[vaps[2]]};
  std::vector<int> cand;  // U'_t: localized and not yet served
  for (int j = 0; j < u; ++j)
    if (!state.served[j] && localized(j, users, lit, config.optics, config.body_radius))
      cand.push_back(j);

  Eigen::MatrixXd w(config.sbs_count(), static_cast<Eigen::Index>(cand.size()));
  for (int i = 0; i < w.rows(); ++i)
    for (std::size_t k = 0; k < cand.size(); ++k) w(i, k) = e(i, cand[k]) - lambda[cand[k]];
  AssignmentSolution sol = hungarian_max(w, true);
  for (int& c : sol.row_to_col)
    if (c >= 0) c = cand[c];
  return sol;
}

std::vector<double> dual_update(std::span<const double> lambda,
                                std::span<const int> counts, double phi) {
  if (!(phi > 0.0)) throw Error("dual_update: step must be positive");
  if (lambda.size() != counts.size()) throw Error("dual_update: length mismatch");
  std::vector<double> out(lambda.size());
  for (std::size_t j = 0; j < lambda.size(); ++j)
    out[j] = std::max(0.0, lambda[j] - phi * (1.0 - counts[j]));
  return out;
}

namespace {

struct Slotted {
  int t = -1;
  int i = -1;
};

bool augment(int j, std::span<const Eigen::MatrixXd> elig, std::vector<Slotted>& of_user,
             std::vector<std::vector<int>>& user_at, std::vector<std::vector<char>>& seen) {
  for (std::size_t t = 0; t < elig.size(); ++t) {
    for (int i = 0; i < elig[t].rows(); ++i) {
      if (!(elig[t](i, j) > 0.0) || seen[t][i]) continue;
      seen[t][i] = 1;
      const int holder = user_at[t][i];
      if (holder < 0 || augment(holder, elig, of_user, user_at, seen)) {
        user_at[t][i] = j;
        of_user[j] = {static_cast<int>(t), i};
        return true;
      }
    }
  }
  return false;
}

}  // namespace

PeriodAssociation solve_period_assignment(std::span<const Eigen::MatrixXd> elig,
                                          const AssociationOptions& opts) {
  opts.validate();
  PeriodAssociation out;
  const int slots = static_cast<int>(elig.size());
  if (slots == 0) return out;
  const int b = static_cast<int>(elig[0].rows());
  const int u = static_cast<int>(elig[0].cols());
  for (const auto& e : elig)
    if (e.rows() != b || e.cols() != u) throw Error("solve_period_assignment: shape mismatch");

  std::vector<double> lambda(u, 0.0);
  std::vector<std::vector<int>> best(slots, std::vector<int>(b, -1));
  int best_served = -1;
  double bound = std::numeric_limits<double>::infinity();

  for (int round = 0; round < opts.dual_iters; ++round) {
    out.dual_rounds = round + 1;
    std::vector<int> counts(u, 0);
    double lagrangian = 0.0;
    std::vector<std::vector<int>> primal(slots, std::vector<int>(b, -1));
    std::vector<char> used(u, 0);
    int served = 0;
    for (int t = 0; t < slots; ++t) {
      Eigen::MatrixXd w = elig[t];
      for (int j = 0; j < u; ++j) w.col(j).array() -= lambda[j];
      const AssignmentSolution sol = hungarian_max(w, true);
      lagrangian += sol.objective_value;
      for (int i = 0; i < b; ++i) {
        const int j = sol.row_to_col[i];
        if (j < 0) continue;
        ++counts[j];
        // Primal recovery: earlier slots keep their users.
        if (!used[j] && elig[t](i, j) > 0.0) {
          used[j] = 1;
          primal[t][i] = j;
          ++served;
        }
      }
    }
    for (double l : lambda) lagrangian += l;
    bound = std::min(bound, lagrangian);
    if (served > best_served) {
      best_served = served;
      best = primal;
    }
    lambda = dual_update(lambda, counts, opts.step);
    if (best_served >= std::floor(bound + 1e-9)) break;
  }

  // Extend to a maximum matching between users and (slot, SBS) pairs.
  std::vector<Slotted> of_user(u);
  for (int t = 0; t < slots; ++t)
    for (int i = 0; i < b; ++i)
      if (best[t][i] >= 0) of_user[best[t][i]] = {t, i};
  for (int j = 0; j < u; ++j) {
    if (of_user[j].t >= 0) continue;
    std::vector<std::vector<char>> seen(slots, std::vector<char>(b, 0));
    augment(j, elig, of_user, best, seen);
  }

  out.sbs_to_user = best;
  out.user_to_sbs.assign(slots, std::vector<int>(u, -1));
  out.total_served = 0;
  for (int t = 0; t < slots; ++t)
    for (int i = 0; i < b; ++i)
      if (best[t][i] >= 0) {
        out.user_to_sbs[t][best[t][i]] = i;
        ++out.total_served;
      }
  out.dual_bound = bound;
  out.lambda = std::move(lambda);
  return out;
}

PeriodAssociation solve_period_association(
    std::span<const std::array<int, 3>> vap_sequence,
    const std::vector<std::vector<int>>& cells, std::span<const double> heights,
    const ScenarioConfig& config, const AssociationOptions& opts) {
  if (vap_sequence.size() != cells.size())
    throw Error("solve_period_association: one VAP set per slot required");
  std::vector<Eigen::MatrixXd> elig;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    if (cells[t].size() != heights.size())
      throw Error("solve_period_association: cells and heights disagree");
    std::vector<Point3> users(heights.size());
    for (std::size_t j = 0; j < heights.size(); ++j) {
      const Point2 c = config.cell_center(cells[t][j]);
      users[j] = {c.x, c.y, heights[j]};
    }
    elig.push_back(eligibility(users, vap_sequence[t], config, opts.blockers));
  }
  return solve_period_assignment(elig, opts);
}

}  // namespace thzvr
