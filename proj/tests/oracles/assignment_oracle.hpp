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

#ifndef THZVR_TESTS_ASSIGNMENT_ORACLE_HPP_
#define THZVR_TESTS_ASSIGNMENT_ORACLE_HPP_

#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

struct BruteAssignment {
  double value = 0.0;
  std::vector<int> row_to_col;  // lexicographically smallest optimum
};

// Exhaustive search over injective row -> column maps. Without
// |allow_skip| exactly min(rows, cols) pairs are used. "Unmatched" sorts
// after every column when comparing optima; values within |tol| tie.
BruteAssignment brute_force_assignment(const Matrix& w, bool allow_skip,
                                       double tol = 1e-9);

// Max users served over one period: elig[t][i][j] in {0, 1}, each SBS
// serves at most one user per slot, each user at most once per period.
int exhaustive_period_optimum(const std::vector<Matrix>& elig);

}  // namespace oracle

#endif  // THZVR_TESTS_ASSIGNMENT_ORACLE_HPP_
