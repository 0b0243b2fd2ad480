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

#include "oracles/assignment_oracle.hpp"

#include <algorithm>
#include <functional>

namespace oracle {

namespace {

// Maps -1 above all columns for ordering.
bool lex_less(const std::vector<int>& a, const std::vector<int>& b, int cols) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int x = a[i] < 0 ? cols : a[i];
    const int y = b[i] < 0 ? cols : b[i];
    if (x != y) return x < y;
  }
  return false;
}

}  // namespace

BruteAssignment brute_force_assignment(const Matrix& w, bool allow_skip, double tol) {
  const int n = static_cast<int>(w.size());
  const int m = n ? static_cast<int>(w[0].size()) : 0;
  const int need = std::min(n, m);
  BruteAssignment best;
  bool have = false;
  std::vector<int> cur(n, -1);
  std::vector<char> used(m, 0);
  std::function<void(int, int, double)> rec = [&](int r, int pairs, double val) {
    if (r == n) {
      if (!allow_skip && pairs != need) return;
      const bool better = !have || val > best.value + tol;
      const bool tie = have && val >= best.value - tol && lex_less(cur, best.row_to_col, m);
      if (better || tie) {
        if (better) best.value = val;
        best.row_to_col = cur;
        have = true;
      }
      return;
    }
    for (int c = 0; c < m; ++c) {
      if (used[c]) continue;
      if (allow_skip && !(w[r][c] > 0.0)) continue;
      used[c] = 1;
      cur[r] = c;
      rec(r + 1, pairs + 1, val + w[r][c]);
      used[c] = 0;
      cur[r] = -1;
    }
    rec(r + 1, pairs, val);
  };
  rec(0, 0, 0.0);
  return best;
}

int exhaustive_period_optimum(const std::vector<Matrix>& elig) {
  const int slots = static_cast<int>(elig.size());
  if (slots == 0) return 0;
  const int b = static_cast<int>(elig[0].size());
  if (b == 0) return 0;
  const int u = b ? static_cast<int>(elig[0][0].size()) : 0;
  std::vector<char> served(u, 0);
  int best = 0;
  // Each (slot, SBS) picks one user or nobody; a user appears at most once.
  std::function<void(int, int, int)> rec = [&](int t, int i, int total) {
    if (t == slots) {
      best = std::max(best, total);
      return;
    }
    const int nt = i + 1 == b ? t + 1 : t;
    const int ni = i + 1 == b ? 0 : i + 1;
    rec(nt, ni, total);
    for (int j = 0; j < u; ++j) {
      if (served[j]) continue;
      served[j] = 1;
      rec(nt, ni, total + (elig[t][i][j] > 0.0 ? 1 : 0));
      served[j] = 0;
    }
  };
  rec(0, 0, 0);
  return best;
}

}  // namespace oracle
