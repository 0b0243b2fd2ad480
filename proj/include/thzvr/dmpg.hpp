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

#ifndef THZVR_DMPG_HPP_
#define THZVR_DMPG_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "thzvr/association.hpp"
#include "thzvr/meta_rl.hpp"

namespace thzvr {

// All C(V,3) VAP sets in lexicographic order. Throws for V < 3.
std::vector<std::array<int, 3>> enumerate_vap_actions(int vaps);

// Dual state owned by one rollout for the current period.
struct DualContext {
  std::vector<double> lambda;
  std::vector<int> counts;  // associations so far this period

  explicit DualContext(int users = 0) : lambda(users, 0.0), counts(users, 0) {}
};

struct DmpgStepResult {
  StepResult step;
  JointAction action;
  std::vector<double> lambda;  // values used for this slot's weights
};

// slot_assign on the current state, then env::step with the composed action.
DmpgStepResult dmpg_step(const EnvState& state, const std::array<int, 3>& vaps,
                         DualContext& ctx, const Task& task,
                         const ScenarioConfig& scenario,
                         const AssociationOptions& opts = {},
                         std::uint64_t realization_seed = 0);

// Period-end dual step; lambda returns to 0 unless opts.persist_lambda.
void finish_period(DualContext& ctx, const AssociationOptions& opts);

// Policy over VAP sets only; association comes from slot_assign.
class VapSelectionModel final : public RolloutModel {
 public:
  VapSelectionModel(ScenarioConfig scenario, AssociationOptions opts = {});

  const ScenarioConfig& scenario() const override { return scenario_; }
  std::size_t action_count() const override { return actions_.size(); }
  std::string name() const override { return "dmpg"; }
  bool association_once() const override {
    return opts_.blockers == BlockerMode::kAllBodies;
  }
  Trajectory rollout(const PolicyParams& params, const Task& task,
                     std::uint64_t seed) const override;

  // One period starting from an existing dual context, which is advanced.
  Trajectory rollout_with(const PolicyParams& params, const Task& task,
                          std::uint64_t seed, DualContext& ctx) const;

  const std::vector<std::array<int, 3>>& actions() const { return actions_; }
  const AssociationOptions& options() const { return opts_; }

 private:
  ScenarioConfig scenario_;
  AssociationOptions opts_;
  std::vector<std::array<int, 3>> actions_;
};

TrainResult train_dmpg(const LearningConfig& cfg, const ScenarioConfig& scenario,
                       std::span<const Task> tasks, const TrainOptions& opts,
                       const AssociationOptions& assoc = {});

// |periods| consecutive periods of one task sharing a dual context.
std::vector<Trajectory> rollout_periods(const VapSelectionModel& model,
                                        const PolicyParams& params, const Task& task,
                                        int periods, std::uint64_t seed);

}  // namespace thzvr

#endif  // THZVR_DMPG_HPP_
