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

#include "thzvr/dmpg.hpp"

#include "thzvr/error.hpp"
#include "thzvr/seed.hpp"

namespace thzvr {

std::vector<std::array<int, 3>> enumerate_vap_actions(int vaps) {
  if (vaps < 3) throw Error("enumerate_vap_actions: need at least 3 VAPs");
  return vap_triples(vaps);
}

DmpgStepResult dmpg_step(const EnvState& state, const std::array<int, 3>& vaps,
                         DualContext& ctx, const Task& task,
                         const ScenarioConfig& scenario, const AssociationOptions& opts,
                         std::uint64_t realization_seed) {
  const int u = scenario.num_users;
  if (ctx.lambda.size() != static_cast<std::size_t>(u)) ctx = DualContext(u);
  DmpgStepResult out;
  out.lambda = ctx.lambda;
  const AssignmentSolution sol = slot_assign(state, vaps, ctx.lambda, scenario, opts.blockers);
  out.action.vaps = vaps;
  out.action.user_to_sbs.assign(u, -1);
  for (std::size_t i = 0; i < sol.row_to_col.size(); ++i) {
    const int j = sol.row_to_col[i];
    if (j < 0) continue;
    out.action.user_to_sbs[j] = static_cast<int>(i);
    ++ctx.counts[j];
  }
  out.step = step(state, out.action, task, scenario, realization_seed);
  return out;
}

void finish_period(DualContext& ctx, const AssociationOptions& opts) {
  ctx.lambda = dual_update(ctx.lambda, ctx.counts, opts.step);
  if (!opts.persist_lambda) std::fill(ctx.lambda.begin(), ctx.lambda.end(), 0.0);
  std::fill(ctx.counts.begin(), ctx.counts.end(), 0);
}

VapSelectionModel::VapSelectionModel(ScenarioConfig scenario, AssociationOptions opts)
    : scenario_(std::move(scenario)), opts_(opts),
      actions_(enumerate_vap_actions(scenario_.vap_count())) {
  opts_.validate();
}

Trajectory VapSelectionModel::rollout_with(const PolicyParams& params, const Task& task,
                                           std::uint64_t seed, DualContext& ctx) const {
  Trajectory traj;
  traj.task_id = task.id;
  traj.realization_seed = rollout_realization_seed(seed);
  auto rng = rollout_action_rng(seed);
  EnvState state = reset(task, scenario_);
  for (int t = 0; t < scenario_.slots_per_period; ++t) {
    const Eigen::VectorXd probs = forward(params, encode_state(state, scenario_));
    const std::size_t a = sample_action(probs, rng);
    DmpgStepResult r =
        dmpg_step(state, actions_[a], ctx, task, scenario_, opts_, traj.realization_seed);
    traj.total_reward += static_cast<int>(r.step.newly_served.size());
    traj.steps.push_back({std::move(state), a, std::move(r.action),
                          std::move(r.step.localized), std::move(r.step.tx_ok),
                          std::move(r.step.newly_served), std::move(r.lambda)});
    state = std::move(r.step.next);
  }
  traj.final_state = std::move(state);
  finish_period(ctx, opts_);
  return traj;
}

Trajectory VapSelectionModel::rollout(const PolicyParams& params, const Task& task,
                                      std::uint64_t seed) const {
  DualContext ctx(scenario_.num_users);
  return rollout_with(params, task, seed, ctx);
}

TrainResult train_dmpg(const LearningConfig& cfg, const ScenarioConfig& scenario,
                       std::span<const Task> tasks, const TrainOptions& opts,
                       const AssociationOptions& assoc) {
  const VapSelectionModel model(scenario, assoc);
  return meta_train(model, cfg, tasks, opts);
}

std::vector<Trajectory> rollout_periods(const VapSelectionModel& model,
                                        const PolicyParams& params, const Task& task,
                                        int periods, std::uint64_t seed) {
  DualContext ctx(model.scenario().num_users);
  std::vector<Trajectory> out;
  for (int p = 0; p < periods; ++p)
    out.push_back(model.rollout_with(params, task,
                                     derive_seed({seed, static_cast<std::uint64_t>(p)}), ctx));
  return out;
}

}  // namespace thzvr
