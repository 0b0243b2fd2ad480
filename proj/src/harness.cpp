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

#include "thzvr/harness.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "thzvr/error.hpp"
#include "thzvr/seed.hpp"

namespace thzvr {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace

std::vector<Task> make_task_stream(const ExperimentSpec& spec) {
  std::vector<Task> tasks;
  const RoomGrid grid = spec.scenario.grid();
  for (int k = 0; k < spec.tasks.count; ++k)
    tasks.push_back(sample_task(
        derive_seed({seed_tag::kTask, spec.master_seed, static_cast<std::uint64_t>(k)}),
        spec.tasks.concentration, spec.tasks.locality_radius, grid, k));
  return tasks;
}

std::vector<Task> make_eval_tasks(const ExperimentSpec& spec) {
  std::vector<Task> tasks;
  const RoomGrid grid = spec.scenario.grid();
  for (int k = 0; k < spec.eval_tasks; ++k)
    tasks.push_back(sample_task(
        derive_seed({seed_tag::kEval, spec.master_seed, static_cast<std::uint64_t>(k)}),
        spec.tasks.concentration, spec.tasks.locality_radius, grid, spec.tasks.count + k));
  return tasks;
}

std::unique_ptr<RolloutModel> make_model(const ExperimentSpec& spec,
                                         const std::string& algorithm) {
  const Algorithm a = parse_algorithm(algorithm);
  const bool joint = a == Algorithm::kMpg ||
                     (a == Algorithm::kBaselinePg &&
                      spec.baseline_actions == BaselineActions::kJoint);
  if (joint) return std::make_unique<JointActionModel>(spec.scenario);
  return std::make_unique<VapSelectionModel>(spec.scenario, spec.association);
}

std::unique_ptr<RolloutModel> make_model(const ExperimentSpec& spec) {
  return make_model(spec, algorithm_name(spec.algorithm));
}

EvalResult evaluate_policy(const RolloutModel& model, const PolicyParams& params,
                           std::span<const Task> tasks, int periods, std::uint64_t seed,
                           const TrajectoryObserver& observer) {
  EvalResult out;
  const auto* vap = dynamic_cast<const VapSelectionModel*>(&model);
  long served = 0;
  for (const Task& task : tasks) {
    const std::uint64_t base =
        derive_seed({seed_tag::kEval, seed, static_cast<std::uint64_t>(task.id)});
    std::vector<Trajectory> trajs;
    if (vap) {
      trajs = rollout_periods(*vap, params, task, periods, base);
    } else {
      for (int p = 0; p < periods; ++p)
        trajs.push_back(
            model.rollout(params, task, derive_seed({base, static_cast<std::uint64_t>(p)})));
    }
    for (Trajectory& t : trajs) {
      if (observer) observer(t);
      served += t.total_reward;
      out.trajectories.push_back(std::move(t));
    }
    out.periods += periods;
  }
  const double denom =
      static_cast<double>(model.scenario().num_users) * static_cast<double>(out.periods);
  out.avg_reliability = out.periods > 0 ? static_cast<double>(served) / denom : 0.0;
  return out;
}

RunMetrics run(const ExperimentSpec& spec, const RunOptions& opts) {
  spec.validate();
  const auto model = make_model(spec);
  const std::vector<Task> tasks = make_task_stream(spec);

  TrainOptions topts;
  topts.master_seed = spec.master_seed;
  topts.observer = opts.observer;
  TrainResult trained = spec.algorithm == Algorithm::kBaselinePg
                            ? train_baseline_pg(*model, spec.learning, tasks, topts)
                            : meta_train(*model, spec.learning, tasks, topts);

  const int periods = spec.eval_periods > 0 ? spec.eval_periods : spec.scenario.num_periods;
  const std::vector<Task> eval_tasks = make_eval_tasks(spec);
  const EvalResult eval = evaluate_policy(*model, trained.params, eval_tasks, periods,
                                          spec.master_seed, opts.observer);

  RunMetrics out;
  out.series = trained.metrics;
  out.avg_reliability = eval.avg_reliability;
  out.total_wall_clock_s = trained.metrics.empty() ? 0.0 : trained.metrics.back().wall_clock_s;
  out.params = trained.params;
  if (!opts.write_artifacts) return out;

  const std::filesystem::path dir(spec.output_dir);
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "metrics.csv");
    f << "iteration,mean_reward,std_reward\n";
    for (const auto& m : out.series)
      f << m.iteration << ',' << fmt(m.mean_reward) << ',' << fmt(m.std_reward) << '\n';
  }
  {
    auto f = open_out(dir / "timing.csv");
    f << "iteration,wall_clock_s\n";
    for (const auto& m : out.series) f << m.iteration << ',' << fmt(m.wall_clock_s) << '\n';
  }
  {
    auto f = open_out(dir / "config.cfg");
    f << serialize_spec(spec);
  }
  const std::uint64_t hash = config_hash(spec);
  save_checkpoint((dir / "policy.ckpt").string(),
                  {trained.params, algorithm_name(spec.algorithm), hash});
  {
    auto f = open_out(dir / "trajectories.csv");
    write_trajectory_csv(f, eval.trajectories, spec.scenario,
                         dynamic_cast<const VapSelectionModel*>(model.get()) != nullptr);
  }
  {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016" PRIx64, hash);
    nlohmann::json j;
    j["algorithm"] = algorithm_name(spec.algorithm);
    j["master_seed"] = spec.master_seed;
    j["config_hash"] = hex;
    j["iterations"] = static_cast<int>(out.series.size());
    j["final_mean_reward"] = out.series.empty() ? 0.0 : out.series.back().mean_reward;
    j["avg_reliability_per_user"] = out.avg_reliability;
    j["eval_tasks"] = spec.eval_tasks;
    j["eval_periods"] = eval.periods;
    j["action_count"] = model->action_count();
    j["param_count"] = trained.params.size();
    j["total_wall_clock_s"] = out.total_wall_clock_s;
    auto f = open_out(dir / "summary.json");
    f << j.dump(2) << '\n';
  }
  return out;
}

}  // namespace thzvr
