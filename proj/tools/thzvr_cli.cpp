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

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "thzvr/error.hpp"
#include "thzvr/harness.hpp"

namespace {

using namespace thzvr;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string algo;
  std::string out;
  std::optional<int> workers;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_algo) {
  cmd->add_option("--config", f.config, "Config file (defaults when omitted)");
  cmd->add_option("--seed", f.seed, "Master seed");
  if (with_algo)
    cmd->add_option("--algo", f.algo, "Algorithm")
        ->check(CLI::IsMember({"mpg", "dmpg", "pg"}));
  cmd->add_option("--workers", f.workers, "Rollout threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--print-config", f.print_config, "Print the resolved config and exit");
}

ExperimentSpec resolve(const CommonFlags& f) {
  const Overrides env = environment_overrides();
  ExperimentSpec spec = f.config.empty() ? parse_spec("", "<defaults>", env)
                                         : load_spec(f.config, env);
  if (f.seed) spec.master_seed = *f.seed;
  if (!f.algo.empty()) spec.algorithm = parse_algorithm(f.algo);
  if (!f.out.empty()) spec.output_dir = f.out;
  if (f.workers) spec.learning.workers = *f.workers;
  spec.validate();
  return spec;
}

std::unique_ptr<RolloutModel> model_for(const ExperimentSpec& spec, const Checkpoint& ck) {
  auto model = make_model(spec, ck.algorithm);
  if (model->action_count() != ck.params.action_count())
    throw Error("checkpoint head has " + std::to_string(ck.params.action_count()) +
                " actions but the config's scenario needs " +
                std::to_string(model->action_count()));
  return model;
}

void write_csv_trajs(const std::string& path, const RolloutModel& model,
                     const std::vector<Trajectory>& trajs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  write_trajectory_csv(f, trajs, model.scenario(), model.name() == "dmpg");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seedable THz/VLC wireless VR simulator and meta policy-gradient trainer",
               "thzvr"};
  app.require_subcommand(0, 1);
  bool top_print = false;
  app.add_flag("--print-config", top_print, "Print the default config and exit");

  CommonFlags train_f, adapt_f, eval_f, oracle_f, sim_f;

  auto* train = app.add_subcommand("train", "Train and write run artifacts");
  add_common(train, train_f, true);
  train->add_option("--out", train_f.out, "Output directory");

  auto* adapt = app.add_subcommand("adapt", "Inner-loop adaptation of a checkpoint");
  add_common(adapt, adapt_f, false);
  std::string adapt_ckpt;
  std::uint64_t task_seed = 0;
  int steps = 10;
  adapt->add_option("--checkpoint", adapt_ckpt, "Input checkpoint")->required();
  adapt->add_option("--task-seed", task_seed, "Seed of the new task")->required();
  adapt->add_option("--steps", steps, "Inner updates")->check(CLI::NonNegativeNumber);
  adapt->add_option("--out", adapt_f.out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Roll a frozen policy on fresh tasks");
  add_common(eval, eval_f, false);
  std::string eval_ckpt;
  int eval_periods = 0;
  eval->add_option("--checkpoint", eval_ckpt, "Policy checkpoint")->required();
  eval->add_option("--periods", eval_periods, "Periods per task")->check(CLI::NonNegativeNumber);
  eval->add_option("--out", eval_f.out, "Directory for trajectories.csv and eval.json");

  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum on a small scenario");
  add_common(oracle, oracle_f, false);
  std::optional<std::uint64_t> oracle_task_seed;
  std::uint64_t realization = 0;
  oracle->add_option("--task-seed", oracle_task_seed, "Task seed (default: task 0 of the stream)");
  oracle->add_option("--realization", realization, "Mobility realization seed");

  auto* sim = app.add_subcommand("simulate", "Random or checkpoint policy rollouts to CSV");
  add_common(sim, sim_f, true);
  std::string sim_ckpt;
  int sim_periods = 0;
  sim->add_option("--checkpoint", sim_ckpt, "Policy checkpoint (default: uniform random)");
  sim->add_option("--periods", sim_periods, "Periods (default: scenario.num_periods)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--out", sim_f.out, "Directory for trajectories.csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "thzvr: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    auto print_if = [](const CommonFlags& f, const ExperimentSpec& spec) {
      if (!f.print_config) return false;
      std::cout << serialize_spec(spec);
      return true;
    };

    if (app.got_subcommand(train)) {
      const ExperimentSpec spec = resolve(train_f);
      if (print_if(train_f, spec)) return 0;
      const RunMetrics m = run(spec);
      std::cout << "iterations " << m.series.size() << "\n"
                << "avg_reliability_per_user " << m.avg_reliability << "\n"
                << "output_dir " << spec.output_dir << "\n";
      return 0;
    }

    if (app.got_subcommand(adapt)) {
      const std::string out_dir = adapt_f.out;
      adapt_f.out.clear();
      const ExperimentSpec spec = resolve(adapt_f);
      if (print_if(adapt_f, spec)) return 0;
      const Checkpoint ck = load_checkpoint(adapt_ckpt);
      const auto model = model_for(spec, ck);
      const Task task = sample_task(task_seed, spec.tasks.concentration,
                                    spec.tasks.locality_radius, spec.scenario.grid(), 0);
      const AdaptResult r =
          thzvr::adapt(*model, ck.params, task, steps, spec.learning, spec.master_seed);
      std::filesystem::create_directories(out_dir);
      save_checkpoint((std::filesystem::path(out_dir) / "adapted.ckpt").string(),
                      {r.params, ck.algorithm, ck.config_hash});
      std::ofstream f(std::filesystem::path(out_dir) / "adapt_curve.csv", std::ios::binary);
      f << "step,mean_reward\n";
      for (std::size_t s = 0; s < r.curve.size(); ++s) f << s << ',' << r.curve[s] << '\n';
      std::cout << "steps " << steps << "\n";
      return 0;
    }

    if (app.got_subcommand(eval)) {
      const std::string out_dir = eval_f.out;
      eval_f.out.clear();
      const ExperimentSpec spec = resolve(eval_f);
      if (print_if(eval_f, spec)) return 0;
      const Checkpoint ck = load_checkpoint(eval_ckpt);
      const auto model = model_for(spec, ck);
      const int periods = eval_periods > 0 ? eval_periods
                          : spec.eval_periods > 0 ? spec.eval_periods
                                                  : spec.scenario.num_periods;
      const auto tasks = make_eval_tasks(spec);
      const EvalResult r = evaluate_policy(*model, ck.params, tasks, periods, spec.master_seed);
      nlohmann::json j;
      j["algorithm"] = ck.algorithm;
      j["eval_tasks"] = tasks.size();
      j["periods"] = r.periods;
      j["avg_reliability_per_user"] = r.avg_reliability;
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_csv_trajs((std::filesystem::path(out_dir) / "trajectories.csv").string(), *model,
                        r.trajectories);
        std::ofstream f(std::filesystem::path(out_dir) / "eval.json");
        f << j.dump(2) << '\n';
      }
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (app.got_subcommand(oracle)) {
      const ExperimentSpec spec = resolve(oracle_f);
      if (print_if(oracle_f, spec)) return 0;
      const Task task =
          oracle_task_seed
              ? sample_task(*oracle_task_seed, spec.tasks.concentration,
                            spec.tasks.locality_radius, spec.scenario.grid(), 0)
              : make_task_stream(spec).front();
      const OracleResult r = brute_force_oracle(task, spec.scenario, realization);
      std::cout << "best_reward " << r.best_reward << "\n";
      for (std::size_t t = 0; t < r.best_actions.size(); ++t) {
        const JointAction& a = r.best_actions[t];
        std::cout << "slot " << t << " action " << r.best_action_indices[t] << " vaps "
                  << a.vaps[0] << ' ' << a.vaps[1] << ' ' << a.vaps[2] << " user_to_sbs";
        for (int s : a.user_to_sbs) std::cout << ' ' << s;
        std::cout << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(sim)) {
      const std::string out_dir = sim_f.out;
      sim_f.out.clear();
      const ExperimentSpec spec = resolve(sim_f);
      if (print_if(sim_f, spec)) return 0;
      std::unique_ptr<RolloutModel> model;
      PolicyParams params;
      if (!sim_ckpt.empty()) {
        const Checkpoint ck = load_checkpoint(sim_ckpt);
        model = model_for(spec, ck);
        params = ck.params;
      } else {
        model = make_model(spec);
        params = initial_policy(*model, spec.learning, spec.master_seed);
        params.flat.setZero();  // uniform over actions
      }
      const int periods = sim_periods > 0 ? sim_periods : spec.scenario.num_periods;
      const auto tasks = make_task_stream(spec);
      const EvalResult r = evaluate_policy(*model, params, std::span(tasks).first(1), periods,
                                           spec.master_seed);
      if (out_dir.empty()) {
        write_trajectory_csv(std::cout, r.trajectories, spec.scenario, model->name() == "dmpg");
      } else {
        std::filesystem::create_directories(out_dir);
        write_csv_trajs((std::filesystem::path(out_dir) / "trajectories.csv").string(), *model,
                        r.trajectories);
        std::cout << "avg_reliability_per_user " << r.avg_reliability << "\n";
      }
      return 0;
    }

    if (top_print) {
      std::cout << serialize_spec(resolve(CommonFlags{}));
      return 0;
    }
    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "thzvr: error: " << e.what() << "\n";
    return 1;
  }
}
