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

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "thzvr/error.hpp"
#include "thzvr/harness.hpp"

extern char** environ;

namespace thzvr {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v))
    throw Error("expected a finite number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw Error("expected an integer, got '" + s + "'");
  return v;
}

int to_int32(const std::string& s) {
  const long long v = to_int(s);
  if (v < -2147483647LL || v > 2147483647LL) throw Error("integer out of range: " + s);
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw Error("expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error("expected true or false, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

// "x y z; x y z"
std::vector<Point3> to_points(const std::string& s) {
  std::vector<Point3> pts;
  if (trim(s).empty()) return pts;
  for (const std::string& item : split(s, ';')) {
    std::istringstream in(item);
    std::vector<std::string> toks;
    std::string tok;
    while (in >> tok) toks.push_back(tok);
    if (toks.size() != 3) throw Error("expected 'x y z' triples separated by ';'");
    pts.push_back({to_double(toks[0]), to_double(toks[1]), to_double(toks[2])});
  }
  return pts;
}

std::string from_points(const std::vector<Point3>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += "; ";
    out += fmt(pts[i].x) + " " + fmt(pts[i].y) + " " + fmt(pts[i].z);
  }
  return out;
}

std::vector<int> to_int_list(const std::string& s) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (const std::string& item : split(s, ',')) out.push_back(to_int32(item));
  return out;
}

std::string from_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

#define THZVR_DOUBLE(sec, name, member)                                               \
  Field{sec, name, [](ExperimentSpec& s, const std::string& v) { s.member = to_double(v); }, \
        [](const ExperimentSpec& s) { return fmt(s.member); }}
#define THZVR_INT(sec, name, member)                                                  \
  Field{sec, name, [](ExperimentSpec& s, const std::string& v) { s.member = to_int32(v); }, \
        [](const ExperimentSpec& s) { return std::to_string(s.member); }}
#define THZVR_BOOL(sec, name, member)                                                 \
  Field{sec, name, [](ExperimentSpec& s, const std::string& v) { s.member = to_bool(v); }, \
        [](const ExperimentSpec& s) { return std::string(s.member ? "true" : "false"); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      THZVR_DOUBLE("scenario", "room_side", scenario.room_side),
      THZVR_DOUBLE("scenario", "ceiling", scenario.ceiling),
      THZVR_INT("scenario", "num_users", scenario.num_users),
      THZVR_DOUBLE("scenario", "height_min", scenario.height_min),
      THZVR_DOUBLE("scenario", "height_max", scenario.height_max),
      THZVR_DOUBLE("scenario", "body_radius", scenario.body_radius),
      THZVR_INT("scenario", "cells_per_side", scenario.cells_per_side),
      THZVR_INT("scenario", "slots_per_period", scenario.slots_per_period),
      THZVR_INT("scenario", "num_periods", scenario.num_periods),
      Field{"scenario", "vap_positions",
            [](ExperimentSpec& s, const std::string& v) { s.scenario.vap_positions = to_points(v); },
            [](const ExperimentSpec& s) { return from_points(s.scenario.vap_positions); }},
      Field{"scenario", "sbs_positions",
            [](ExperimentSpec& s, const std::string& v) { s.scenario.sbs_positions = to_points(v); },
            [](const ExperimentSpec& s) { return from_points(s.scenario.sbs_positions); }},
      THZVR_DOUBLE("radio", "carrier_freq_hz", scenario.radio.carrier_freq_hz),
      THZVR_DOUBLE("radio", "bandwidth_hz", scenario.radio.bandwidth_hz),
      THZVR_DOUBLE("radio", "tx_power_w", scenario.radio.tx_power_w),
      THZVR_DOUBLE("radio", "absorption_per_m", scenario.radio.absorption_per_m),
      THZVR_DOUBLE("radio", "image_bits", scenario.radio.image_bits),
      THZVR_DOUBLE("radio", "slot_s", scenario.radio.slot_s),
      Field{"radio", "noise_density_dbm_hz",
            [](ExperimentSpec& s, const std::string& v) {
              s.scenario.radio.set_noise_density_dbm(to_double(v));
            },
            [](const ExperimentSpec& s) { return fmt(s.scenario.radio.noise_density_dbm_hz); }},
      THZVR_DOUBLE("optics", "fov_semi_angle_deg", scenario.optics.fov_semi_angle_deg),
      THZVR_DOUBLE("learning", "inner_lr", learning.inner_lr),
      THZVR_DOUBLE("learning", "meta_lr", learning.meta_lr),
      THZVR_INT("learning", "inner_trajectories", learning.inner_trajectories),
      THZVR_INT("learning", "outer_trajectories", learning.outer_trajectories),
      THZVR_INT("learning", "iterations", learning.iterations),
      THZVR_INT("learning", "tasks_per_batch", learning.tasks_per_batch),
      THZVR_BOOL("learning", "reward_baseline", learning.reward_baseline),
      THZVR_BOOL("learning", "reward_to_go", learning.reward_to_go),
      Field{"learning", "meta_order",
            [](ExperimentSpec& s, const std::string& v) {
              if (v == "first_order") s.learning.meta_order = MetaOrder::kFirstOrder;
              else if (v == "fd_second_order") s.learning.meta_order = MetaOrder::kFdSecondOrder;
              else throw Error("expected first_order or fd_second_order, got '" + v + "'");
            },
            [](const ExperimentSpec& s) {
              return std::string(s.learning.meta_order == MetaOrder::kFirstOrder
                                     ? "first_order" : "fd_second_order");
            }},
      Field{"learning", "hidden",
            [](ExperimentSpec& s, const std::string& v) { s.learning.hidden = to_int_list(v); },
            [](const ExperimentSpec& s) { return from_int_list(s.learning.hidden); }},
      Field{"learning", "activation",
            [](ExperimentSpec& s, const std::string& v) {
              if (v == "tanh") s.learning.activation = Activation::kTanh;
              else if (v == "relu") s.learning.activation = Activation::kRelu;
              else throw Error("expected tanh or relu, got '" + v + "'");
            },
            [](const ExperimentSpec& s) {
              return std::string(s.learning.activation == Activation::kTanh ? "tanh" : "relu");
            }},
      THZVR_INT("learning", "workers", learning.workers),
      Field{"experiment", "algorithm",
            [](ExperimentSpec& s, const std::string& v) { s.algorithm = parse_algorithm(v); },
            [](const ExperimentSpec& s) { return algorithm_name(s.algorithm); }},
      Field{"experiment", "seed",
            [](ExperimentSpec& s, const std::string& v) { s.master_seed = to_u64(v); },
            [](const ExperimentSpec& s) { return std::to_string(s.master_seed); }},
      Field{"experiment", "output_dir",
            [](ExperimentSpec& s, const std::string& v) { s.output_dir = v; },
            [](const ExperimentSpec& s) { return s.output_dir; }},
      Field{"experiment", "baseline_actions",
            [](ExperimentSpec& s, const std::string& v) {
              if (v == "joint") s.baseline_actions = BaselineActions::kJoint;
              else if (v == "vap") s.baseline_actions = BaselineActions::kVap;
              else throw Error("expected joint or vap, got '" + v + "'");
            },
            [](const ExperimentSpec& s) {
              return std::string(s.baseline_actions == BaselineActions::kJoint ? "joint" : "vap");
            }},
      THZVR_INT("experiment", "eval_tasks", eval_tasks),
      THZVR_INT("experiment", "eval_periods", eval_periods),
      THZVR_INT("tasks", "count", tasks.count),
      THZVR_DOUBLE("tasks", "concentration", tasks.concentration),
      THZVR_INT("tasks", "locality_radius", tasks.locality_radius),
      THZVR_DOUBLE("association", "step", association.step),
      THZVR_INT("association", "dual_iters", association.dual_iters),
      THZVR_BOOL("association", "persist_lambda", association.persist_lambda),
      Field{"association", "blockers",
            [](ExperimentSpec& s, const std::string& v) {
              if (v == "all_bodies") s.association.blockers = BlockerMode::kAllBodies;
              else if (v == "localized_only") s.association.blockers = BlockerMode::kLocalizedOnly;
              else throw Error("expected all_bodies or localized_only, got '" + v + "'");
            },
            [](const ExperimentSpec& s) {
              return std::string(s.association.blockers == BlockerMode::kAllBodies
                                     ? "all_bodies" : "localized_only");
            }},
  };
  return table;
}

#undef THZVR_DOUBLE
#undef THZVR_INT
#undef THZVR_BOOL

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const Field& f : fields())
    if (f.section == section) return true;
  return false;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kMpg: return "mpg";
    case Algorithm::kDmpg: return "dmpg";
    case Algorithm::kBaselinePg: return "pg";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "mpg") return Algorithm::kMpg;
  if (s == "dmpg") return Algorithm::kDmpg;
  if (s == "pg" || s == "baseline_pg") return Algorithm::kBaselinePg;
  throw Error("unknown algorithm '" + s + "' (expected mpg, dmpg or pg)");
}

ExperimentSpec parse_spec(const std::string& text, const std::string& origin,
                          const Overrides& overrides) {
  ExperimentSpec spec;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) throw Error(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw Error(where + "key '" + key + "' outside any section");
    const Field* f = find_field(section, key);
    if (!f) throw Error(where + "unknown key '" + key + "' in section [" + section + "]");
    const std::string full = section + "." + key;
    if (seen.count(full))
      throw Error(where + "duplicate key '" + key + "' (first set on line " +
                  std::to_string(seen[full]) + ")");
    seen[full] = line_no;
    try {
      f->set(spec, value);
    } catch (const Error& e) {
      throw Error(where + full + ": " + e.what());
    }
  }
  for (const auto& [name, value] : overrides) {
    const std::string prefix = "THZVR_";
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string rest = lower(name.substr(prefix.size()));
    const auto us = rest.find('_');
    const std::string sec = us == std::string::npos ? rest : rest.substr(0, us);
    const std::string key = us == std::string::npos ? "" : rest.substr(us + 1);
    const Field* f = find_field(sec, key);
    if (!f) throw Error("environment override " + name + " names no config key");
    try {
      f->set(spec, trim(value));
    } catch (const Error& e) {
      throw Error("environment override " + name + ": " + e.what());
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), path, overrides);
}

Overrides environment_overrides() {
  Overrides out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind("THZVR_", 0) != 0) continue;
    const auto eq = entry.find('=');
    out.emplace_back(entry.substr(0, eq),
                     eq == std::string::npos ? std::string() : entry.substr(eq + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string serialize_spec(const ExperimentSpec& spec) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(spec) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const ExperimentSpec& spec) {
  // Where a run is written does not change what it computes.
  ExperimentSpec keyed = spec;
  keyed.output_dir = "-";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_spec(keyed)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentSpec::validate() const {
  scenario.validate();
  learning.validate();
  association.validate();
  if (tasks.count < 1) throw Error("tasks.count must be >= 1");
  if (!(tasks.concentration > 0.0)) throw Error("tasks.concentration must be positive");
  if (tasks.locality_radius < 0) throw Error("tasks.locality_radius must be >= 0");
  if (eval_tasks < 0) throw Error("experiment.eval_tasks must be >= 0");
  if (eval_periods < 0) throw Error("experiment.eval_periods must be >= 0");
  if (output_dir.empty()) throw Error("experiment.output_dir must not be empty");
  const bool joint = algorithm == Algorithm::kMpg ||
                     (algorithm == Algorithm::kBaselinePg &&
                      baseline_actions == BaselineActions::kJoint);
  if (joint && joint_action_count(scenario.vap_count(), scenario.num_users,
                                  scenario.sbs_count()) > kJointActionCap)
    throw Error("experiment.algorithm: joint action space exceeds the cap of " +
                std::to_string(kJointActionCap) + "; use dmpg");
}

}  // namespace thzvr
