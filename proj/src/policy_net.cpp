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

#include "thzvr/policy_net.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "thzvr/error.hpp"

namespace thzvr {

namespace {

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct LayerView {
  ConstMatMap w;
  ConstVecMap b;
};

LayerView layer(const PolicyParams& p, std::size_t offset, const LayerShape& s) {
  const double* base = p.flat.data() + offset;
  return {ConstMatMap(base, s.out, s.in),
          ConstVecMap(base + static_cast<std::size_t>(s.in) * s.out, s.out)};
}

void activate(Eigen::VectorXd& z, Activation act) {
  if (act == Activation::kTanh)
    z = z.array().tanh();
  else
    z = z.array().max(0.0);
}

// Hidden activations a_0 = x, a_1, ..., a_{L-1}; returns the softmax.
Eigen::VectorXd run(const PolicyParams& params, const Eigen::VectorXd& x,
                    std::vector<Eigen::VectorXd>* acts) {
  if (params.layers.empty() || x.size() != params.layers.front().in)
    throw Error("forward: encoding length does not match the first layer");
  Eigen::VectorXd a = x;
  std::size_t off = 0;
  const std::size_t n = params.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    const LayerView v = layer(params, off, params.layers[l]);
    off += params.layers[l].param_count();
    if (acts) acts->push_back(a);
    Eigen::VectorXd z = v.w * a + v.b;
    if (l + 1 < n) activate(z, params.activation);
    a = std::move(z);
  }
  const double m = a.maxCoeff();
  if (!std::isfinite(m)) throw Error("forward: non-finite logits (NaN in parameters?)");
  a = (a.array() - m).exp();
  a /= a.sum();
  return a;
}

}  // namespace

std::vector<LayerShape> make_layer_shapes(int input, const std::vector<int>& hidden,
                                          int actions) {
  std::vector<LayerShape> shapes;
  int prev = input;
  for (int h : hidden) {
    shapes.push_back({prev, h});
    prev = h;
  }
  shapes.push_back({prev, actions});
  return shapes;
}

PolicyParams init_params(const std::vector<LayerShape>& layers, std::uint64_t seed,
                         Activation activation) {
  if (layers.empty()) throw Error("init_params: no layers");
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].in < 1 || layers[l].out < 1) throw Error("init_params: empty layer");
    if (l > 0 && layers[l].in != layers[l - 1].out)
      throw Error("init_params: layer shapes do not chain");
    total += layers[l].param_count();
  }
  PolicyParams p;
  p.layers = layers;
  p.activation = activation;
  p.flat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  std::mt19937_64 rng(seed);
  std::size_t off = 0;
  for (const LayerShape& s : layers) {
    std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(s.in)));
    const std::size_t nw = static_cast<std::size_t>(s.in) * s.out;
    for (std::size_t i = 0; i < nw; ++i) p.flat[static_cast<Eigen::Index>(off + i)] = w(rng);
    off += s.param_count();
  }
  return p;
}

Eigen::VectorXd encode_state(const EnvState& state, const ScenarioConfig& config) {
  const int u = static_cast<int>(state.user_cells.size());
  Eigen::VectorXd e(4 * u);
  for (int j = 0; j < u; ++j) {
    const Point2 c = config.cell_center(state.user_cells[j]);
    e[3 * j] = c.x / config.room_side;
    e[3 * j + 1] = c.y / config.room_side;
    e[3 * j + 2] = state.user_heights[j] / config.ceiling;
    e[3 * u + j] = state.served[j] ? 1.0 : 0.0;
  }
  return e;
}

Eigen::VectorXd forward(const PolicyParams& params, const Eigen::VectorXd& encoding) {
  return run(params, encoding, nullptr);
}

double log_prob(const PolicyParams& params, const Eigen::VectorXd& encoding,
                std::size_t action) {
  return std::log(forward(params, encoding)[static_cast<Eigen::Index>(action)]);
}

void accumulate_grad_log_prob(const PolicyParams& params,
                              const Eigen::VectorXd& encoding, std::size_t action,
                              double scale, Eigen::Ref<Eigen::VectorXd> grad) {
  if (action >= params.action_count()) throw Error("grad_log_prob: action out of range");
  std::vector<Eigen::VectorXd> acts;
  const Eigen::VectorXd probs = run(params, encoding, &acts);

  std::vector<std::size_t> offsets(params.layers.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    offsets[l] = off;
    off += params.layers[l].param_count();
  }

  // d log softmax_a / d logits = onehot(a) - pi
  Eigen::VectorXd delta = -scale * probs;
  delta[static_cast<Eigen::Index>(action)] += scale;

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const LayerShape& s = params.layers[l];
    const Eigen::VectorXd& a = acts[l];
    double* base = grad.data() + offsets[l];
    Eigen::Map<Eigen::MatrixXd> gw(base, s.out, s.in);
    Eigen::Map<Eigen::VectorXd> gb(base + static_cast<std::size_t>(s.in) * s.out, s.out);
    gw.noalias() += delta * a.transpose();
    gb += delta;
    if (l == 0) break;
    const LayerView v = layer(params, offsets[l], s);
    Eigen::VectorXd up = v.w.transpose() * delta;
    if (params.activation == Activation::kTanh)
      up.array() *= 1.0 - a.array().square();
    else
      up.array() *= (a.array() > 0.0).cast<double>();
    delta = std::move(up);
  }
}

Eigen::VectorXd grad_log_prob(const PolicyParams& params,
                              const Eigen::VectorXd& encoding, std::size_t action) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  accumulate_grad_log_prob(params, encoding, action, 1.0, g);
  return g;
}

std::size_t sample_action(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = static_cast<std::size_t>(i);
    acc += probs[i];
    if (u < acc) return last;
  }
  return last;
}

// Layout:
//   thzvr-checkpoint 1\n
//   algorithm <name>\n
//   activation <tanh|relu>\n
//   layers <in>x<out> ...\n
//   action_count <n>\n
//   config_hash <16 hex digits>\n
//   params <count>\n
//   <count little-endian IEEE-754 float64 values>
void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_checkpoint: cannot open " + path);
  const PolicyParams& p = ckpt.params;
  out << "thzvr-checkpoint 1\n";
  out << "algorithm " << ckpt.algorithm << '\n';
  out << "activation " << (p.activation == Activation::kTanh ? "tanh" : "relu") << '\n';
  out << "layers";
  for (const LayerShape& s : p.layers) out << ' ' << s.in << 'x' << s.out;
  out << '\n';
  out << "action_count " << p.action_count() << '\n';
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(ckpt.config_hash));
  out << "config_hash " << hex << '\n';
  out << "params " << p.size() << '\n';
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  out.write(reinterpret_cast<const char*>(p.flat.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!out) throw Error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_checkpoint: cannot open " + path);
  auto next_line = [&](const char* key) {
    std::string line;
    if (!std::getline(in, line)) throw Error(std::string("load_checkpoint: missing ") + key);
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw Error(std::string("load_checkpoint: expected ") + key + ", got " + k);
    std::string rest;
    std::getline(ls, rest);
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    return rest;
  };
  if (next_line("thzvr-checkpoint") != "1") throw Error("load_checkpoint: unsupported version");
  Checkpoint ck;
  ck.algorithm = next_line("algorithm");
  const std::string act = next_line("activation");
  if (act == "tanh")
    ck.params.activation = Activation::kTanh;
  else if (act == "relu")
    ck.params.activation = Activation::kRelu;
  else
    throw Error("load_checkpoint: unknown activation " + act);
  std::istringstream ls(next_line("layers"));
  std::string tok;
  while (ls >> tok) {
    LayerShape s;
    if (std::sscanf(tok.c_str(), "%dx%d", &s.in, &s.out) != 2)
      throw Error("load_checkpoint: bad layer " + tok);
    ck.params.layers.push_back(s);
  }
  const std::size_t actions = std::stoull(next_line("action_count"));
  ck.config_hash = std::stoull(next_line("config_hash"), nullptr, 16);
  const std::size_t count = std::stoull(next_line("params"));
  std::size_t expect = 0;
  for (const LayerShape& s : ck.params.layers) expect += s.param_count();
  if (count != expect || actions != ck.params.action_count())
    throw Error("load_checkpoint: header is inconsistent");
  ck.params.flat.resize(static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(ck.params.flat.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
    throw Error("load_checkpoint: truncated parameter block");
  return ck;
}

}  // namespace thzvr
