// Copyright 2026 The HybridLink Authors
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

// Gaussian MLP policy and value function, GAE and the clipped PPO update.
//
// Networks are batched column-wise: an input matrix has one sample per
// column. Hidden layers use tanh, output layers are linear. The policy's
// standard deviation is a learnable state-independent vector exp(log_std).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hybridlink/errors.hpp"
#include "hybridlink/liegroup.hpp"

namespace hybridlink {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;

// Seeded random source whose full state (engine and cached normal deviate)
// can be saved and restored.
struct Rng {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal;

  Rng() = default;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  Rng(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    for (auto k : keys) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine.seed(seq);
  }

  double gaussian() { return normal(engine); }

  std::string serialize() const {
    std::ostringstream os;
    os << engine << " " << normal;
    return os.str();
  }
  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> engine >> normal;
    if (!is) throw FormatError("invalid random-number state");
  }
};

struct Layer {
  MatX w;  // out x in
  VecX b;  // out
};

class MLP {
 public:
  MLP() = default;

  // Weights ~ N(0, gain^2 / fan_in); the last layer uses `out_gain`.
  MLP(const std::vector<int>& sizes, Rng& rng, double out_gain = 1.0) {
    if (sizes.size() < 2) throw InvalidArgument("MLP needs at least two layer sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Layer layer;
      const int in = sizes[l], out = sizes[l + 1];
      if (in < 1 || out < 1) throw InvalidArgument("MLP layer sizes must be positive");
      const double gain = (l + 2 == sizes.size()) ? out_gain : 1.0;
      layer.w.resize(out, in);
      const double scale = gain / std::sqrt(static_cast<double>(in));
      for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) layer.w(r, c) = scale * rng.gaussian();
      }
      layer.b = VecX::Zero(out);
      layers_.push_back(std::move(layer));
    }
  }

  static MLP zeros_like(const MLP& other) {
    MLP m;
    for (const auto& l : other.layers_) {
      m.layers_.push_back({MatX::Zero(l.w.rows(), l.w.cols()), VecX::Zero(l.b.size())});
    }
    return m;
  }

  std::vector<int> sizes() const {
    std::vector<int> s;
    if (layers_.empty()) return s;
    s.push_back(static_cast<int>(layers_.front().w.cols()));
    for (const auto& l : layers_) s.push_back(static_cast<int>(l.w.rows()));
    return s;
  }
  int input_dim() const { return static_cast<int>(layers_.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().w.rows()); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  struct Cache {
    std::vector<MatX> activations;  // input, hidden outputs, network output
  };

  MatX forward(const MatX& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim()) {
      throw InvalidArgument("MLP: input has " + std::to_string(x.rows()) +
                            " rows, expected " + std::to_string(input_dim()));
    }
    MatX a = x;
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(a);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      MatX z = layers_[l].w * a;
      z.colwise() += layers_[l].b;
      if (l + 1 < layers_.size()) z = z.array().tanh().matrix();
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  // Accumulates dL/dparams into `grad` given dL/d(output).
  void backward(const Cache& cache, const MatX& dout, MLP& grad) const {
    MatX delta = dout;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
      const MatX& in = cache.activations[l];
      grad.layers_[l].w.noalias() += delta * in.transpose();
      grad.layers_[l].b += delta.rowwise().sum();
      if (l > 0) {
        MatX dprev = layers_[l].w.transpose() * delta;
        delta = dprev.array() * (1.0 - in.array().square());
      }
    }
  }

  int parameter_count() const {
    int n = 0;
    for (const auto& l : layers_) n += static_cast<int>(l.w.size() + l.b.size());
    return n;
  }

  void write(VecX& out, int& offset) const {
    for (const auto& l : layers_) {
      for (int c = 0; c < l.w.cols(); ++c) {
        for (int r = 0; r < l.w.rows(); ++r) out[offset++] = l.w(r, c);
      }
      for (int r = 0; r < l.b.size(); ++r) out[offset++] = l.b[r];
    }
  }
  void read(const VecX& in, int& offset) {
    for (auto& l : layers_) {
      for (int c = 0; c < l.w.cols(); ++c) {
        for (int r = 0; r < l.w.rows(); ++r) l.w(r, c) = in[offset++];
      }
      for (int r = 0; r < l.b.size(); ++r) l.b[r] = in[offset++];
    }
  }

  bool allFinite() const {
    for (const auto& l : layers_) {
      if (!l.w.allFinite() || !l.b.allFinite()) return false;
    }
    return true;
  }

 private:
  std::vector<Layer> layers_;
};

struct PolicyParams {
  MLP policy;
  VecX log_std;
  MLP value;

  static PolicyParams init(int obs_dim, int act_dim, const std::vector<int>& hidden,
                           double init_log_std, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> ps{obs_dim}, vs{obs_dim};
    for (int h : hidden) {
      ps.push_back(h);
      vs.push_back(h);
    }
    ps.push_back(act_dim);
    vs.push_back(1);
    PolicyParams p;
    p.policy = MLP(ps, rng, 0.01);
    p.value = MLP(vs, rng, 1.0);
    p.log_std = VecX::Constant(act_dim, init_log_std);
    return p;
  }

  int obs_dim() const { return policy.input_dim(); }
  int act_dim() const { return policy.output_dim(); }
  std::vector<int> hidden() const {
    const std::vector<int> s = policy.sizes();
    return std::vector<int>(s.begin() + 1, s.end() - 1);
  }
  int size() const {
    return policy.parameter_count() + static_cast<int>(log_std.size()) +
           value.parameter_count();
  }

  // Flat layout: policy layers, log_std, value layers.
  VecX flat() const {
    VecX v(size());
    int off = 0;
    policy.write(v, off);
    v.segment(off, log_std.size()) = log_std;
    off += static_cast<int>(log_std.size());
    value.write(v, off);
    return v;
  }
  void set_flat(const VecX& v) {
    if (v.size() != size()) throw InvalidArgument("parameter vector has wrong size");
    int off = 0;
    policy.read(v, off);
    log_std = v.segment(off, log_std.size());
    off += static_cast<int>(log_std.size());
    value.read(v, off);
  }

  VecX clamped_log_std() const { return log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }
  bool allFinite() const { return policy.allFinite() && value.allFinite() && log_std.allFinite(); }
};

struct GaussianOutput {
  VecX mean;
  VecX std;
};

inline GaussianOutput policy_forward(const PolicyParams& p, const VecX& s) {
  GaussianOutput g;
  g.mean = p.policy.forward(s).col(0);
  g.std = p.clamped_log_std().array().exp();
  return g;
}

inline double value_forward(const PolicyParams& p, const VecX& s) {
  return p.value.forward(s)(0, 0);
}

// Diagonal Gaussian log-density.
inline double log_prob(const VecX& mean, const VecX& std, const VecX& a) {
  if (mean.size() != std.size() || a.size() != mean.size()) {
    throw InvalidArgument("log_prob: dimension mismatch");
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
  double lp = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double z = (a[i] - mean[i]) / std[i];
    lp += -0.5 * z * z - std::log(std[i]) - half_log_2pi;
  }
  return lp;
}

inline VecX sample_action(const GaussianOutput& g, Rng& rng) {
  VecX a(g.mean.size());
  for (int i = 0; i < a.size(); ++i) a[i] = g.mean[i] + g.std[i] * rng.gaussian();
  return a;
}

struct GaeResult {
  VecX advantages;
  VecX returns;
};

// dones[t] marks the last transition of an episode (no bootstrap past it);
// `last_value` bootstraps a sequence cut off without a done flag.
inline GaeResult gae(const VecX& rewards, const VecX& values,
                     const std::vector<std::uint8_t>& dones, double last_value,
                     double gamma = 0.95, double lambda = 0.95) {
  const int n = static_cast<int>(rewards.size());
  if (values.size() != n || static_cast<int>(dones.size()) != n) {
    throw InvalidArgument("gae: rewards, values and dones must align");
  }
  GaeResult out;
  out.advantages = VecX::Zero(n);
  double next_adv = 0.0;
  double next_value = last_value;
  for (int t = n - 1; t >= 0; --t) {
    const double keep = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * keep - values[t];
    next_adv = delta + gamma * lambda * keep * next_adv;
    out.advantages[t] = next_adv;
    next_value = values[t];
  }
  out.returns = out.advantages + values;
  return out;
}

struct RolloutBuffer {
  MatX observations;  // obs_dim x N
  MatX actions;       // act_dim x N
  VecX rewards;
  VecX values;
  VecX log_probs;
  std::vector<std::uint8_t> dones;
  VecX advantages;
  VecX returns;

  int size() const { return static_cast<int>(rewards.size()); }

  void append(const RolloutBuffer& o) {
    auto cat_mat = [](MatX& a, const MatX& b) {
      if (a.size() == 0) {
        a = b;
        return;
      }
      MatX c(a.rows(), a.cols() + b.cols());
      c << a, b;
      a = std::move(c);
    };
    auto cat_vec = [](VecX& a, const VecX& b) {
      VecX c(a.size() + b.size());
      c << a, b;
      a = std::move(c);
    };
    cat_mat(observations, o.observations);
    cat_mat(actions, o.actions);
    cat_vec(rewards, o.rewards);
    cat_vec(values, o.values);
    cat_vec(log_probs, o.log_probs);
    cat_vec(advantages, o.advantages);
    cat_vec(returns, o.returns);
    dones.insert(dones.end(), o.dones.begin(), o.dones.end());
  }
};

struct PPOConfig {
  int epochs = 10;
  int minibatch = 256;
  double learning_rate = 3e-4;
  double clip = 0.2;
  double max_grad_norm = 0.5;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double target_kl = 0.5;
  bool normalize_advantages = true;

  void validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (minibatch < 1) throw InvalidArgument("minibatch must be at least 1");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
    if (!(clip > 0.0)) throw InvalidArgument("clip must be positive");
    if (!(max_grad_norm > 0.0)) throw InvalidArgument("max_grad_norm must be positive");
    if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) {
      throw InvalidArgument("loss coefficients must be non-negative");
    }
  }
};

struct LossResult {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  VecX gradient;  // flat, PolicyParams::flat layout
};

// Loss = -E[min(rho A, clip(rho) A)] + c_v E[(V - R)^2] - c_e H, over the
// columns `idx` of `buf`. `advantages` are the (normalized) advantages.
inline LossResult ppo_loss(const PolicyParams& p, const RolloutBuffer& buf,
                           const VecX& advantages, const std::vector<int>& idx,
                           const PPOConfig& cfg) {
  const int b = static_cast<int>(idx.size());
  const int na = p.act_dim();
  MatX obs(p.obs_dim(), b), act(na, b);
  VecX adv(b), ret(b), old_lp(b);
  for (int k = 0; k < b; ++k) {
    obs.col(k) = buf.observations.col(idx[k]);
    act.col(k) = buf.actions.col(idx[k]);
    adv[k] = advantages[idx[k]];
    ret[k] = buf.returns[idx[k]];
    old_lp[k] = buf.log_probs[idx[k]];
  }

  MLP::Cache pc, vc;
  const MatX mean = p.policy.forward(obs, &pc);
  const MatX value = p.value.forward(obs, &vc);
  const VecX ls = p.clamped_log_std();
  const VecX inv_var = (-2.0 * ls).array().exp();
  const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);

  LossResult out;
  MatX dmean = MatX::Zero(na, b);
  VecX dls = VecX::Zero(na);
  for (int k = 0; k < b; ++k) {
    const VecX diff = act.col(k) - mean.col(k);
    const double lp = (-0.5 * diff.array().square() * inv_var.array()).sum() -
                      ls.sum() - na * half_log_2pi;
    const double ratio = std::exp(lp - old_lp[k]);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double t1 = ratio * adv[k];
    const double t2 = clipped * adv[k];
    out.policy_loss -= std::min(t1, t2) / b;
    out.approx_kl += (old_lp[k] - lp) / b;
    if (std::abs(ratio - 1.0) > cfg.clip) out.clip_fraction += 1.0 / b;
    if (t1 <= t2) {
      // d(-t1/b)/dlp = -ratio A / b
      const double g = -ratio * adv[k] / b;
      dmean.col(k) = g * diff.cwiseProduct(inv_var);
      dls += g * (diff.array().square() * inv_var.array() - 1.0).matrix();
    }
  }
  out.entropy = ls.sum() + na * (half_log_2pi + 0.5);
  dls.array() -= cfg.entropy_coef;
  for (int i = 0; i < na; ++i) {
    if (p.log_std[i] < kLogStdMin || p.log_std[i] > kLogStdMax) dls[i] = 0.0;
  }

  const VecX verr = value.row(0).transpose() - ret;
  out.value_loss = verr.squaredNorm() / b;
  const MatX dvalue = (2.0 * cfg.value_coef / b) * verr.transpose();

  out.loss = out.policy_loss + cfg.value_coef * out.value_loss -
             cfg.entropy_coef * out.entropy;

  MLP gp = MLP::zeros_like(p.policy);
  MLP gv = MLP::zeros_like(p.value);
  p.policy.backward(pc, dmean, gp);
  p.value.backward(vc, dvalue, gv);
  out.gradient.resize(p.size());
  int off = 0;
  gp.write(out.gradient, off);
  out.gradient.segment(off, na) = dls;
  off += na;
  gv.write(out.gradient, off);
  return out;
}

struct Adam {
  VecX m;
  VecX v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void reset(int n) {
    m = VecX::Zero(n);
    v = VecX::Zero(n);
    t = 0;
  }

  void step(VecX& params, const VecX& grad, double lr) {
    if (m.size() != params.size()) reset(static_cast<int>(params.size()));
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int epochs_run = 0;
  int minibatches = 0;
  int skipped = 0;  // minibatches dropped for a non-finite loss
  bool early_stopped = false;
};

inline VecX normalized_advantages(const VecX& a) {
  if (a.size() < 2) return a;
  const double mean = a.mean();
  const double var = (a.array() - mean).square().sum() / (a.size() - 1);
  return (a.array() - mean) / (std::sqrt(var) + 1e-8);
}

// Clipped PPO update in place. Minibatch order comes from `rng`.
inline UpdateStats ppo_update(PolicyParams& p, Adam& adam, const RolloutBuffer& buf,
                              const PPOConfig& cfg, Rng& rng) {
  cfg.validate();
  UpdateStats st;
  const int n = buf.size();
  if (n == 0) return st;
  const VecX adv = cfg.normalize_advantages ? normalized_advantages(buf.advantages)
                                            : buf.advantages;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  VecX flat = p.flat();
  if (adam.m.size() != flat.size()) adam.reset(static_cast<int>(flat.size()));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine);
    double epoch_kl = 0.0;
    int epoch_batches = 0;
    for (int start = 0; start < n; start += cfg.minibatch) {
      const int end = std::min(n, start + cfg.minibatch);
      std::vector<int> idx(order.begin() + start, order.begin() + end);
      LossResult lr = ppo_loss(p, buf, adv, idx, cfg);
      if (!std::isfinite(lr.loss) || !lr.gradient.allFinite()) {
        ++st.skipped;
        continue;
      }
      const double gn = lr.gradient.norm();
      if (gn > cfg.max_grad_norm) lr.gradient *= cfg.max_grad_norm / gn;
      adam.step(flat, lr.gradient, cfg.learning_rate);
      p.set_flat(flat);
      p.log_std = p.clamped_log_std();
      flat = p.flat();
      st.policy_loss += lr.policy_loss;
      st.value_loss += lr.value_loss;
      st.entropy += lr.entropy;
      st.clip_fraction += lr.clip_fraction;
      epoch_kl += lr.approx_kl;
      ++epoch_batches;
      ++st.minibatches;
    }
    st.approx_kl = epoch_batches ? epoch_kl / epoch_batches : 0.0;
    ++st.epochs_run;
    if (st.approx_kl > cfg.target_kl) {
      st.early_stopped = true;
      break;
    }
  }
  if (st.minibatches > 0) {
    st.policy_loss /= st.minibatches;
    st.value_loss /= st.minibatches;
    st.entropy /= st.minibatches;
    st.clip_fraction /= st.minibatches;
  }
  return st;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON with layer shapes, parameters, optimizer and RNG state.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  PolicyParams params;
  Adam adam;
  std::string rng_state;
  long iteration = 0;
  std::uint64_t seed = 0;
  std::string model_name;
};

namespace detail {

inline nlohmann::json mlp_json(const MLP& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers()) {
    std::vector<double> w(l.w.data(), l.w.data() + l.w.size());
    std::vector<double> b(l.b.data(), l.b.data() + l.b.size());
    layers.push_back({{"rows", l.w.rows()}, {"cols", l.w.cols()}, {"w", w}, {"b", b}});
  }
  return layers;
}

inline MLP mlp_from_json(const nlohmann::json& j) {
  MLP m;
  for (const auto& jl : j) {
    Layer l;
    const int rows = jl.at("rows").get<int>();
    const int cols = jl.at("cols").get<int>();
    const auto w = jl.at("w").get<std::vector<double>>();
    const auto b = jl.at("b").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows) {
      throw CheckpointIncompatible("checkpoint layer data does not match its shape");
    }
    l.w = Eigen::Map<const MatX>(w.data(), rows, cols);
    l.b = Eigen::Map<const VecX>(b.data(), rows);
    if (!m.layers().empty() && m.layers().back().w.rows() != cols) {
      throw CheckpointIncompatible("checkpoint layers do not chain");
    }
    m.layers().push_back(std::move(l));
  }
  if (m.layers().empty()) throw CheckpointIncompatible("checkpoint network has no layers");
  return m;
}

inline std::vector<double> to_std(const VecX& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  nlohmann::json j;
  j["format"] = "hybridlink-checkpoint";
  j["version"] = kCheckpointVersion;
  j["model"] = c.model_name;
  j["iteration"] = c.iteration;
  j["seed"] = c.seed;
  j["policy"] = detail::mlp_json(c.params.policy);
  j["log_std"] = detail::to_std(c.params.log_std);
  j["value"] = detail::mlp_json(c.params.value);
  j["adam"] = {{"m", detail::to_std(c.adam.m)},
               {"v", detail::to_std(c.adam.v)},
               {"t", c.adam.t}};
  j["rng"] = c.rng_state;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
    out << j.dump() << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw FormatError("cannot move checkpoint into place at '" + path + "'");
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "hybridlink-checkpoint") {
    throw FormatError("'" + path + "' is not a checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw CheckpointIncompatible("checkpoint '" + path + "' has unsupported version");
  }
  Checkpoint c;
  try {
    c.model_name = j.value("model", "");
    c.iteration = j.at("iteration").get<long>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.params.policy = detail::mlp_from_json(j.at("policy"));
    c.params.value = detail::mlp_from_json(j.at("value"));
    const auto ls = j.at("log_std").get<std::vector<double>>();
    c.params.log_std = Eigen::Map<const VecX>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    const auto m = j.at("adam").at("m").get<std::vector<double>>();
    const auto v = j.at("adam").at("v").get<std::vector<double>>();
    c.adam.m = Eigen::Map<const VecX>(m.data(), static_cast<Eigen::Index>(m.size()));
    c.adam.v = Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
    c.adam.t = j.at("adam").at("t").get<long>();
    c.rng_state = j.value("rng", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  const auto& p = c.params;
  if (p.log_std.size() != p.act_dim() || p.value.output_dim() != 1 ||
      p.value.input_dim() != p.obs_dim()) {
    throw CheckpointIncompatible("checkpoint '" + path + "': inconsistent network shapes");
  }
  if (c.adam.m.size() != 0 && (c.adam.m.size() != p.size() || c.adam.v.size() != p.size())) {
    throw CheckpointIncompatible("checkpoint '" + path + "': optimizer state has wrong size");
  }
  return c;
}

// Throws CheckpointIncompatible unless `p` fits the given dimensions.
inline void check_compatible(const PolicyParams& p, int obs_dim, int act_dim,
                             const std::vector<int>& hidden) {
  std::vector<int> expected{obs_dim};
  expected.insert(expected.end(), hidden.begin(), hidden.end());
  expected.push_back(act_dim);
  if (p.policy.sizes() != expected) {
    std::ostringstream os;
    os << "policy shape [";
    for (int s : p.policy.sizes()) os << s << " ";
    os << "] does not match expected [";
    for (int s : expected) os << s << " ";
    os << "]";
    throw CheckpointIncompatible(os.str());
  }
}

}  // namespace hybridlink
