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

// Synchronous PPO training: rollout workers fan out over a read-only policy
// snapshot, their buffers are concatenated in worker order, and a single
// update runs on the aggregate.
//
// Every random stream is derived from (seed, iteration, worker), so a run's
// output does not depend on how many threads execute the workers, and a
// resumed run continues exactly as an uninterrupted one.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hybridlink/environment.hpp"
#include "hybridlink/imitation.hpp"
#include "hybridlink/model.hpp"
#include "hybridlink/model_io.hpp"
#include "hybridlink/pcs_rod.hpp"
#include "hybridlink/ppo.hpp"

namespace hybridlink {

// ---------------------------------------------------------------------------
// Rigid variant of a hybrid model.

// Freezes the rod at its rest strain and lumps it into the socket body. Rod
// contact points become body points at their rest positions.
inline HybridModel make_rigid_variant(const HybridModel& model) {
  HybridModel out = model;
  if (!model.rod) return out;
  const RodSpec& rod = *model.rod;
  const Socket& sock = *model.skeleton.socket;
  BodySpec& host = out.skeleton.bodies[sock.body];

  Mat6 inertia = host.spatial_inertia();
  Pose g = sock.pose * rod.attachment;
  for (const auto& seg : rod.segments) {
    const Mat6 a = adjoint_inverse(g);
    inertia += a.transpose() * segment_inertia(seg, seg.rest_strain) * a;
    g = g * exp_se3(seg.rest_strain, seg.length);
  }
  const int parent_joint = host.parent_joint;
  host = body_from_spatial_inertia(host.name, 0.5 * (inertia + inertia.transpose()));
  host.parent_joint = parent_joint;

  const RodState rest = RodState::rest(rod);
  const RodFrames frames = rod_forward_kinematics(rod, rest, sock.pose);
  for (auto& c : out.contacts) {
    if (c.host != ContactHost::kRod) continue;
    c.host = ContactHost::kBody;
    c.body = sock.body;
    c.point = frames.pose_at(c.rod_s).position;
    c.rod_s = 0.0;
  }
  out.rod.reset();
  out.name = model.name + "_rigid";
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration.

struct TrainConfig {
  std::string model_path;
  std::string reference = "walk";  // walk | run | sprint | swing
  double speed = -1.0;             // negative: nominal speed of the gait
  std::string gait_file;
  std::string reference_csv;
  double reference_rate = 120.0;
  bool rigid = false;  // train on make_rigid_variant(model)
  double stiffness_scale = 1.0;
  double damping_scale = 1.0;

  int workers = 8;
  int threads = 0;  // 0: hardware concurrency
  int buffer_size = 4096;
  int iterations = 100;
  std::vector<int> hidden = {64, 64};
  double init_log_std = std::log(0.3);
  double gamma = 0.95;
  double lambda = 0.95;
  PPOConfig ppo;
  std::uint64_t seed = 1;

  EnvConfig env;

  std::string checkpoint_dir = "checkpoints";
  int checkpoint_every = 10;
  std::string log_path;  // default: <checkpoint_dir>/learning_log.csv

  int steps_per_worker() const { return buffer_size / workers; }
  std::string resolved_log_path() const {
    return log_path.empty() ? checkpoint_dir + "/learning_log.csv" : log_path;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace detail

// Parses "key = value" lines ('#' starts a comment). Relative paths are
// resolved against `base_dir`. All field errors are reported together.
inline TrainConfig parse_train_config(const std::string& text,
                                      const std::string& base_dir = ".") {
  TrainConfig c;
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) {
      errors.push_back(where + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    auto fail = [&](const std::string& msg) {
      errors.push_back(where + ": " + key + ": " + msg);
    };
    auto num = [&](double& out, double lo = -std::numeric_limits<double>::infinity(),
                   bool lo_strict = false) {
      try {
        std::size_t used = 0;
        const double x = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing");
        if (lo_strict ? !(x > lo) : !(x >= lo)) {
          fail(std::string("must be ") + (lo_strict ? "> " : ">= ") + std::to_string(lo));
          return;
        }
        out = x;
      } catch (const std::exception&) {
        fail("expected a number, got '" + val + "'");
      }
    };
    auto integer = [&](int& out, int lo) {
      try {
        std::size_t used = 0;
        const long x = std::stol(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing");
        if (x < lo) {
          fail("must be >= " + std::to_string(lo));
          return;
        }
        out = static_cast<int>(x);
      } catch (const std::exception&) {
        fail("expected an integer, got '" + val + "'");
      }
    };
    auto boolean = [&](bool& out) {
      if (!detail::parse_bool(val, out)) fail("expected true or false, got '" + val + "'");
    };

    if (key == "model") {
      c.model_path = resolve(val);
    } else if (key == "reference") {
      try {
        parse_gait_kind(val);
        c.reference = val;
      } catch (const InvalidArgument& e) {
        fail(e.what());
      }
    } else if (key == "speed") {
      num(c.speed);
    } else if (key == "gait_file") {
      c.gait_file = resolve(val);
    } else if (key == "reference_csv") {
      c.reference_csv = resolve(val);
    } else if (key == "reference_rate") {
      num(c.reference_rate, 0.0, true);
    } else if (key == "rigid") {
      boolean(c.rigid);
    } else if (key == "stiffness_scale") {
      num(c.stiffness_scale, 0.0, true);
    } else if (key == "damping_scale") {
      num(c.damping_scale, 0.0);
    } else if (key == "workers") {
      integer(c.workers, 1);
    } else if (key == "threads") {
      integer(c.threads, 0);
    } else if (key == "buffer_size") {
      integer(c.buffer_size, 1);
    } else if (key == "minibatch") {
      integer(c.ppo.minibatch, 1);
    } else if (key == "epochs") {
      integer(c.ppo.epochs, 1);
    } else if (key == "iterations") {
      integer(c.iterations, 0);
    } else if (key == "hidden") {
      std::vector<int> h;
      std::stringstream ss(val);
      std::string tok;
      bool ok = true;
      while (std::getline(ss, tok, ',')) {
        try {
          const int x = std::stoi(detail::trim(tok));
          if (x < 1) ok = false;
          h.push_back(x);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok || h.empty()) {
        fail("expected comma-separated positive layer widths");
      } else {
        c.hidden = h;
      }
    } else if (key == "learning_rate") {
      num(c.ppo.learning_rate, 0.0);
    } else if (key == "gamma") {
      num(c.gamma, 0.0);
      if (c.gamma > 1.0) fail("must be <= 1");
    } else if (key == "lambda") {
      num(c.lambda, 0.0);
      if (c.lambda > 1.0) fail("must be <= 1");
    } else if (key == "clip") {
      num(c.ppo.clip, 0.0, true);
    } else if (key == "max_grad_norm") {
      num(c.ppo.max_grad_norm, 0.0, true);
    } else if (key == "value_coef") {
      num(c.ppo.value_coef, 0.0);
    } else if (key == "entropy_coef") {
      num(c.ppo.entropy_coef, 0.0);
    } else if (key == "target_kl") {
      num(c.ppo.target_kl, 0.0, true);
    } else if (key == "init_log_std") {
      num(c.init_log_std, kLogStdMin);
      if (c.init_log_std > kLogStdMax) fail("must be <= 1");
    } else if (key == "seed") {
      try {
        c.seed = std::stoull(val);
      } catch (const std::exception&) {
        fail("expected a non-negative integer");
      }
    } else if (key == "control_rate") {
      num(c.env.control_rate, 0.0, true);
    } else if (key == "substeps") {
      integer(c.env.substeps, 1);
    } else if (key == "horizon") {
      num(c.env.termination.horizon, 0.0, true);
    } else if (key == "max_joint_error") {
      num(c.env.termination.max_joint_error, 0.0, true);
    } else if (key == "min_height_fraction") {
      num(c.env.termination.min_height_fraction, 0.0);
    } else if (key == "max_pitch") {
      num(c.env.termination.max_pitch, 0.0, true);
    } else if (key == "observe_phase") {
      boolean(c.env.observe_phase);
    } else if (key == "reference_state_init") {
      boolean(c.env.reference_state_init);
    } else if (key == "ground_height") {
      num(c.env.ground_height);
    } else if (key == "w_q") {
      num(c.env.weights.w_q, 0.0);
    } else if (key == "w_v") {
      num(c.env.weights.w_v, 0.0);
    } else if (key == "w_e") {
      num(c.env.weights.w_e, 0.0);
    } else if (key == "w_0") {
      num(c.env.weights.w_0, 0.0);
    } else if (key == "beta_q") {
      num(c.env.weights.beta_q, 0.0);
    } else if (key == "beta_v") {
      num(c.env.weights.beta_v, 0.0);
    } else if (key == "beta_e") {
      num(c.env.weights.beta_e, 0.0);
    } else if (key == "beta_01") {
      num(c.env.weights.beta_01, 0.0);
    } else if (key == "beta_02") {
      num(c.env.weights.beta_02, 0.0);
    } else if (key == "checkpoint_dir") {
      c.checkpoint_dir = resolve(val);
    } else if (key == "checkpoint_every") {
      integer(c.checkpoint_every, 1);
    } else if (key == "log") {
      c.log_path = resolve(val);
    } else {
      errors.push_back(where + ": unknown key '" + key + "'");
    }
  }
  if (c.model_path.empty()) errors.push_back("model: required");
  if (c.buffer_size < c.workers) {
    errors.push_back("buffer_size: must be at least the number of workers");
  } else if (c.buffer_size % c.workers != 0) {
    errors.push_back("buffer_size: must be divisible by workers");
  }
  if (!errors.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InvalidArgument(msg);
  }
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_train_config(ss.str(), dir.empty() ? "." : dir.string());
}

// ---------------------------------------------------------------------------
// Task setup shared by training and evaluation.

struct Task {
  std::shared_ptr<const HybridModel> model;
  ReferenceTrajectory reference;
  EnvConfig env;

  Environment make_environment() const { return Environment(model, reference, env); }
  int observation_dim() const {
    return rl_state_dim(*model) + (env.observe_phase ? 2 : 0);
  }
  int action_dim() const { return model->rigid_dof(); }
};

inline HybridModel prepare_model(const HybridModel& base, bool rigid, double k_scale,
                                 double d_scale) {
  HybridModel m = base;
  if (m.rod && (k_scale != 1.0 || d_scale != 1.0)) m.rod = m.rod->scaled(k_scale, d_scale);
  if (rigid) m = make_rigid_variant(m);
  return m;
}

inline Task make_task(const TrainConfig& cfg) {
  const HybridModel base = load_model(cfg.model_path);
  Task t;
  t.model = std::make_shared<const HybridModel>(
      prepare_model(base, cfg.rigid, cfg.stiffness_scale, cfg.damping_scale));
  if (!cfg.reference_csv.empty()) {
    t.reference = read_reference_csv(*t.model, cfg.reference_csv);
  } else {
    const GaitProfile profile =
        cfg.gait_file.empty() ? default_profile(parse_gait_kind(cfg.reference), cfg.speed)
                              : load_gait_profile(cfg.gait_file);
    t.reference = ReferenceTrajectory::from_profile(*t.model, profile, cfg.reference_rate);
  }
  t.env = cfg.env;
  return t;
}

// ---------------------------------------------------------------------------
// Rollouts.

struct EpisodeSummary {
  double total_return = 0.0;
  int length = 0;
  TerminationCause cause = TerminationCause::kNone;
};

struct WorkerRollout {
  RolloutBuffer buffer;
  std::vector<EpisodeSummary> episodes;  // completed within the rollout
  double partial_return = 0.0;           // of the episode cut off at the end
  int partial_length = 0;
};

struct CollectResult {
  RolloutBuffer buffer;
  std::vector<WorkerRollout> workers;
  std::vector<EpisodeSummary> episodes;

  double mean_return() const {
    if (!episodes.empty()) {
      double s = 0.0;
      for (const auto& e : episodes) s += e.total_return;
      return s / episodes.size();
    }
    double s = 0.0;
    for (const auto& w : workers) s += w.partial_return;
    return workers.empty() ? 0.0 : s / workers.size();
  }
  double mean_length() const {
    if (episodes.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : episodes) s += e.length;
    return s / episodes.size();
  }
};

// Stream tags keep the per-purpose random streams apart.
enum : std::uint64_t { kStreamRollout = 1, kStreamUpdate = 2, kStreamInit = 3 };

inline WorkerRollout run_worker(const PolicyParams& params, const Task& task,
                                int steps, std::uint64_t seed, long iteration,
                                int worker, double gamma, double lambda) {
  Rng rng{seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(worker),
          kStreamRollout};
  Environment env = task.make_environment();
  WorkerRollout out;
  RolloutBuffer& b = out.buffer;
  b.observations.resize(env.observation_dim(), steps);
  b.actions.resize(env.action_dim(), steps);
  b.rewards.resize(steps);
  b.values.resize(steps);
  b.log_probs.resize(steps);
  b.dones.assign(steps, 0);

  VecX obs = env.reset(rng.engine);
  EpisodeSummary ep;
  for (int t = 0; t < steps; ++t) {
    const GaussianOutput g = policy_forward(params, obs);
    const VecX a = sample_action(g, rng);
    b.observations.col(t) = obs;
    b.actions.col(t) = a;
    b.values[t] = value_forward(params, obs);
    b.log_probs[t] = log_prob(g.mean, g.std, a);
    const EnvStep s = env.step(a);
    b.rewards[t] = s.reward;
    ep.total_return += s.reward;
    ++ep.length;
    if (s.done) {
      b.dones[t] = 1;
      ep.cause = s.cause;
      out.episodes.push_back(ep);
      ep = EpisodeSummary();
      obs = env.reset(rng.engine);
    } else {
      obs = s.observation;
    }
  }
  out.partial_return = ep.total_return;
  out.partial_length = ep.length;
  const double last_value = b.dones.back() ? 0.0 : value_forward(params, obs);
  const GaeResult g = gae(b.rewards, b.values, b.dones, last_value, gamma, lambda);
  b.advantages = g.advantages;
  b.returns = g.returns;
  return out;
}

// Runs `n_workers` independent environments for `steps_per_worker` control
// steps each on up to `threads` threads; buffers are concatenated in worker
// order. A worker failure aborts the collection.
inline CollectResult collect_rollouts(const PolicyParams& params, const Task& task,
                                      int n_workers, int steps_per_worker,
                                      std::uint64_t seed, long iteration,
                                      double gamma = 0.95, double lambda = 0.95,
                                      int threads = 0) {
  if (n_workers < 1) throw InvalidArgument("collect_rollouts: need at least one worker");
  if (steps_per_worker < 1) throw InvalidArgument("collect_rollouts: need at least one step");
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  const int nthreads = std::clamp(threads > 0 ? threads : hw, 1, n_workers);

  std::vector<WorkerRollout> results(n_workers);
  std::vector<std::exception_ptr> errors(n_workers);
  auto run_range = [&](int tid) {
    for (int w = tid; w < n_workers; w += nthreads) {
      try {
        results[w] = run_worker(params, task, steps_per_worker, seed, iteration, w,
                                gamma, lambda);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    }
  };
  if (nthreads == 1) {
    run_range(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(run_range, t);
    for (auto& th : pool) th.join();
  }
  for (int w = 0; w < n_workers; ++w) {
    if (errors[w]) {
      try {
        std::rethrow_exception(errors[w]);
      } catch (const std::exception& e) {
        throw NumericalError("rollout worker " + std::to_string(w) +
                             " failed at iteration " + std::to_string(iteration) +
                             ": " + e.what());
      }
    }
  }
  CollectResult out;
  for (auto& r : results) {
    out.buffer.append(r.buffer);
    out.episodes.insert(out.episodes.end(), r.episodes.begin(), r.episodes.end());
  }
  out.workers = std::move(results);
  return out;
}

// ---------------------------------------------------------------------------
// Training loop.

struct IterationLog {
  long iteration = 0;
  int episodes = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  double mean_reward = 0.0;
  UpdateStats update;
};

struct TrainResult {
  PolicyParams params;
  std::vector<IterationLog> log;
  bool diverged = false;
  std::string last_checkpoint;
};

struct TrainOptions {
  std::optional<PolicyParams> init;  // fine-tuning start point
  std::string resume_from;           // checkpoint path
  bool write_files = true;           // log, timing and checkpoints
  std::function<void(const IterationLog&)> on_iteration;
  std::function<bool(const IterationLog&)> stop_when;  // checked after each update
};

inline std::string learning_log_header() {
  return "iteration,episodes,mean_return,mean_length,mean_reward,policy_loss,"
         "value_loss,entropy,approx_kl,clip_fraction,epochs";
}

inline std::string learning_log_row(const IterationLog& l) {
  std::ostringstream os;
  os << std::setprecision(17) << l.iteration << "," << l.episodes << ","
     << l.mean_return << "," << l.mean_length << "," << l.mean_reward << ","
     << l.update.policy_loss << "," << l.update.value_loss << "," << l.update.entropy
     << "," << l.update.approx_kl << "," << l.update.clip_fraction << ","
     << l.update.epochs_run;
  return os.str();
}

inline TrainResult train(const TrainConfig& cfg, const TrainOptions& opts = {}) {
  cfg.ppo.validate();
  const Task task = make_task(cfg);
  const int obs_dim = task.observation_dim();
  const int act_dim = task.action_dim();

  TrainResult result;
  Adam adam;
  long start = 0;
  if (!opts.resume_from.empty()) {
    Checkpoint ck = load_checkpoint(opts.resume_from);
    check_compatible(ck.params, obs_dim, act_dim, cfg.hidden);
    result.params = ck.params;
    adam = ck.adam;
    start = ck.iteration;
  } else if (opts.init) {
    check_compatible(*opts.init, obs_dim, act_dim, cfg.hidden);
    result.params = *opts.init;
  } else {
    Rng init_rng{cfg.seed, 0, 0, kStreamInit};
    result.params = PolicyParams::init(obs_dim, act_dim, cfg.hidden, cfg.init_log_std,
                                       init_rng.engine());
  }
  if (adam.m.size() != result.params.size()) adam.reset(result.params.size());

  std::ofstream log, timing;
  if (opts.write_files) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    const auto log_dir = std::filesystem::path(cfg.resolved_log_path()).parent_path();
    if (!log_dir.empty()) std::filesystem::create_directories(log_dir);
    const bool append = start > 0;
    log.open(cfg.resolved_log_path(), append ? std::ios::app : std::ios::trunc);
    timing.open(cfg.checkpoint_dir + "/timing.csv", append ? std::ios::app : std::ios::trunc);
    if (!log || !timing) throw FormatError("cannot write learning log in '" + cfg.checkpoint_dir + "'");
    if (!append) {
      log << learning_log_header() << "\n";
      timing << "iteration,collect_seconds,update_seconds\n";
    }
  }

  auto write_checkpoint = [&](long iteration) {
    Checkpoint ck;
    ck.params = result.params;
    ck.adam = adam;
    ck.iteration = iteration;
    ck.seed = cfg.seed;
    ck.model_name = task.model->name;
    Rng marker{cfg.seed, static_cast<std::uint64_t>(iteration), 0, kStreamUpdate};
    ck.rng_state = marker.serialize();
    std::ostringstream name;
    name << cfg.checkpoint_dir << "/checkpoint_" << std::setw(6) << std::setfill('0')
         << iteration << ".json";
    save_checkpoint(ck, name.str());
    save_checkpoint(ck, cfg.checkpoint_dir + "/latest.json");
    result.last_checkpoint = name.str();
  };

  using clock = std::chrono::steady_clock;
  for (long it = start; it < cfg.iterations; ++it) {
    const auto t0 = clock::now();
    const CollectResult col =
        collect_rollouts(result.params, task, cfg.workers, cfg.steps_per_worker(), cfg.seed,
                         it, cfg.gamma, cfg.lambda, cfg.threads);
    const auto t1 = clock::now();

    const PolicyParams before = result.params;
    const Adam adam_before = adam;
    Rng update_rng{cfg.seed, static_cast<std::uint64_t>(it), 0, kStreamUpdate};
    IterationLog entry;
    entry.iteration = it;
    entry.update = ppo_update(result.params, adam, col.buffer, cfg.ppo, update_rng);
    const auto t2 = clock::now();
    entry.episodes = static_cast<int>(col.episodes.size());
    entry.mean_return = col.mean_return();
    entry.mean_length = col.mean_length();
    entry.mean_reward = col.buffer.rewards.mean();

    if (!result.params.allFinite() || !std::isfinite(entry.update.policy_loss) ||
        !std::isfinite(entry.update.value_loss)) {
      result.params = before;
      adam = adam_before;
      result.diverged = true;
      if (opts.write_files) write_checkpoint(it);
      break;
    }
    result.log.push_back(entry);
    if (opts.on_iteration) opts.on_iteration(entry);
    if (opts.write_files) {
      log << learning_log_row(entry) << "\n" << std::flush;
      timing << it << "," << std::chrono::duration<double>(t1 - t0).count() << ","
             << std::chrono::duration<double>(t2 - t1).count() << "\n";
      if ((it + 1) % cfg.checkpoint_every == 0 || it + 1 == cfg.iterations) {
        write_checkpoint(it + 1);
      }
    }
    if (opts.stop_when && opts.stop_when(entry)) {
      if (opts.write_files && (it + 1) % cfg.checkpoint_every != 0) write_checkpoint(it + 1);
      break;
    }
  }
  return result;
}

// Starts hybrid training from parameters trained on another model variant.
// The optimizer state is reset; the network must fit the new task's shapes.
inline TrainResult fine_tune(const std::string& checkpoint_path, const TrainConfig& cfg,
                             TrainOptions opts = {}) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  opts.init = ck.params;
  opts.resume_from.clear();
  return train(cfg, opts);
}

// Mean return of `episodes` evaluation episodes with the stochastic policy.
inline double evaluate_policy(const PolicyParams& params, const Task& task, int episodes,
                              std::uint64_t seed, bool deterministic = false) {
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng{seed, static_cast<std::uint64_t>(e), 0, 7};
    Environment env = task.make_environment();
    VecX obs = env.reset(rng.engine);
    double ret = 0.0;
    for (;;) {
      const GaussianOutput g = policy_forward(params, obs);
      const VecX a = deterministic ? g.mean : sample_action(g, rng);
      const EnvStep s = env.step(a);
      ret += s.reward;
      obs = s.observation;
      if (s.done) break;
    }
    total += ret;
  }
  return total / episodes;
}

}  // namespace hybridlink
