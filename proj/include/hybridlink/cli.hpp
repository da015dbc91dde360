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

// Command implementations behind the `hybridlink` executable. Each command
// returns a process exit code; tools/hybridlink.cpp only parses flags.
//
// Exit codes: 0 success, 1 bad input or other error, 2 simulation or
// training diverged (partial output is still written).

#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hybridlink/environment.hpp"
#include "hybridlink/metrics.hpp"
#include "hybridlink/model_io.hpp"
#include "hybridlink/ppo.hpp"
#include "hybridlink/trainer.hpp"
#include "hybridlink/trajectory.hpp"

namespace hybridlink::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kDiverged = 2 };

// Verbosity comes from HYBRIDLINK_LOG: error, warn, info (default), debug.
enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline LogLevel log_level() {
  const char* v = std::getenv("HYBRIDLINK_LOG");
  if (!v) return LogLevel::kInfo;
  const std::string s(v);
  if (s == "error" || s == "quiet") return LogLevel::kError;
  if (s == "warn") return LogLevel::kWarn;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

inline void log(LogLevel level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) {
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
  }
}

// Run config from --config and/or --model. Without a config the reference
// defaults to "swing" for fixed-base models and "walk" otherwise.
inline TrainConfig load_run_config(const std::string& config_path,
                                   const std::string& model_path) {
  TrainConfig c;
  if (!config_path.empty()) c = load_train_config(config_path);
  if (!model_path.empty()) c.model_path = model_path;
  if (c.model_path.empty()) {
    throw InvalidArgument("no model given: pass --model or a config with 'model ='");
  }
  if (config_path.empty() && load_model(c.model_path).fixed_base) c.reference = "swing";
  return c;
}

struct SimulationResult {
  Trajectory trajectory;
  bool diverged = false;
  int ticks = 0;
};

// Runs the task's environment for `duration` seconds from reference phase 0
// with only the non-finite check enabled. Without a policy the PD targets
// follow the reference joint angles.
inline SimulationResult simulate(const Task& task, const PolicyParams* policy,
                                 double duration, std::uint64_t seed,
                                 bool stochastic = false) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw InvalidArgument("duration must be a finite non-negative number");
  }
  Task t = task;
  t.env.termination.horizon = duration + 1.0;
  t.env.termination.min_height_fraction = -std::numeric_limits<double>::infinity();
  t.env.termination.max_pitch = std::numeric_limits<double>::infinity();
  t.env.termination.max_joint_error = std::numeric_limits<double>::infinity();
  if (policy) check_compatible(*policy, t.observation_dim(), t.action_dim(), policy->hidden());

  Environment env = t.make_environment();
  TrajectoryRecorder rec(*t.model);
  rec.set_meta("seed", std::to_string(seed));
  rec.set_meta("controller", policy ? (stochastic ? "policy_sampled" : "policy_mean")
                                    : "reference_pd");
  rec.set_meta("control_rate", t.env.control_rate);
  rec.set_meta("physics_dt", t.env.physics_dt());
  env.set_recorder([&](const StepRecord& r) { rec.record(r); });

  SimulationResult out;
  Rng rng{seed, 0, 0, 11};
  VecX obs = env.reset(0.0);
  const int ticks = static_cast<int>(std::llround(duration * t.env.control_rate));
  for (int k = 0; k < ticks; ++k) {
    VecX action;
    if (policy) {
      const GaussianOutput g = policy_forward(*policy, obs);
      action = stochastic ? sample_action(g, rng) : g.mean;
    } else {
      action = t.reference.at(env.reference_time() + 1.0 / t.env.control_rate).q;
    }
    const EnvStep s = env.step(action);
    ++out.ticks;
    obs = s.observation;
    if (s.cause == TerminationCause::kNonFinite) {
      out.diverged = true;
      break;
    }
  }
  out.trajectory = rec.trajectory();
  return out;
}

// Quasi-static loading of the prosthesis: the base and every joint are
// locked, the ground is out of reach, and a downward force on `contact` ramps
// linearly to `load` newtons over the first half of `duration` and is held.
inline SimulationResult scripted_load(const HybridModel& model, const std::string& contact,
                                      double load, double duration, double dt = 1.0 / 1200.0) {
  if (!model.rod) throw InvalidArgument("scripted load needs a model with a rod");
  const int ci = model.contact_index(contact);
  if (!(duration > 0.0) || !(dt > 0.0)) throw InvalidArgument("scripted load: bad duration");

  HybridState s = HybridState::rest(model);
  s.base = model.rest_base;
  TrajectoryRecorder rec(model);
  rec.set_meta("controller", "scripted_load");
  rec.set_meta("load", load);
  rec.set_meta("load_point", contact);
  StepOptions opts;
  opts.ground_height = -1e3;
  opts.locked.assign(model.dof(), false);
  for (int i = 0; i < 6 + model.rigid_dof(); ++i) opts.locked[i] = true;

  SimulationResult out;
  const int n = static_cast<int>(std::llround(duration / dt));
  const GeneralizedForce tau = GeneralizedForce::zero(model);
  for (int k = 0; k < n; ++k) {
    const double t = (k + 1) * dt;
    const double f = load * std::min(1.0, t / (0.5 * duration));
    opts.point_loads = {{ci, Vec3(0.0, -f, 0.0)}};
    try {
      StepResult r = step(model, s, tau, dt, opts);
      s = std::move(r.state);
      StepRecord sr;
      sr.t = t;
      sr.state = &s;
      sr.joint_torque = VecX::Zero(model.rigid_dof());
      sr.contacts = r.contacts;
      rec.record(sr);
      ++out.ticks;
    } catch (const SimulationDiverged&) {
      out.diverged = true;
      break;
    } catch (const NumericalError&) {
      out.diverged = true;
      break;
    }
  }
  out.trajectory = rec.trajectory();
  return out;
}

// ---------------------------------------------------------------------------
// Commands.

struct SimulateArgs {
  std::string model;
  std::string config;
  std::string checkpoint;
  double duration = 5.0;
  std::uint64_t seed = 1;
  std::string out = "trajectory.csv";
  bool stochastic = false;
};

inline int cmd_simulate(const SimulateArgs& a) {
  const TrainConfig cfg = load_run_config(a.config, a.model);
  const Task task = make_task(cfg);
  std::optional<PolicyParams> policy;
  if (!a.checkpoint.empty()) policy = load_checkpoint(a.checkpoint).params;
  const SimulationResult r =
      simulate(task, policy ? &*policy : nullptr, a.duration, a.seed, a.stochastic);
  write_trajectory(r.trajectory, a.out);
  log(LogLevel::kInfo, "wrote " + std::to_string(r.trajectory.size()) + " rows to " + a.out);
  if (r.diverged) {
    log(LogLevel::kError, "simulation diverged after " + std::to_string(r.ticks) +
                              " control ticks; partial trajectory written");
    return kDiverged;
  }
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string model;
  std::string fine_tune;
  std::optional<std::string> resume;  // empty string: <checkpoint_dir>/latest.json
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> iterations;
  std::string out;  // checkpoint directory override
};

inline int cmd_train(const TrainArgs& a) {
  if (a.config.empty()) throw InvalidArgument("train needs --config");
  TrainConfig cfg = load_run_config(a.config, a.model);
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) {
    if (*a.workers < 1 || cfg.buffer_size % *a.workers != 0) {
      throw InvalidArgument("--workers must be positive and divide buffer_size");
    }
    cfg.workers = *a.workers;
  }
  if (a.iterations) cfg.iterations = *a.iterations;
  if (!a.out.empty()) {
    cfg.checkpoint_dir = a.out;
    cfg.log_path.clear();
  }
  if (a.resume && !a.fine_tune.empty()) {
    throw InvalidArgument("--resume and --fine-tune are mutually exclusive");
  }
  TrainOptions opts;
  opts.on_iteration = [](const IterationLog& l) {
    std::ostringstream os;
    os << "iteration " << l.iteration << " episodes " << l.episodes << " mean_return "
       << l.mean_return << " mean_length " << l.mean_length << " kl " << l.update.approx_kl;
    log(LogLevel::kInfo, os.str());
  };
  TrainResult r;
  if (a.resume) {
    opts.resume_from = a.resume->empty() ? cfg.checkpoint_dir + "/latest.json" : *a.resume;
    r = train(cfg, opts);
  } else if (!a.fine_tune.empty()) {
    r = fine_tune(a.fine_tune, cfg, opts);
  } else {
    r = train(cfg, opts);
  }
  if (r.diverged) {
    log(LogLevel::kError, "training diverged; last good parameters saved to " + r.last_checkpoint);
    return kDiverged;
  }
  log(LogLevel::kInfo, "learning log: " + cfg.resolved_log_path());
  return kOk;
}

struct EvaluateArgs {
  std::string config;
  std::string model;
  std::string checkpoint;
  int episodes = 10;
  std::uint64_t seed = 1;
  bool deterministic = false;
};

inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const TrainConfig cfg = load_run_config(a.config, a.model);
  const Task task = make_task(cfg);
  if (a.checkpoint.empty()) throw InvalidArgument("evaluate needs --checkpoint");
  const PolicyParams p = load_checkpoint(a.checkpoint).params;
  check_compatible(p, task.observation_dim(), task.action_dim(), p.hidden());
  nlohmann::json j;
  j["episodes"] = a.episodes;
  j["mean_return"] = evaluate_policy(p, task, a.episodes, a.seed, a.deterministic);
  out << j.dump(2) << "\n";
  return kOk;
}

struct SweepArgs {
  std::string config;
  std::string model;
  std::string checkpoint;  // shared policy; empty uses reference PD targets
  std::vector<double> scales = {0.9, 1.0, 1.1};
  bool scale_damping = false;
  bool scripted_load = false;
  std::string load_point = "r_tip";
  double load = 200.0;  // N
  double duration = 5.0;
  std::uint64_t seed = 1;
  std::string out = "sweep";
};

inline std::string condition_name(double scale) {
  if (scale < 1.0) return "compliant";
  if (scale > 1.0) return "stiff";
  return "nominal";
}

inline int cmd_sweep(const SweepArgs& a, std::ostream& report_out) {
  if (a.scales.empty()) throw InvalidArgument("sweep needs at least one scale");
  for (double s : a.scales) {
    if (!(s > 0.0)) throw InvalidArgument("sweep scales must be positive");
  }
  const TrainConfig base_cfg = load_run_config(a.config, a.model);
  std::optional<PolicyParams> policy;
  if (!a.checkpoint.empty()) policy = load_checkpoint(a.checkpoint).params;
  std::filesystem::create_directories(a.out);

  nlohmann::json report;
  report["mode"] = a.scripted_load ? "scripted_load" : (policy ? "policy" : "reference_pd");
  report["conditions"] = nlohmann::json::array();
  bool diverged = false;
  std::vector<double> strains;
  for (double scale : a.scales) {
    TrainConfig cfg = base_cfg;
    cfg.stiffness_scale *= scale;
    if (a.scale_damping) cfg.damping_scale *= scale;
    SimulationResult r;
    if (a.scripted_load) {
      const HybridModel m = prepare_model(load_model(cfg.model_path), false,
                                          cfg.stiffness_scale, cfg.damping_scale);
      r = scripted_load(m, a.load_point, a.load, a.duration);
    } else {
      r = simulate(make_task(cfg), policy ? &*policy : nullptr, a.duration, a.seed);
    }
    std::ostringstream name;
    name << a.out << "/condition_" << std::fixed << std::setprecision(3) << scale << ".csv";
    write_trajectory(r.trajectory, name.str());
    diverged = diverged || r.diverged;

    nlohmann::json c;
    c["scale"] = scale;
    c["condition"] = condition_name(scale);
    c["trajectory"] = name.str();
    c["diverged"] = r.diverged;
    if (r.trajectory.size() >= 2) {
      const nlohmann::json m = metrics_report(r.trajectory);
      c["max_strain_deviation"] = m["strain"]["max_deviation_overall"];
      c["peak_elastic_energy"] = m["strain"]["peak_elastic_energy"];
      c["peak_mechanical_cost"] = m["strain"]["mechanical_cost"];
      c["avg_braking_late_stance"] = m["grf"]["right"]["avg_braking_late_stance"];
      c["avg_propulsion_late_stance"] = m["grf"]["right"]["avg_propulsion_late_stance"];
      c["cost_of_transport"] = m["cost_of_transport"];
      strains.push_back(m["strain"]["max_deviation_overall"].get<double>());
    } else {
      strains.push_back(std::nan(""));
    }
    report["conditions"].push_back(c);
    log(LogLevel::kInfo, "condition " + name.str() + " done");
  }

  // Summary relative to the lowest and highest scale.
  nlohmann::json summary;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < a.scales.size(); ++i) {
    if (a.scales[i] < a.scales[lo]) lo = i;
    if (a.scales[i] > a.scales[hi]) hi = i;
  }
  bool ordered = true;
  for (std::size_t i = 0; i < a.scales.size(); ++i) {
    for (std::size_t j = 0; j < a.scales.size(); ++j) {
      if (a.scales[i] < a.scales[j] && !(strains[i] > strains[j])) ordered = false;
    }
  }
  summary["strain_decreases_with_stiffness"] = ordered;
  summary["strain_ratio_softest_to_stiffest"] =
      detail::number_or_null(strains[hi] > 0.0 ? strains[lo] / strains[hi] : std::nan(""));
  report["summary"] = summary;

  const std::string path = a.out + "/report.json";
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write '" + path + "'");
  f << report.dump(2) << "\n";
  report_out << report.dump(2) << "\n";
  return diverged ? kDiverged : kOk;
}

struct MetricsArgs {
  std::vector<std::string> files;
  double mass = 0.0;  // 0: from trajectory metadata
  double efficiency = kDefaultEfficiency;
  std::string out;    // empty: stdout
};

inline int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
  if (a.files.empty()) throw InvalidArgument("metrics needs at least one trajectory file");
  nlohmann::json all = nlohmann::json::array();
  for (const auto& file : a.files) {
    nlohmann::json r = metrics_report(read_trajectory(file), a.mass, a.efficiency);
    r["file"] = file;
    all.push_back(r);
  }
  if (a.out.empty()) {
    out << all.dump(2) << "\n";
  } else {
    std::ofstream f(a.out);
    if (!f) throw FormatError("cannot write '" + a.out + "'");
    f << all.dump(2) << "\n";
  }
  return kOk;
}

}  // namespace hybridlink::cli
