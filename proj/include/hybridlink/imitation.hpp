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

// Reference gaits, the tracking reward, the policy observation and episode
// termination.
//
// Reference gaits are synthetic: each joint follows a truncated Fourier
// series, the pelvis moves forward at constant speed with a vertical bounce
// at twice the stride frequency and a constant forward lean. Left-side
// joints lag the right side by half a period; arms swing opposite to the leg
// on the same side.

#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hybridlink/errors.hpp"
#include "hybridlink/hybrid_dynamics.hpp"
#include "hybridlink/liegroup.hpp"
#include "hybridlink/model.hpp"
#include "hybridlink/rigid_chain.hpp"

namespace hybridlink {

enum class GaitKind { kWalk, kRun, kSprint, kSwing };

inline GaitKind parse_gait_kind(const std::string& s) {
  if (s == "walk") return GaitKind::kWalk;
  if (s == "run") return GaitKind::kRun;
  if (s == "sprint") return GaitKind::kSprint;
  if (s == "swing") return GaitKind::kSwing;
  throw InvalidArgument("unknown gait kind '" + s +
                        "' (expected walk, run, sprint or swing)");
}

inline std::string to_string(GaitKind k) {
  switch (k) {
    case GaitKind::kWalk: return "walk";
    case GaitKind::kRun: return "run";
    case GaitKind::kSprint: return "sprint";
    case GaitKind::kSwing: return "swing";
  }
  return "unknown";
}

// Nominal speeds, m/s.
inline double nominal_speed(GaitKind k) {
  switch (k) {
    case GaitKind::kWalk: return 1.2;
    case GaitKind::kRun: return 3.0;
    case GaitKind::kSprint: return 5.0;
    case GaitKind::kSwing: return 0.0;
  }
  return 0.0;
}

// q(t) = offset + sum_k a_k cos(k w tau) + b_k sin(k w tau),
// tau = t - shift * period.
struct JointWaveform {
  double offset = 0.0;
  std::vector<double> cos_terms;
  std::vector<double> sin_terms;
  double shift = 0.0;  // fraction of the period

  double value(double t, double period) const {
    const double w = 2.0 * M_PI / period;
    const double tau = t - shift * period;
    double q = offset;
    for (std::size_t k = 0; k < cos_terms.size(); ++k) {
      q += cos_terms[k] * std::cos((k + 1) * w * tau);
    }
    for (std::size_t k = 0; k < sin_terms.size(); ++k) {
      q += sin_terms[k] * std::sin((k + 1) * w * tau);
    }
    return q;
  }

  double rate(double t, double period) const {
    const double w = 2.0 * M_PI / period;
    const double tau = t - shift * period;
    double dq = 0.0;
    for (std::size_t k = 0; k < cos_terms.size(); ++k) {
      dq -= cos_terms[k] * (k + 1) * w * std::sin((k + 1) * w * tau);
    }
    for (std::size_t k = 0; k < sin_terms.size(); ++k) {
      dq += sin_terms[k] * (k + 1) * w * std::cos((k + 1) * w * tau);
    }
    return dq;
  }
};

struct GaitProfile {
  GaitKind kind = GaitKind::kWalk;
  double speed = 1.2;         // m/s, forward
  double period = 1.1;        // s, one stride
  double pelvis_drop = 0.0;   // m, mean pelvis height below rest
  double bounce = 0.0;        // m, vertical amplitude at twice stride rate
  double lean = 0.0;          // rad about z, negative leans forward
  std::map<std::string, JointWaveform> joints;  // by joint name
};

namespace detail {

inline JointWaveform wave(double offset, double amplitude, double shift) {
  JointWaveform w;
  w.offset = offset;
  w.cos_terms = {amplitude};
  w.shift = shift;
  return w;
}

struct LimbCoefficients {
  double hip_offset, hip_amp;
  double knee_offset, knee_amp, knee_peak;
  double ankle_offset, ankle_amp, ankle_peak;
  double shoulder_amp;
  double elbow_offset, elbow_amp;
};

inline void add_limbs(GaitProfile& p, const LimbCoefficients& c) {
  for (int side = 0; side < 2; ++side) {
    const std::string s = side == 0 ? "r_" : "l_";
    const double lag = side == 0 ? 0.0 : 0.5;
    p.joints[s + "hip"] = wave(c.hip_offset, c.hip_amp, lag);
    p.joints[s + "knee"] = wave(c.knee_offset, c.knee_amp, c.knee_peak + lag);
    p.joints[s + "ankle"] = wave(c.ankle_offset, c.ankle_amp, c.ankle_peak + lag);
    // Arm opposite to the same-side leg.
    p.joints[s + "shoulder"] = wave(0.0, c.shoulder_amp, lag + 0.5);
    p.joints[s + "elbow"] = wave(c.elbow_offset, c.elbow_amp, lag + 0.5);
  }
}

}  // namespace detail

// Built-in profile for `kind` at `speed`. The swing profile drives the first
// two joint coordinates of any model regardless of their names.
inline GaitProfile default_profile(GaitKind kind, double speed = -1.0) {
  GaitProfile p;
  p.kind = kind;
  p.speed = speed >= 0.0 ? speed : nominal_speed(kind);
  if (kind != GaitKind::kSwing && !(p.speed > 0.0)) {
    throw InvalidArgument("reference gait speed must be positive");
  }
  switch (kind) {
    case GaitKind::kWalk:
      p.period = 1.1;
      p.pelvis_drop = 0.02;
      p.bounce = 0.02;
      p.lean = -0.05;
      detail::add_limbs(p, {0.15, 0.35, 0.55, 0.5, 0.72, 0.05, 0.2, 0.6,
                            0.25, 0.3, 0.1});
      break;
    case GaitKind::kRun:
      p.period = 0.75;
      p.pelvis_drop = 0.05;
      p.bounce = 0.04;
      p.lean = -0.12;
      detail::add_limbs(p, {0.3, 0.55, 0.9, 0.75, 0.7, 0.0, 0.3, 0.55,
                            0.5, 1.4, 0.2});
      break;
    case GaitKind::kSprint:
      p.period = 0.6;
      p.pelvis_drop = 0.06;
      p.bounce = 0.04;
      p.lean = -0.2;
      detail::add_limbs(p, {0.45, 0.75, 1.1, 0.95, 0.7, 0.0, 0.35, 0.55,
                            0.8, 1.5, 0.25});
      break;
    case GaitKind::kSwing: {
      p.period = 2.0;
      JointWaveform a;
      a.sin_terms = {0.6};
      JointWaveform b;
      b.offset = 0.3;
      b.sin_terms = {0.4};
      b.shift = 0.15;
      p.joints["#0"] = a;
      p.joints["#1"] = b;
      break;
    }
  }
  return p;
}

// Gait profile JSON: {"kind", "speed", "period", "pelvis_drop", "bounce",
// "lean", "joints": {name: {"offset", "cos": [...], "sin": [...], "shift"}}}.
// Joint names "#k" address coordinate k directly.
inline GaitProfile gait_profile_from_json(const nlohmann::json& j) {
  GaitProfile p = default_profile(parse_gait_kind(j.value("kind", "walk")),
                                  j.value("speed", -1.0));
  p.period = j.value("period", p.period);
  p.pelvis_drop = j.value("pelvis_drop", p.pelvis_drop);
  p.bounce = j.value("bounce", p.bounce);
  p.lean = j.value("lean", p.lean);
  if (!(p.period > 0.0)) throw InvalidArgument("gait period must be positive");
  if (j.contains("joints")) {
    p.joints.clear();
    for (const auto& [name, jw] : j["joints"].items()) {
      JointWaveform w;
      w.offset = jw.value("offset", 0.0);
      w.cos_terms = jw.value("cos", std::vector<double>{});
      w.sin_terms = jw.value("sin", std::vector<double>{});
      w.shift = jw.value("shift", 0.0);
      p.joints[name] = w;
    }
  }
  return p;
}

inline GaitProfile load_gait_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open gait file '" + path + "'");
  try {
    return gait_profile_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("gait file '" + path + "': " + e.what());
  }
}

struct ReferenceSample {
  double t = 0.0;
  Pose base;
  Twist base_velocity;  // body frame, like eta_0
  VecX q;
  VecX dq;
  std::vector<Vec3> end_effectors;
};

// Evaluates the profile at time t. End effectors come from skeleton_fk on the
// reference pose.
inline ReferenceSample reference_gait(const HybridModel& model,
                                      const GaitProfile& profile, double t) {
  const SkeletonSpec& sk = model.skeleton;
  const int n = model.rigid_dof();
  ReferenceSample r;
  r.t = t;
  r.q = VecX::Zero(n);
  r.dq = VecX::Zero(n);
  const auto act = sk.actuated_joints();
  for (int k = 0; k < n; ++k) {
    auto it = profile.joints.find(sk.joints[act[k]].name);
    if (it == profile.joints.end()) it = profile.joints.find("#" + std::to_string(k));
    if (it == profile.joints.end()) continue;
    r.q[k] = it->second.value(t, profile.period);
    r.dq[k] = it->second.rate(t, profile.period);
  }

  const double w2 = 4.0 * M_PI / profile.period;
  r.base = model.rest_base;
  if (!model.fixed_base) {
    r.base.rotation = model.rest_base.rotation * rotation_about(Vec3::UnitZ(), profile.lean);
    r.base.position.x() += profile.speed * t;
    r.base.position.y() += -profile.pelvis_drop + profile.bounce * std::cos(w2 * t);
    const Vec3 v_world(profile.speed, -profile.bounce * w2 * std::sin(w2 * t), 0.0);
    r.base_velocity = Twist(Vec3::Zero(), Vec3(r.base.rotation.transpose() * v_world));
  }
  r.end_effectors = skeleton_fk(sk, r.base, r.q).end_effectors;
  return r;
}

// One period of samples at a fixed rate, with periodic lookup.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;
  ReferenceTrajectory(double period, double forward_shift,
                      std::vector<ReferenceSample> samples)
      : period_(period), shift_(forward_shift), samples_(std::move(samples)) {
    if (!(period_ > 0.0) || samples_.size() < 2) {
      throw InvalidArgument("reference trajectory needs a positive period and "
                            "at least two samples");
    }
  }

  static ReferenceTrajectory from_profile(const HybridModel& model,
                                          const GaitProfile& profile,
                                          double rate = 120.0) {
    if (!(rate > 0.0)) throw InvalidArgument("reference rate must be positive");
    const int n = std::max(2, static_cast<int>(std::lround(profile.period * rate)));
    std::vector<ReferenceSample> s;
    for (int i = 0; i <= n; ++i) {
      s.push_back(reference_gait(model, profile, profile.period * i / n));
    }
    return ReferenceTrajectory(profile.period, profile.speed * profile.period,
                               std::move(s));
  }

  double period() const { return period_; }
  double forward_shift() const { return shift_; }
  double rate() const { return (samples_.size() - 1) / period_; }
  const std::vector<ReferenceSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

  // Linear interpolation within a period; later periods are translated
  // forward by forward_shift.
  ReferenceSample at(double t) const {
    if (samples_.empty()) throw InvalidArgument("empty reference trajectory");
    const double cycles = std::floor(t / period_);
    const double local = t - cycles * period_;
    const double pos = local / period_ * (samples_.size() - 1);
    std::size_t i = static_cast<std::size_t>(std::floor(pos));
    if (i >= samples_.size() - 1) i = samples_.size() - 2;
    const double a = pos - static_cast<double>(i);
    const ReferenceSample& s0 = samples_[i];
    const ReferenceSample& s1 = samples_[i + 1];
    ReferenceSample r;
    r.t = t;
    r.q = (1.0 - a) * s0.q + a * s1.q;
    r.dq = (1.0 - a) * s0.dq + a * s1.dq;
    r.base.position = (1.0 - a) * s0.base.position + a * s1.base.position;
    r.base.rotation = s0.base.rotation *
                      exp_so3(a * log_so3(s0.base.rotation.transpose() *
                                          s1.base.rotation));
    r.base_velocity =
        Twist(Vec6((1.0 - a) * s0.base_velocity.vector() + a * s1.base_velocity.vector()));
    const Vec3 offset(cycles * shift_, 0.0, 0.0);
    r.base.position += offset;
    for (std::size_t k = 0; k < s0.end_effectors.size(); ++k) {
      r.end_effectors.push_back((1.0 - a) * s0.end_effectors[k] +
                                a * s1.end_effectors[k] + offset);
    }
    return r;
  }

 private:
  double period_ = 1.0;
  double shift_ = 0.0;
  std::vector<ReferenceSample> samples_;
};

// CSV with "# period=", "# forward_shift=" metadata and columns t, base
// position (3), base rotation vector (3), base twist (6), q, dq, end
// effector positions.
inline void write_reference_csv(const ReferenceTrajectory& ref,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write reference file '" + path + "'");
  out.precision(17);
  const auto& s = ref.samples();
  const int n = static_cast<int>(s.front().q.size());
  const int ne = static_cast<int>(s.front().end_effectors.size());
  out << "# format=hybridlink-reference\n# version=1\n";
  out << "# period=" << ref.period() << "\n# forward_shift=" << ref.forward_shift() << "\n";
  out << "t,base_px,base_py,base_pz,base_rx,base_ry,base_rz,"
         "base_wx,base_wy,base_wz,base_vx,base_vy,base_vz";
  for (int k = 0; k < n; ++k) out << ",q" << k;
  for (int k = 0; k < n; ++k) out << ",dq" << k;
  for (int k = 0; k < ne; ++k) out << ",ee" << k << "_x,ee" << k << "_y,ee" << k << "_z";
  out << "\n";
  for (const auto& r : s) {
    const Vec3 rv = log_so3(r.base.rotation);
    out << r.t;
    for (int i = 0; i < 3; ++i) out << "," << r.base.position[i];
    for (int i = 0; i < 3; ++i) out << "," << rv[i];
    for (int i = 0; i < 6; ++i) out << "," << r.base_velocity[i];
    for (int k = 0; k < n; ++k) out << "," << r.q[k];
    for (int k = 0; k < n; ++k) out << "," << r.dq[k];
    for (const auto& e : r.end_effectors) out << "," << e.x() << "," << e.y() << "," << e.z();
    out << "\n";
  }
}

// Reads a reference CSV. End-effector columns are recomputed from the model
// when absent.
inline ReferenceTrajectory read_reference_csv(const HybridModel& model,
                                              const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open reference file '" + path + "'");
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        meta[key] = line.substr(eq + 1);
      }
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (header.empty()) {
      while (std::getline(ss, cell, ',')) header.push_back(cell);
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("reference file '" + path + "': bad number '" + cell + "'");
      }
    }
    if (row.size() != header.size()) {
      throw FormatError("reference file '" + path + "': ragged row");
    }
    rows.push_back(row);
  }
  if (meta.count("version") && meta["version"] != "1") {
    throw FormatError("reference file '" + path + "': unsupported version " + meta["version"]);
  }
  const int n = model.rigid_dof();
  const int needed = 13 + 2 * n;
  if (static_cast<int>(header.size()) < needed || rows.size() < 2) {
    throw FormatError("reference file '" + path + "': expected at least " +
                      std::to_string(needed) + " columns and two rows");
  }
  const bool has_ee =
      static_cast<int>(header.size()) >= needed + 3 * static_cast<int>(model.skeleton.end_effectors.size());
  std::vector<ReferenceSample> samples;
  for (const auto& row : rows) {
    ReferenceSample r;
    r.t = row[0];
    r.base.position = Vec3(row[1], row[2], row[3]);
    r.base.rotation = exp_so3(Vec3(row[4], row[5], row[6]));
    r.base_velocity = Twist(row[7], row[8], row[9], row[10], row[11], row[12]);
    r.q = Eigen::Map<const VecX>(row.data() + 13, n);
    r.dq = Eigen::Map<const VecX>(row.data() + 13 + n, n);
    if (has_ee) {
      for (std::size_t e = 0; e < model.skeleton.end_effectors.size(); ++e) {
        const double* p = row.data() + needed + 3 * e;
        r.end_effectors.emplace_back(p[0], p[1], p[2]);
      }
    } else {
      r.end_effectors = skeleton_fk(model.skeleton, r.base, r.q).end_effectors;
    }
    samples.push_back(r);
  }
  const double period = meta.count("period") ? std::stod(meta["period"])
                                             : samples.back().t - samples.front().t;
  const double shift = meta.count("forward_shift")
                           ? std::stod(meta["forward_shift"])
                           : samples.back().base.position.x() - samples.front().base.position.x();
  return ReferenceTrajectory(period, shift, std::move(samples));
}

struct RewardWeights {
  double w_q = 1.0, w_v = 1.0, w_e = 1.0, w_0 = 0.1;
  double beta_q = 2.0, beta_v = 0.03, beta_e = 40.0;
  double beta_01 = 10.0, beta_02 = 0.1;

  void validate() const {
    for (double x : {w_q, w_v, w_e, w_0, beta_q, beta_v, beta_e, beta_01, beta_02}) {
      if (!(x >= 0.0)) throw InvalidArgument("reward weights must be non-negative");
    }
  }
  double max_reward() const { return w_q + w_v + w_e + 2.0 * w_0; }
};

// exp(-beta |x_ref - x|^2)
inline double kernel(double beta, const VecX& x_ref, const VecX& x) {
  if (x_ref.size() != x.size()) throw InvalidArgument("kernel: dimension mismatch");
  return std::exp(-beta * (x_ref - x).squaredNorm());
}

struct RewardTerms {
  double joint_angle = 0.0;
  double joint_velocity = 0.0;
  double end_effector = 0.0;
  double base_pose = 0.0;
  double base_velocity = 0.0;
  double total = 0.0;
};

// Base pose error: position difference and rotation vector of R_ref^T R.
inline VecX base_pose_error(const Pose& ref, const Pose& base) {
  VecX e(6);
  e.head<3>() = base.position - ref.position;
  e.tail<3>() = log_so3(ref.rotation.transpose() * base.rotation);
  return e;
}

inline RewardTerms reward(const RewardWeights& w, const HybridModel& model,
                          const HybridState& state, const ReferenceSample& ref) {
  RewardTerms r;
  r.joint_angle = kernel(w.beta_q, ref.q, state.q_rigid);
  r.joint_velocity = kernel(w.beta_v, ref.dq, state.dq_rigid);
  const auto ee = skeleton_fk(model.skeleton, state.base, state.q_rigid).end_effectors;
  if (ee.size() != ref.end_effectors.size()) {
    throw InvalidArgument("reward: reference has a different end-effector count");
  }
  double e2 = 0.0;
  for (std::size_t k = 0; k < ee.size(); ++k) {
    e2 += (ee[k] - ref.end_effectors[k]).squaredNorm();
  }
  r.end_effector = std::exp(-w.beta_e * e2);
  r.base_pose = std::exp(-w.beta_01 * base_pose_error(ref.base, state.base).squaredNorm());
  r.base_velocity = kernel(w.beta_02, ref.base_velocity.vector(),
                           state.base_velocity.vector());
  r.total = w.w_q * r.joint_angle + w.w_v * r.joint_velocity +
            w.w_e * r.end_effector + w.w_0 * (r.base_pose + r.base_velocity);
  return r;
}

// [base position (3), first two rotation columns (6), eta_0 (6), q_R, dq_R].
// Rod strain is deliberately absent.
inline VecX rl_state(const HybridModel& model, const HybridState& state) {
  const int n = model.rigid_dof();
  VecX s(15 + 2 * n);
  s.head<3>() = state.base.position;
  s.segment<3>(3) = state.base.rotation.col(0);
  s.segment<3>(6) = state.base.rotation.col(1);
  s.segment<6>(9) = state.base_velocity.vector();
  s.segment(15, n) = state.q_rigid;
  s.segment(15 + n, n) = state.dq_rigid;
  return s;
}

inline int rl_state_dim(const HybridModel& model) { return 15 + 2 * model.rigid_dof(); }

enum class TerminationCause { kNone, kFall, kPitch, kNonFinite, kHorizon, kTrackingError };

inline std::string to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::kNone: return "none";
    case TerminationCause::kFall: return "fall";
    case TerminationCause::kPitch: return "pitch";
    case TerminationCause::kNonFinite: return "non_finite";
    case TerminationCause::kHorizon: return "horizon";
    case TerminationCause::kTrackingError: return "tracking_error";
  }
  return "unknown";
}

struct TerminationParams {
  double min_height_fraction = 0.5;  // of the rest pelvis height
  double max_pitch = 1.0;            // rad
  double horizon = 10.0;             // s
  // Largest allowed |q - q_ref| on any joint; infinite disables the check.
  double max_joint_error = std::numeric_limits<double>::infinity();
};

struct Termination {
  bool done = false;
  TerminationCause cause = TerminationCause::kNone;
};

// Pitch of the base: rotation of its forward axis about world z.
inline double base_pitch(const Pose& base) {
  return std::atan2(base.rotation(1, 0), base.rotation(0, 0));
}

inline Termination should_terminate(const HybridModel& model,
                                    const HybridState& state, double t,
                                    const TerminationParams& p = {},
                                    const ReferenceSample* ref = nullptr) {
  if (!state.allFinite()) return {true, TerminationCause::kNonFinite};
  if (state.base.position.y() <
      p.min_height_fraction * model.rest_base.position.y()) {
    return {true, TerminationCause::kFall};
  }
  const double pitch0 = base_pitch(model.rest_base);
  if (std::abs(base_pitch(state.base) - pitch0) > p.max_pitch) {
    return {true, TerminationCause::kPitch};
  }
  if (ref != nullptr && std::isfinite(p.max_joint_error) &&
      (state.q_rigid - ref->q).cwiseAbs().maxCoeff() > p.max_joint_error) {
    return {true, TerminationCause::kTrackingError};
  }
  if (t >= p.horizon - 1e-9) return {true, TerminationCause::kHorizon};
  return {};
}

}  // namespace hybridlink
