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

// Imitation environment: the policy sets PD joint targets at the control
// rate, the physics runs `substeps` steps per control tick, and the reward
// compares the state after the tick with the reference.

#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>

#include "hybridlink/control.hpp"
#include "hybridlink/hybrid_dynamics.hpp"
#include "hybridlink/imitation.hpp"
#include "hybridlink/model.hpp"
#include "hybridlink/trajectory.hpp"

namespace hybridlink {

struct EnvConfig {
  double control_rate = 30.0;  // Hz
  int substeps = 40;           // physics steps per control tick
  RewardWeights weights;
  TerminationParams termination;
  bool reference_state_init = true;  // reset at a uniformly random phase
  bool observe_phase = false;        // append (sin, cos) of the gait phase
  double ground_height = 0.0;

  double physics_dt() const { return 1.0 / (control_rate * substeps); }
  void validate() const {
    if (!(control_rate > 0.0)) throw InvalidArgument("control_rate must be positive");
    if (substeps < 1) throw InvalidArgument("substeps must be at least 1");
    weights.validate();
    if (!(termination.horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  }
};

struct EnvStep {
  VecX observation;
  double reward = 0.0;
  RewardTerms terms;
  bool done = false;
  TerminationCause cause = TerminationCause::kNone;
};

class Environment {
 public:
  using Recorder = std::function<void(const StepRecord&)>;

  Environment(std::shared_ptr<const HybridModel> model, ReferenceTrajectory ref,
              EnvConfig cfg)
      : model_(std::move(model)), ref_(std::move(ref)), cfg_(cfg) {
    cfg_.validate();
    state_ = HybridState::rest(*model_);
    state_.base = model_->rest_base;
  }

  const HybridModel& model() const { return *model_; }
  const EnvConfig& config() const { return cfg_; }
  const ReferenceTrajectory& reference() const { return ref_; }
  const HybridState& state() const { return state_; }
  double time() const { return t_; }
  double reference_time() const { return t0_ + t_; }

  int observation_dim() const {
    return rl_state_dim(*model_) + (cfg_.observe_phase ? 2 : 0);
  }
  int action_dim() const { return model_->rigid_dof(); }

  void set_recorder(Recorder r) { recorder_ = std::move(r); }

  // Starts an episode on the reference at reference time t0, rod at rest.
  VecX reset(double t0) {
    t0_ = t0;
    t_ = 0.0;
    const ReferenceSample r = ref_.at(t0);
    state_ = HybridState::rest(*model_);
    state_.base = r.base;
    state_.base_velocity = model_->fixed_base ? Twist() : r.base_velocity;
    state_.q_rigid = r.q;
    state_.dq_rigid = r.dq;
    last_contacts_.clear();
    return observation();
  }

  VecX reset(std::mt19937_64& rng) {
    if (!cfg_.reference_state_init) return reset(0.0);
    std::uniform_real_distribution<double> u(0.0, ref_.period());
    return reset(u(rng));
  }

  void set_state(const HybridState& s) { state_ = s; }

  VecX observation() const {
    VecX o(observation_dim());
    const int n = rl_state_dim(*model_);
    o.head(n) = rl_state(*model_, state_);
    if (cfg_.observe_phase) {
      const double ph = 2.0 * M_PI * reference_time() / ref_.period();
      o[n] = std::sin(ph);
      o[n + 1] = std::cos(ph);
    }
    return o;
  }

  // Applies one action (joint targets, rad). Targets are clamped to the
  // joint limits.
  EnvStep step(const VecX& action) {
    const HybridModel& m = *model_;
    if (action.size() != action_dim()) {
      throw InvalidArgument("environment: action has wrong size");
    }
    VecX target = action;
    const auto act = m.skeleton.actuated_joints();
    for (int k = 0; k < target.size(); ++k) {
      const auto& jt = m.skeleton.joints[act[k]];
      target[k] = std::isfinite(target[k]) ? std::clamp(target[k], jt.lower, jt.upper) : 0.0;
    }
    const double dt = cfg_.physics_dt();
    StepOptions opts;
    opts.ground_height = cfg_.ground_height;
    EnvStep out;
    VecX held_torque;
    if (m.control.pd_mode == PDMode::kHoldTorque) {
      held_torque = pd_torque(m.control.gains, target, state_.q_rigid,
                              state_.dq_rigid, m.control.torque_limit).torque;
    }
    try {
      for (int k = 0; k < cfg_.substeps; ++k) {
        GeneralizedForce tau = GeneralizedForce::zero(m);
        tau.rigid = m.control.pd_mode == PDMode::kHoldTorque
                        ? held_torque
                        : pd_torque(m.control.gains, target, state_.q_rigid,
                                    state_.dq_rigid, m.control.torque_limit).torque;
        if (m.control.stabilizer_enabled && !m.fixed_base) {
          tau.base = pelvis_stabilizer(state_.base, state_.base_velocity,
                                       m.control.stabilizer);
        }
        StepResult r = hybridlink::step(m, state_, tau, dt, opts);
        state_ = std::move(r.state);
        t_ += dt;
        last_contacts_ = std::move(r.contacts);
        if (recorder_) {
          StepRecord rec;
          rec.t = t_;
          rec.state = &state_;
          rec.joint_torque = tau.rigid;
          rec.contacts = last_contacts_;
          recorder_(rec);
        }
      }
    } catch (const SimulationDiverged&) {
      out.observation = observation();
      out.done = true;
      out.cause = TerminationCause::kNonFinite;
      return out;
    } catch (const NumericalError&) {
      out.observation = observation();
      out.done = true;
      out.cause = TerminationCause::kNonFinite;
      return out;
    }
    // Snap accumulated time to the control grid.
    ++ticks_;
    t_ = std::round(t_ * cfg_.control_rate) / cfg_.control_rate;

    const ReferenceSample ref = ref_.at(reference_time());
    out.terms = reward(cfg_.weights, m, state_, ref);
    out.reward = out.terms.total;
    const Termination term = should_terminate(m, state_, t_, cfg_.termination, &ref);
    out.done = term.done;
    out.cause = term.cause;
    out.observation = observation();
    return out;
  }

  const std::vector<ContactForce>& last_contacts() const { return last_contacts_; }

 private:
  std::shared_ptr<const HybridModel> model_;
  ReferenceTrajectory ref_;
  EnvConfig cfg_;
  HybridState state_;
  double t_ = 0.0;
  double t0_ = 0.0;
  long ticks_ = 0;
  std::vector<ContactForce> last_contacts_;
  Recorder recorder_;
};

}  // namespace hybridlink
