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

// The hybrid-link model: a skeleton, an optional PCS rod hanging from the
// skeleton's socket, ground contact points and control parameters.
//
// Generalized velocity layout: [eta_0 (6), dq_R (n_R), dq_S (active strain
// components, segment-major)].

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hybridlink/control.hpp"
#include "hybridlink/errors.hpp"
#include "hybridlink/pcs_rod.hpp"
#include "hybridlink/rigid_chain.hpp"

namespace hybridlink {

enum class ContactHost { kBody, kRod };

struct ContactSpec {
  std::string name;
  std::string side;  // "left" / "right" / free text, used by GRF statistics
  ContactHost host = ContactHost::kBody;
  int body = 0;
  Vec3 point = Vec3::Zero();  // body frame, for kBody
  double rod_s = 0.0;         // arclength, for kRod
};

struct ContactParams {
  double kn = 5e4;   // N/m
  double dn = 500;   // N s/m
  double mu = 0.8;
  double kt = 2e3;   // N s/m, viscous regularization of Coulomb friction
};

struct ControlParams {
  PDGains gains;
  VecX torque_limit;
  StabilizerGains stabilizer;
  bool stabilizer_enabled = true;
  PDMode pd_mode = PDMode::kHoldTarget;
};

struct HybridModel {
  std::string name = "model";
  bool humanoid = false;
  bool fixed_base = false;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  // Standing pose used for resets and as the reference pelvis height.
  Pose rest_base;
  SkeletonSpec skeleton;
  std::optional<RodSpec> rod;
  std::vector<ContactSpec> contacts;
  ContactParams contact;
  ControlParams control;

  int rigid_dof() const { return skeleton.dof(); }
  int strain_dof() const { return rod ? rod->active_dim() : 0; }
  int dof() const { return 6 + rigid_dof() + strain_dof(); }
  int rigid_offset() const { return 6; }
  int strain_offset() const { return 6 + rigid_dof(); }

  double rod_mass() const {
    if (!rod) return 0.0;
    double m = 0.0;
    for (const auto& s : rod->segments) m += s.linear_density * s.length;
    return m;
  }
  double total_mass() const { return skeleton.total_mass() + rod_mass(); }

  int contact_index(const std::string& name) const {
    for (std::size_t i = 0; i < contacts.size(); ++i) {
      if (contacts[i].name == name) return static_cast<int>(i);
    }
    throw InvalidArgument("unknown contact '" + name + "'");
  }

  void validate() const {
    skeleton.validate(humanoid);
    if (rod) {
      rod->validate();
      if (!skeleton.socket) throw ModelError("rod requires a skeleton socket");
    }
    if (!gravity.allFinite()) throw ModelError("gravity must be finite");
    if (!rest_base.isValid(1e-8)) throw ModelError("rest_base is not a valid pose");
    for (const auto& c : contacts) {
      if (c.host == ContactHost::kRod) {
        if (!rod) throw ModelError("contact '" + c.name + "' on missing rod");
        if (c.rod_s < 0.0 || c.rod_s > rod->total_length() + 1e-12) {
          throw ModelError("contact '" + c.name + "': arclength out of range");
        }
      } else if (c.body < 0 ||
                 c.body >= static_cast<int>(skeleton.bodies.size())) {
        throw ModelError("contact '" + c.name + "': bad body");
      }
    }
    if (contact.kn < 0 || contact.dn < 0 || contact.mu < 0 || contact.kt < 0) {
      throw ModelError("contact parameters must be non-negative");
    }
    const int n = rigid_dof();
    if (control.gains.kp.size() != n || control.gains.kd.size() != n) {
      throw ModelError("control gains must have one entry per joint");
    }
    if (control.torque_limit.size() != n) {
      throw ModelError("torque limits must have one entry per joint");
    }
    control.gains.validate(n);
  }

  // Fills control defaults (K_P = 100, K_D = 1, joint torque limits) for a
  // freshly assembled skeleton.
  void set_default_control() {
    const int n = rigid_dof();
    control.gains = PDGains::uniform(n);
    control.torque_limit.resize(n);
    const auto act = skeleton.actuated_joints();
    for (int k = 0; k < n; ++k) {
      control.torque_limit[k] = skeleton.joints[act[k]].torque_limit;
    }
  }
};

}  // namespace hybridlink
