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

// Joint-level PD control and the sagittal-plane pelvis stabilizer.
//
// World frame: x forward, y up, z lateral. The sagittal plane is x-y, so
// pitch is rotation about z.

#pragma once

#include <string>
#include <vector>

#include "hybridlink/errors.hpp"
#include "hybridlink/liegroup.hpp"

namespace hybridlink {

struct PDGains {
  VecX kp;
  VecX kd;

  static PDGains uniform(int n, double kp = 100.0, double kd = 1.0) {
    return {VecX::Constant(n, kp), VecX::Constant(n, kd)};
  }
  void validate(int n) const {
    if (kp.size() != n || kd.size() != n) {
      throw InvalidArgument("PD gains must have " + std::to_string(n) +
                            " entries");
    }
    if ((kp.array() < 0.0).any() || (kd.array() < 0.0).any()) {
      throw InvalidArgument("PD gains must be non-negative");
    }
  }
};

// When the PD law is evaluated between control ticks.
enum class PDMode {
  kHoldTarget,  // target held, PD evaluated every physics step
  kHoldTorque,  // torque computed once per control tick and held
};

struct StabilizerGains {
  double kp = 2000.0;
  double kd = 100.0;
};

struct PDResult {
  VecX torque;
  std::vector<bool> saturated;
  bool any_saturated = false;
};

// tau = K_P (q_cmd - q) - K_D dq, clamped to +-torque_limit per joint.
inline PDResult pd_torque(const PDGains& gains, const VecX& q_cmd,
                          const VecX& q, const VecX& dq,
                          const VecX& torque_limit) {
  const auto n = q.size();
  if (q_cmd.size() != n || dq.size() != n || gains.kp.size() != n ||
      gains.kd.size() != n || torque_limit.size() != n) {
    throw InvalidArgument("pd_torque: dimension mismatch");
  }
  PDResult out;
  out.torque = gains.kp.cwiseProduct(q_cmd - q) - gains.kd.cwiseProduct(dq);
  out.saturated.assign(n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lim = torque_limit[i];
    if (out.torque[i] > lim) {
      out.torque[i] = lim;
      out.saturated[i] = true;
    } else if (out.torque[i] < -lim) {
      out.torque[i] = -lim;
      out.saturated[i] = true;
    }
    out.any_saturated = out.any_saturated || out.saturated[i];
  }
  return out;
}

// Virtual base wrench (body frame, conjugate to eta_0) that holds the pelvis
// in the sagittal plane: PD on lateral translation, roll and yaw. Forward,
// vertical and pitch motion are left untouched.
inline Vec6 pelvis_stabilizer(const Pose& base, const Twist& base_velocity,
                              const StabilizerGains& gains = {}) {
  const Mat3& r = base.rotation;
  const Vec3 omega_world = r * Vec3(base_velocity.angular());
  const Vec3 vel_world = r * Vec3(base_velocity.linear());

  // Tilt of the body lateral axis out of the world lateral axis; zero for any
  // pure pitch.
  const Vec3 tilt = (r * Vec3::UnitZ()).cross(Vec3::UnitZ());
  Vec3 torque_world(gains.kp * tilt.x() - gains.kd * omega_world.x(),
                    gains.kp * tilt.y() - gains.kd * omega_world.y(), 0.0);
  Vec3 force_world(0.0, 0.0,
                   -gains.kp * base.position.z() - gains.kd * vel_world.z());

  Vec6 wrench;
  wrench << r.transpose() * torque_world, r.transpose() * force_world;
  return wrench;
}

}  // namespace hybridlink
