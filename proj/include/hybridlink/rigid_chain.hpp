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

// Skeleton topology: a floating base body (index 0) and a tree of bodies
// connected by revolute (actuated) or fixed joints.
//
// A child body's frame coincides with its joint frame:
//   H_child = H_parent * mount * Rot(axis, q).

#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hybridlink/errors.hpp"
#include "hybridlink/liegroup.hpp"

namespace hybridlink {

struct BodySpec {
  std::string name;
  double mass = 0.0;              // kg
  Vec3 com = Vec3::Zero();        // m, body frame
  Mat3 inertia = Mat3::Zero();    // kg m^2 about the com
  int parent_joint = -1;          // -1 for the base

  // 6x6 spatial inertia about the body frame origin, (angular, linear).
  Mat6 spatial_inertia() const {
    Mat6 s = Mat6::Zero();
    const Mat3 c = hat(com);
    s.topLeftCorner<3, 3>() = inertia + mass * c * c.transpose();
    s.topRightCorner<3, 3>() = mass * c;
    s.bottomLeftCorner<3, 3>() = mass * c.transpose();
    s.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
    return s;
  }
};

// Recovers (mass, com, inertia about com) from a spatial inertia about the
// frame origin.
inline BodySpec body_from_spatial_inertia(const std::string& name,
                                          const Mat6& s) {
  BodySpec b;
  b.name = name;
  b.mass = s.bottomRightCorner<3, 3>().trace() / 3.0;
  if (b.mass > 0.0) {
    b.com = vee(s.topRightCorner<3, 3>()) / b.mass;
  }
  const Mat3 c = hat(b.com);
  b.inertia = s.topLeftCorner<3, 3>() - b.mass * c * c.transpose();
  b.inertia = 0.5 * (b.inertia + b.inertia.transpose()).eval();
  return b;
}

enum class JointType { kRevolute, kFixed };

struct JointSpec {
  std::string name;
  JointType type = JointType::kRevolute;
  Vec3 axis = Vec3::UnitZ();
  int parent_body = 0;
  int child_body = 1;
  Pose mount;
  double lower = -M_PI;
  double upper = M_PI;
  double torque_limit = 300.0;  // N m
};

struct EndEffector {
  std::string name;
  int body = 0;
  Vec3 point = Vec3::Zero();
};

struct Socket {
  int body = 0;
  Pose pose;
};

struct SkeletonSpec {
  std::vector<BodySpec> bodies;
  std::vector<JointSpec> joints;
  std::vector<EndEffector> end_effectors;
  std::optional<Socket> socket;

  int body_index(const std::string& name) const {
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      if (bodies[i].name == name) return static_cast<int>(i);
    }
    throw InvalidArgument("unknown body '" + name + "'");
  }
  int joint_index(const std::string& name) const {
    for (std::size_t i = 0; i < joints.size(); ++i) {
      if (joints[i].name == name) return static_cast<int>(i);
    }
    throw InvalidArgument("unknown joint '" + name + "'");
  }

  // Joint indices of the revolute joints; position k is coordinate q_R[k].
  std::vector<int> actuated_joints() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < joints.size(); ++i) {
      if (joints[i].type == JointType::kRevolute) {
        out.push_back(static_cast<int>(i));
      }
    }
    return out;
  }
  int dof() const { return static_cast<int>(actuated_joints().size()); }

  // Coordinate index of each joint in q_R (-1 for fixed joints).
  std::vector<int> coordinate_of_joint() const {
    std::vector<int> out(joints.size(), -1);
    int k = 0;
    for (std::size_t i = 0; i < joints.size(); ++i) {
      if (joints[i].type == JointType::kRevolute) out[i] = k++;
    }
    return out;
  }

  // Joints ordered so every parent body is placed before its children.
  std::vector<int> traversal_order() const {
    std::vector<int> order;
    std::vector<bool> placed(bodies.size(), false);
    if (!bodies.empty()) placed[0] = true;
    std::vector<bool> used(joints.size(), false);
    bool progress = true;
    while (progress) {
      progress = false;
      for (std::size_t j = 0; j < joints.size(); ++j) {
        if (used[j]) continue;
        const auto& jt = joints[j];
        if (jt.parent_body >= 0 &&
            jt.parent_body < static_cast<int>(bodies.size()) &&
            placed[jt.parent_body]) {
          used[j] = true;
          placed[jt.child_body] = true;
          order.push_back(static_cast<int>(j));
          progress = true;
        }
      }
    }
    return order;
  }

  // Chain of joints from the base to `body`, root first.
  std::vector<int> joint_path(int body) const {
    std::vector<int> path;
    while (body > 0) {
      const int j = bodies[body].parent_joint;
      path.push_back(j);
      body = joints[j].parent_body;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  double total_mass() const {
    double m = 0.0;
    for (const auto& b : bodies) m += b.mass;
    return m;
  }

  // Load-time checks. `humanoid` additionally requires the 9 actuated joints
  // and 5 end effectors of the full-body model.
  void validate(bool humanoid = false) const;
};

inline void SkeletonSpec::validate(bool humanoid) const {
  const int nb = static_cast<int>(bodies.size());
  if (nb == 0) throw ModelError("skeleton: no bodies");
  if (bodies[0].parent_joint != -1) {
    throw ModelError("skeleton: body 0 must be the floating base");
  }
  std::vector<int> incoming(nb, 0);
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const auto& jt = joints[j];
    const std::string where = "joint '" + jt.name + "': ";
    if (jt.parent_body < 0 || jt.parent_body >= nb || jt.child_body <= 0 ||
        jt.child_body >= nb) {
      throw ModelError(where + "body index out of range");
    }
    if (jt.parent_body == jt.child_body) throw ModelError(where + "self loop");
    if (std::abs(jt.axis.norm() - 1.0) > 1e-9) {
      throw ModelError(where + "axis must be a unit vector");
    }
    if (!(jt.lower < jt.upper)) {
      throw ModelError(where + "lower limit must be below upper limit");
    }
    if (!(jt.torque_limit > 0.0)) {
      throw ModelError(where + "torque limit must be positive");
    }
    if (!jt.mount.isValid(1e-8)) throw ModelError(where + "invalid mount pose");
    if (bodies[jt.child_body].parent_joint != static_cast<int>(j)) {
      throw ModelError(where + "child body does not reference this joint");
    }
    ++incoming[jt.child_body];
  }
  for (int b = 1; b < nb; ++b) {
    if (incoming[b] != 1) {
      throw ModelError("body '" + bodies[b].name +
                       "' must have exactly one parent joint (orphan or "
                       "multiply attached)");
    }
  }
  if (traversal_order().size() != joints.size()) {
    throw ModelError("skeleton: joint graph has a cycle or is disconnected");
  }
  for (const auto& b : bodies) {
    if (!(b.mass > 0.0)) throw ModelError("body '" + b.name + "': mass <= 0");
    if ((b.inertia - b.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ModelError("body '" + b.name + "': inertia not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(b.inertia, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw ModelError("body '" + b.name + "': inertia not positive definite");
    }
  }
  for (const auto& e : end_effectors) {
    if (e.body < 0 || e.body >= nb) {
      throw ModelError("end effector '" + e.name + "': bad body");
    }
  }
  if (socket && (socket->body < 0 || socket->body >= nb)) {
    throw ModelError("socket: bad body index");
  }
  if (humanoid) {
    if (dof() != 9) {
      throw ModelError("humanoid skeleton needs exactly 9 actuated joints, has " +
                       std::to_string(dof()));
    }
    if (end_effectors.size() != 5) {
      throw ModelError("humanoid skeleton needs exactly 5 end effectors");
    }
    if (!socket) throw ModelError("humanoid skeleton needs a prosthesis socket");
  }
}

struct SkeletonPose {
  std::vector<Pose> bodies;        // world poses of body frames
  std::vector<Vec3> end_effectors; // world positions
  std::optional<Pose> socket;      // world pose of the socket frame
  bool clamped = false;            // some angle was outside its limits
};

inline Pose joint_transform(const JointSpec& j, double q) {
  if (j.type == JointType::kFixed) return j.mount;
  return j.mount * Pose::Rotation(rotation_about(j.axis, q));
}

// Forward kinematics of the skeleton. Angles outside the joint limits are
// clamped when `clamp` is set and reported through SkeletonPose::clamped.
inline SkeletonPose skeleton_fk(const SkeletonSpec& spec, const Pose& base,
                                const VecX& q, bool clamp = true) {
  if (q.size() != spec.dof()) {
    throw InvalidArgument("skeleton_fk: expected " +
                          std::to_string(spec.dof()) + " joint angles");
  }
  SkeletonPose out;
  out.bodies.assign(spec.bodies.size(), Pose());
  out.bodies[0] = base;
  const auto coord = spec.coordinate_of_joint();
  for (int j : spec.traversal_order()) {
    const auto& jt = spec.joints[j];
    double angle = coord[j] >= 0 ? q[coord[j]] : 0.0;
    if (coord[j] >= 0 && (angle < jt.lower || angle > jt.upper)) {
      out.clamped = true;
      if (clamp) angle = std::clamp(angle, jt.lower, jt.upper);
    }
    out.bodies[jt.child_body] =
        out.bodies[jt.parent_body] * joint_transform(jt, angle);
  }
  for (const auto& e : spec.end_effectors) {
    out.end_effectors.push_back(out.bodies[e.body] * e.point);
  }
  if (spec.socket) {
    out.socket = out.bodies[spec.socket->body] * spec.socket->pose;
  }
  return out;
}

// Jacobian of a body-fixed point, 6 x (6 + n_R). Rows are the world-frame
// angular velocity of the body and the world-frame linear velocity of the
// point; columns are the base body twist eta_0 followed by dq_R.
inline MatX point_jacobian(const SkeletonSpec& spec, const Pose& base,
                           const VecX& q, int body, const Vec3& local_point) {
  if (body < 0 || body >= static_cast<int>(spec.bodies.size())) {
    throw InvalidArgument("point_jacobian: unknown body index " +
                          std::to_string(body));
  }
  const SkeletonPose fk = skeleton_fk(spec, base, q, false);
  const Vec3 p = fk.bodies[body] * local_point;
  MatX jac = MatX::Zero(6, 6 + spec.dof());
  const Mat3& r0 = base.rotation;
  jac.block<3, 3>(0, 0) = r0;
  jac.block<3, 3>(3, 0) = -hat(p - base.position) * r0;
  jac.block<3, 3>(3, 3) = r0;
  const auto coord = spec.coordinate_of_joint();
  for (int j : spec.joint_path(body)) {
    if (coord[j] < 0) continue;
    const auto& jt = spec.joints[j];
    const Pose& frame = fk.bodies[jt.child_body];
    const Vec3 axis = frame.rotation * jt.axis;
    jac.block<3, 1>(0, 6 + coord[j]) = axis;
    jac.block<3, 1>(3, 6 + coord[j]) = axis.cross(p - frame.position);
  }
  return jac;
}

inline MatX point_jacobian(const SkeletonSpec& spec, const Pose& base,
                           const VecX& q, const std::string& body,
                           const Vec3& local_point) {
  return point_jacobian(spec, base, q, spec.body_index(body), local_point);
}

}  // namespace hybridlink
