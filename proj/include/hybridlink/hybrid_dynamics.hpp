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

// Equations of motion of the hybrid-link system
//
//   M(q) ddq + b(q, dq) = tau + sum_c J_c^T f_c
//
// assembled by Jacobian aggregation over every mass-carrying frame: the
// skeleton bodies and the Gauss-Legendre points of every rod segment. Each
// frame carries its world pose, body twist V = J dq, the velocity-product
// acceleration A (so that dV/dt = J ddq + A) and its spatial inertia Lambda:
//
//   M = sum J^T Lambda J
//   b = sum J^T (Lambda (A - g_body) - ad_V^T Lambda V)

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hybridlink/errors.hpp"
#include "hybridlink/liegroup.hpp"
#include "hybridlink/model.hpp"
#include "hybridlink/pcs_rod.hpp"
#include "hybridlink/rigid_chain.hpp"

namespace hybridlink {

struct HybridState {
  Pose base;
  SpatialVelocity base_velocity;
  VecX q_rigid;
  VecX dq_rigid;
  RodState rod;

  static HybridState rest(const HybridModel& model) {
    HybridState s;
    s.q_rigid = VecX::Zero(model.rigid_dof());
    s.dq_rigid = VecX::Zero(model.rigid_dof());
    if (model.rod) s.rod = RodState::rest(*model.rod);
    return s;
  }

  bool allFinite() const {
    return base.allFinite() && base_velocity.allFinite() &&
           q_rigid.allFinite() && dq_rigid.allFinite() && rod.allFinite();
  }
};

// Active strain indices (into the 6N vector) in generalized-coordinate order.
inline std::vector<int> strain_coordinates(const HybridModel& model) {
  return model.rod ? model.rod->active_indices() : std::vector<int>{};
}

inline VecX generalized_velocity(const HybridModel& model,
                                 const HybridState& state) {
  VecX v(model.dof());
  v.head<6>() = state.base_velocity.vector();
  v.segment(6, model.rigid_dof()) = state.dq_rigid;
  if (model.rod) {
    const VecX rates = state.rod.rate_vector();
    const auto idx = strain_coordinates(model);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      v[model.strain_offset() + k] = rates[idx[k]];
    }
  }
  return v;
}

inline void set_generalized_velocity(const HybridModel& model,
                                     HybridState& state, const VecX& v) {
  if (v.size() != model.dof()) {
    throw InvalidArgument("generalized velocity has wrong size");
  }
  state.base_velocity = Twist(Vec6(v.head<6>()));
  state.dq_rigid = v.segment(6, model.rigid_dof());
  if (model.rod) {
    VecX rates = state.rod.rate_vector();
    const auto idx = strain_coordinates(model);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      rates[idx[k]] = v[model.strain_offset() + k];
    }
    state.rod.set_rate_vector(rates);
  }
}

// Generalized force split by block. `base` stays zero except for the pelvis
// stabilizer; `rod` spans all 6N strain components (inactive ones ignored).
struct GeneralizedForce {
  Vec6 base = Vec6::Zero();
  VecX rigid;
  VecX rod;

  static GeneralizedForce zero(const HybridModel& model) {
    GeneralizedForce f;
    f.rigid = VecX::Zero(model.rigid_dof());
    f.rod = VecX::Zero(model.rod ? model.rod->strain_dim() : 0);
    return f;
  }

  VecX to_vector(const HybridModel& model) const {
    VecX v = VecX::Zero(model.dof());
    v.head<6>() = base;
    if (rigid.size() != model.rigid_dof()) {
      throw InvalidArgument("generalized force: rigid block has wrong size");
    }
    v.segment(6, model.rigid_dof()) = rigid;
    if (model.rod && rod.size() > 0) {
      if (rod.size() != model.rod->strain_dim()) {
        throw InvalidArgument("generalized force: rod block has wrong size");
      }
      const auto idx = strain_coordinates(model);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        v[model.strain_offset() + k] = rod[idx[k]];
      }
    }
    return v;
  }

  static GeneralizedForce from_vector(const HybridModel& model,
                                      const VecX& v) {
    GeneralizedForce f = zero(model);
    f.base = v.head<6>();
    f.rigid = v.segment(6, model.rigid_dof());
    const auto idx = strain_coordinates(model);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      f.rod[idx[k]] = v[model.strain_offset() + k];
    }
    return f;
  }
};

struct ContactForce {
  int index = -1;          // into HybridModel::contacts
  std::string name;
  Vec3 position = Vec3::Zero();   // world
  Vec3 velocity = Vec3::Zero();   // world
  double penetration = 0.0;       // m, > 0 when below ground
  double normal = 0.0;            // N, along +y
  Vec3 tangential = Vec3::Zero(); // N, in the ground plane
  bool active = false;

  Vec3 force() const { return Vec3(0.0, normal, 0.0) + tangential; }
};

namespace detail {

struct Frame {
  Pose pose;
  Vec6 velocity = Vec6::Zero();
  Vec6 bias = Vec6::Zero();
  MatX jacobian;
  Mat6 inertia = Mat6::Zero();
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  bool massive = false;
};

struct EvalFlags {
  bool jacobian = true;
  bool bias = true;
};

struct Kinematics {
  std::vector<Frame> frames;
  std::vector<int> body_frame;
  std::vector<int> rod_boundary;
  std::vector<int> contact_frame;
  std::vector<Vec3> contact_point;
};

inline const Quadrature& rod_quadrature() {
  static const Quadrature q = gauss_legendre(5);
  return q;
}

inline void check_state(const HybridModel& model, const HybridState& state) {
  if (state.q_rigid.size() != model.rigid_dof() ||
      state.dq_rigid.size() != model.rigid_dof()) {
    throw InvalidArgument("state has " + std::to_string(state.q_rigid.size()) +
                          " joint coordinates, model has " +
                          std::to_string(model.rigid_dof()));
  }
  if (model.rod) check_dims(*model.rod, state.rod);
}

// Child frame attached to `parent` through relative transform g with
// relative twist vrel = S dq and S-dot dq term `sdot_dq`.
inline Frame child_frame(const Frame& parent, const Pose& g, const Vec6& vrel,
                         const Vec6& sdot_dq, const EvalFlags& flags) {
  Frame f;
  f.pose = parent.pose * g;
  const Mat6 ad_inv = adjoint_inverse(g);
  f.velocity = ad_inv * parent.velocity + vrel;
  if (flags.bias) {
    f.bias = ad_inv * parent.bias + ad_apply(f.velocity, vrel) + sdot_dq;
  }
  if (flags.jacobian) f.jacobian.noalias() = ad_inv * parent.jacobian;
  return f;
}

inline Kinematics evaluate(const HybridModel& model, const HybridState& state,
                           const EvalFlags& flags) {
  check_state(model, state);
  const int n = model.dof();
  const SkeletonSpec& sk = model.skeleton;
  Kinematics kin;
  kin.frames.reserve(sk.bodies.size() + 64);
  kin.body_frame.assign(sk.bodies.size(), -1);

  Frame base;
  base.pose = state.base;
  base.velocity = state.base_velocity.vector();
  if (flags.jacobian) {
    base.jacobian = MatX::Zero(6, n);
    base.jacobian.leftCols<6>().setIdentity();
  }
  base.inertia = sk.bodies[0].spatial_inertia();
  base.mass = sk.bodies[0].mass;
  base.com = sk.bodies[0].com;
  base.massive = true;
  kin.frames.push_back(std::move(base));
  kin.body_frame[0] = 0;

  const auto coord = sk.coordinate_of_joint();
  for (int j : sk.traversal_order()) {
    const JointSpec& jt = sk.joints[j];
    const int c = coord[j];
    const double q = c >= 0 ? state.q_rigid[c] : 0.0;
    const double dq = c >= 0 ? state.dq_rigid[c] : 0.0;
    Vec6 s = Vec6::Zero();
    if (c >= 0) s.head<3>() = jt.axis;
    const Frame& parent = kin.frames[kin.body_frame[jt.parent_body]];
    Frame f = child_frame(parent, joint_transform(jt, q), s * dq, Vec6::Zero(),
                          flags);
    if (flags.jacobian && c >= 0) f.jacobian.col(6 + c) += s;
    const BodySpec& body = sk.bodies[jt.child_body];
    f.inertia = body.spatial_inertia();
    f.mass = body.mass;
    f.com = body.com;
    f.massive = true;
    kin.body_frame[jt.child_body] = static_cast<int>(kin.frames.size());
    kin.frames.push_back(std::move(f));
  }

  // Rod contact points are extra massless frames inside their segment.
  std::vector<std::vector<std::pair<int, double>>> rod_contacts;
  kin.contact_frame.assign(model.contacts.size(), -1);
  kin.contact_point.assign(model.contacts.size(), Vec3::Zero());
  if (model.rod) rod_contacts.resize(model.rod->segment_count());
  for (std::size_t ci = 0; ci < model.contacts.size(); ++ci) {
    const ContactSpec& cs = model.contacts[ci];
    if (cs.host == ContactHost::kBody) {
      kin.contact_frame[ci] = kin.body_frame[cs.body];
      kin.contact_point[ci] = cs.point;
    } else {
      const SegmentLocation loc = locate(*model.rod, cs.rod_s);
      rod_contacts[loc.segment].push_back({static_cast<int>(ci), loc.offset});
    }
  }

  if (model.rod) {
    const RodSpec& rod = *model.rod;
    const Frame& socket_body = kin.frames[kin.body_frame[sk.socket->body]];
    Frame root = child_frame(socket_body, sk.socket->pose * rod.attachment,
                             Vec6::Zero(), Vec6::Zero(), flags);
    kin.rod_boundary.push_back(static_cast<int>(kin.frames.size()));
    kin.frames.push_back(std::move(root));

    const Quadrature& quad = rod_quadrature();
    int col = model.strain_offset();
    for (int i = 0; i < rod.segment_count(); ++i) {
      const SegmentSpec& seg = rod.segments[i];
      const Vec6 xi = state.rod.strains[i].vector();
      const Vec6 dxi = state.rod.strain_rates[i].vector();
      std::vector<int> cols(6, -1);
      for (int k = 0; k < 6; ++k) {
        if (seg.active[k]) cols[k] = col++;
      }
      Mat6 density = Mat6::Zero();
      density.topLeftCorner<3, 3>() = seg.rotational_inertia_density;
      density.bottomRightCorner<3, 3>() =
          Mat3::Identity() * seg.linear_density;

      const int start = kin.rod_boundary.back();
      auto add_point = [&](double x, double weight) -> int {
        const Vec6 xx = x * xi;
        Mat6 tmap;
        Vec6 vrel;
        if (flags.jacobian) {
          tmap = tangent_map(xx);
          vrel = x * (tmap * dxi);
        } else {
          vrel = x * tangent_apply(xx, dxi);
        }
        Vec6 sdot = Vec6::Zero();
        if (flags.bias) sdot = x * tangent_derivative_apply(xx, x * dxi, dxi);
        Frame f = child_frame(kin.frames[start],
                              exp_se3(state.rod.strains[i], x), vrel, sdot,
                              flags);
        if (flags.jacobian) {
          for (int k = 0; k < 6; ++k) {
            if (cols[k] >= 0) f.jacobian.col(cols[k]) += x * tmap.col(k);
          }
        }
        if (weight > 0.0) {
          f.inertia = weight * density;
          f.mass = weight * seg.linear_density;
          f.massive = f.mass > 0.0 ||
                      seg.rotational_inertia_density.squaredNorm() > 0.0;
        }
        kin.frames.push_back(std::move(f));
        return static_cast<int>(kin.frames.size()) - 1;
      };

      const double half = 0.5 * seg.length;
      for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
        add_point(half * (quad.nodes[k] + 1.0), half * quad.weights[k]);
      }
      for (const auto& [ci, x] : rod_contacts[i]) {
        kin.contact_frame[ci] = add_point(x, 0.0);
      }
      kin.rod_boundary.push_back(add_point(seg.length, 0.0));
    }
  }
  return kin;
}

// World-frame linear Jacobian (3 x dof) of contact `ci`.
inline MatX contact_jacobian(const Kinematics& kin, int ci) {
  const Frame& f = kin.frames[kin.contact_frame[ci]];
  const Vec3& r = kin.contact_point[ci];
  Eigen::Matrix<double, 3, 6> local;
  local << -hat(r), Mat3::Identity();
  return f.pose.rotation * (local * f.jacobian);
}

inline Vec3 contact_position(const Kinematics& kin, int ci) {
  return kin.frames[kin.contact_frame[ci]].pose * kin.contact_point[ci];
}

inline Vec3 contact_velocity(const Kinematics& kin, int ci) {
  const Frame& f = kin.frames[kin.contact_frame[ci]];
  const Vec3& r = kin.contact_point[ci];
  const Vec3 w = f.velocity.head<3>();
  const Vec3 v = f.velocity.tail<3>();
  return f.pose.rotation * (v + w.cross(r));
}

inline MatX mass_matrix(const HybridModel& model, const Kinematics& kin) {
  const int n = model.dof();
  MatX m = MatX::Zero(n, n);
  for (const Frame& f : kin.frames) {
    if (!f.massive) continue;
    const MatX lj = f.inertia * f.jacobian;
    m.noalias() += f.jacobian.transpose() * lj;
  }
  return 0.5 * (m + m.transpose());
}

inline VecX bias_vector(const HybridModel& model, const Kinematics& kin,
                        const Vec3& gravity) {
  VecX b = VecX::Zero(model.dof());
  for (const Frame& f : kin.frames) {
    if (!f.massive) continue;
    Vec6 g = Vec6::Zero();
    g.tail<3>() = f.pose.rotation.transpose() * gravity;
    const Vec6 h = f.inertia * f.velocity;
    const Vec6 wrench = f.inertia * (f.bias - g) - ad(f.velocity).transpose() * h;
    b.noalias() += f.jacobian.transpose() * wrench;
  }
  return b;
}

}  // namespace detail

inline MatX mass_matrix(const HybridModel& model, const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {true, false});
  return detail::mass_matrix(model, kin);
}

inline VecX bias_vector(const HybridModel& model, const HybridState& state,
                        const Vec3& gravity) {
  const auto kin = detail::evaluate(model, state, {true, true});
  return detail::bias_vector(model, kin, gravity);
}

inline VecX bias_vector(const HybridModel& model, const HybridState& state) {
  return bias_vector(model, state, model.gravity);
}

// World poses of the rod boundaries H_0..H_N within the full model.
inline std::vector<Pose> rod_boundary_poses(const HybridModel& model,
                                            const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {false, false});
  std::vector<Pose> out;
  for (int f : kin.rod_boundary) out.push_back(kin.frames[f].pose);
  return out;
}

namespace detail {

inline ContactForce penalty_contact(const ContactParams& p, int index,
                                    const std::string& name, const Vec3& pos,
                                    const Vec3& vel, double ground_height) {
  ContactForce c;
  c.index = index;
  c.name = name;
  c.position = pos;
  c.velocity = vel;
  c.penetration = ground_height - pos.y();
  if (c.penetration <= 0.0) return c;
  c.normal = std::max(0.0, p.kn * c.penetration - p.dn * vel.y());
  c.active = c.normal > 0.0;
  const Vec3 vt(vel.x(), 0.0, vel.z());
  const double speed = vt.norm();
  if (c.active && speed > 0.0) {
    const double mag = std::min(p.mu * c.normal, p.kt * speed);
    c.tangential = -mag * vt / speed;
  }
  return c;
}

}  // namespace detail

// Penalty ground contact on the plane y = ground_height.
inline std::vector<ContactForce> contact_forces(const HybridModel& model,
                                                const HybridState& state,
                                                double ground_height = 0.0) {
  const auto kin = detail::evaluate(model, state, {false, false});
  std::vector<ContactForce> out;
  for (std::size_t ci = 0; ci < model.contacts.size(); ++ci) {
    const int i = static_cast<int>(ci);
    out.push_back(detail::penalty_contact(
        model.contact, i, model.contacts[ci].name,
        detail::contact_position(kin, i), detail::contact_velocity(kin, i),
        ground_height));
  }
  return out;
}

inline std::vector<int> free_coordinates(const HybridModel& model,
                                         const std::vector<bool>& locked) {
  std::vector<int> free;
  for (int i = 0; i < model.dof(); ++i) {
    const bool base_locked = model.fixed_base && i < 6;
    const bool user_locked =
        !locked.empty() && locked[static_cast<std::size_t>(i)];
    if (!base_locked && !user_locked) free.push_back(i);
  }
  return free;
}

namespace detail {

inline MatX select(const MatX& a, const std::vector<int>& idx) {
  MatX out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = a(idx[r], idx[c]);
  }
  return out;
}

inline VecX select(const VecX& a, const std::vector<int>& idx) {
  VecX out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out[r] = a[idx[r]];
  return out;
}

inline VecX solve_spd(const MatX& a, const VecX& rhs, const char* what) {
  Eigen::LLT<MatX> llt(a);
  if (llt.info() == Eigen::Success) {
    VecX x = llt.solve(rhs);
    if (x.allFinite()) return x;
  }
  Eigen::FullPivLU<MatX> lu(a);
  VecX x = lu.solve(rhs);
  if (!lu.isInvertible() || !x.allFinite()) {
    std::ostringstream os;
    os << what << ": linear solve failed (n=" << a.rows() << ", max|A|="
       << a.cwiseAbs().maxCoeff() << ", max|rhs|=" << rhs.cwiseAbs().maxCoeff()
       << ")";
    throw NumericalError(os.str());
  }
  return x;
}

}  // namespace detail

// Solves M ddq = tau + sum J_c^T f_c - b. `tau` is the complete generalized
// force (include viscoelastic_force in tau.rod for a loaded rod). Base
// accelerations are zero for fixed-base models.
inline VecX forward_dynamics(const HybridModel& model, const HybridState& state,
                             const GeneralizedForce& tau,
                             const std::vector<ContactForce>& contacts = {}) {
  const auto kin = detail::evaluate(model, state, {true, true});
  const MatX m = detail::mass_matrix(model, kin);
  const VecX b = detail::bias_vector(model, kin, model.gravity);
  VecX rhs = tau.to_vector(model) - b;
  for (const auto& c : contacts) {
    if (c.index < 0 || c.index >= static_cast<int>(model.contacts.size())) {
      throw InvalidArgument("contact force with bad index");
    }
    rhs.noalias() += detail::contact_jacobian(kin, c.index).transpose() * c.force();
  }
  const auto free = free_coordinates(model, {});
  const VecX sub = detail::solve_spd(detail::select(m, free),
                                     detail::select(rhs, free),
                                     "forward_dynamics");
  VecX qdd = VecX::Zero(model.dof());
  for (std::size_t k = 0; k < free.size(); ++k) qdd[free[k]] = sub[k];

  const VecX residual = m * qdd - rhs;
  const double scale = std::max({1.0, rhs.norm(), b.norm(), (m * qdd).norm()});
  if (detail::select(residual, free).norm() > 1e-8 * scale) {
    std::ostringstream os;
    os << "forward_dynamics: residual " << residual.norm() << " at state q_R=["
       << state.q_rigid.transpose() << "]";
    throw NumericalError(os.str());
  }
  return qdd;
}

// tau = M ddq + b (no contact forces).
inline GeneralizedForce inverse_dynamics(const HybridModel& model,
                                         const HybridState& state,
                                         const VecX& qdd) {
  if (qdd.size() != model.dof()) {
    throw InvalidArgument("inverse_dynamics: acceleration has wrong size");
  }
  const auto kin = detail::evaluate(model, state, {true, true});
  const VecX tau = detail::mass_matrix(model, kin) * qdd +
                   detail::bias_vector(model, kin, model.gravity);
  return GeneralizedForce::from_vector(model, tau);
}

inline double kinetic_energy(const HybridModel& model,
                             const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {false, false});
  double t = 0.0;
  for (const auto& f : kin.frames) {
    if (f.massive) t += 0.5 * f.velocity.dot(f.inertia * f.velocity);
  }
  return t;
}

inline double potential_energy(const HybridModel& model,
                               const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {false, false});
  double u = 0.0;
  for (const auto& f : kin.frames) {
    if (f.massive) u -= f.mass * model.gravity.dot(f.pose * f.com);
  }
  return u;
}

inline double rod_elastic_energy(const HybridModel& model,
                                 const HybridState& state) {
  return model.rod ? elastic_energy(*model.rod, state.rod) : 0.0;
}

// Kinetic + gravitational + elastic energy.
inline double total_energy(const HybridModel& model, const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {false, false});
  double e = 0.0;
  for (const auto& f : kin.frames) {
    if (!f.massive) continue;
    e += 0.5 * f.velocity.dot(f.inertia * f.velocity);
    e -= f.mass * model.gravity.dot(f.pose * f.com);
  }
  return e + rod_elastic_energy(model, state);
}

// World-frame spatial momentum (angular about the world origin, linear).
inline Vec6 momentum(const HybridModel& model, const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {false, false});
  Vec6 h = Vec6::Zero();
  for (const auto& f : kin.frames) {
    if (!f.massive) continue;
    h += adjoint_inverse(f.pose).transpose() * (f.inertia * f.velocity);
  }
  return h;
}

inline Vec3 center_of_mass(const HybridModel& model, const HybridState& state) {
  const auto kin = detail::evaluate(model, state, {false, false});
  Vec3 c = Vec3::Zero();
  double m = 0.0;
  for (const auto& f : kin.frames) {
    if (!f.massive) continue;
    c += f.mass * (f.pose * f.com);
    m += f.mass;
  }
  return c / m;
}

struct StepOptions {
  double ground_height = 0.0;
  // External forces (world frame) applied at model contact points.
  std::vector<std::pair<int, Vec3>> point_loads;
  // Per generalized coordinate; locked coordinates keep zero velocity.
  std::vector<bool> locked;
  // Re-impose the discrete linear momentum balance after the update.
  bool momentum_projection = true;
};

struct StepResult {
  HybridState state;
  std::vector<ContactForce> contacts;  // forces applied during the step
};

// One integration step of length dt.
//
// Velocities: M (v+ - v) = dt (tau + tau_S + sum J^T f_c - b), where the rod
// viscoelastic force tau_S is taken at the step midpoint (energy-neutral for
// the linear spring) and active penalty contacts are linearized implicitly
// in v+. Positions advance with the mean of old and new velocities; the base
// through H0+ = H0 exp(dt (eta + eta+) / 2).
//
// `tau` carries the actuation (stabilizer wrench, joint torques, optional
// extra rod forces); the viscoelastic force is added here.
inline StepResult step(const HybridModel& model, const HybridState& state,
                       const GeneralizedForce& tau, double dt,
                       const StepOptions& opts = {}) {
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
  if (!opts.locked.empty() &&
      opts.locked.size() != static_cast<std::size_t>(model.dof())) {
    throw InvalidArgument("step: locked mask has wrong size");
  }
  const int n = model.dof();
  const auto kin = detail::evaluate(model, state, {true, true});
  const MatX m = detail::mass_matrix(model, kin);
  const VecX b = detail::bias_vector(model, kin, model.gravity);
  const VecX v = generalized_velocity(model, state);
  const VecX tau_vec = tau.to_vector(model);

  MatX a_base = m;
  VecX rhs_base = m * v + dt * (tau_vec - b);

  // Rod: midpoint viscoelastic force.
  const auto sidx = strain_coordinates(model);
  const int ns = static_cast<int>(sidx.size());
  const int so = model.strain_offset();
  if (model.rod && ns > 0) {
    const MatX kfull = model.rod->stiffness_matrix();
    const MatX dfull = model.rod->damping_matrix();
    const VecX f0full =
        kfull * (model.rod->rest_vector() - state.rod.strain_vector());
    MatX ka(ns, ns);
    MatX da(ns, ns);
    VecX f0(ns);
    for (int r = 0; r < ns; ++r) {
      f0[r] = f0full[sidx[r]];
      for (int c = 0; c < ns; ++c) {
        ka(r, c) = kfull(sidx[r], sidx[c]);
        da(r, c) = dfull(sidx[r], sidx[c]);
      }
    }
    const VecX vs = v.segment(so, ns);
    rhs_base.segment(so, ns) += dt * (f0 - 0.25 * dt * (ka * vs) - 0.5 * (da * vs));
    a_base.block(so, so, ns, ns) += 0.25 * dt * dt * ka + 0.5 * dt * da;
  }

  for (const auto& [ci, force] : opts.point_loads) {
    if (ci < 0 || ci >= static_cast<int>(model.contacts.size())) {
      throw InvalidArgument("step: point load on unknown contact");
    }
    rhs_base.noalias() += dt * detail::contact_jacobian(kin, ci).transpose() * force;
  }

  // Contact candidates.
  struct Candidate {
    int index;
    MatX jac;
    Vec3 pos;
    Vec3 vel;
    double depth;
    double n0;
    bool active;
    bool sliding;
  };
  const ContactParams& cp = model.contact;
  std::vector<Candidate> cands;
  for (std::size_t ci = 0; ci < model.contacts.size(); ++ci) {
    const int i = static_cast<int>(ci);
    Candidate c{i, MatX(), detail::contact_position(kin, i),
                detail::contact_velocity(kin, i), 0.0, 0.0, false, false};
    c.depth = opts.ground_height - c.pos.y();
    if (c.depth > 0.0) {
      c.n0 = cp.kn * c.depth - cp.dn * c.vel.y();
      if (c.n0 > 0.0) {
        c.active = true;
        c.jac = detail::contact_jacobian(kin, i);
        const double vt = std::hypot(c.vel.x(), c.vel.z());
        c.sliding = cp.kt * vt > cp.mu * c.n0;
      }
    }
    cands.push_back(std::move(c));
  }

  const auto free = free_coordinates(model, opts.locked);
  VecX vnew = VecX::Zero(n);
  std::vector<Vec3> applied(cands.size(), Vec3::Zero());
  const Vec3 up = Vec3::UnitY();
  const Mat3 tangent_proj = Mat3::Identity() - up * up.transpose();
  for (int iter = 0; iter <= static_cast<int>(cands.size()) + 1; ++iter) {
    MatX a = a_base;
    VecX rhs = rhs_base;
    for (const auto& c : cands) {
      if (!c.active) continue;
      const Eigen::RowVectorXd jn = c.jac.row(1);
      const double n_explicit = cp.kn * (c.depth - 0.5 * dt * c.vel.y());
      rhs.noalias() += dt * n_explicit * jn.transpose();
      a.noalias() += dt * (0.5 * cp.kn * dt + cp.dn) * jn.transpose() * jn;
      if (c.sliding) {
        const Vec3 vt(c.vel.x(), 0.0, c.vel.z());
        const Vec3 ft = -cp.mu * c.n0 * vt / vt.norm();
        rhs.noalias() += dt * c.jac.transpose() * ft;
      } else {
        const MatX jt = tangent_proj * c.jac;
        a.noalias() += dt * cp.kt * jt.transpose() * jt;
      }
    }
    const VecX sub = detail::solve_spd(detail::select(a, free),
                                       detail::select(rhs, free), "step");
    vnew.setZero();
    for (std::size_t k = 0; k < free.size(); ++k) vnew[free[k]] = sub[k];

    bool changed = false;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      auto& c = cands[k];
      applied[k].setZero();
      if (!c.active) continue;
      const Vec3 vplus = c.jac * vnew;
      const double normal = cp.kn * (c.depth - 0.5 * dt * (c.vel.y() + vplus.y())) -
                            cp.dn * vplus.y();
      if (normal < 0.0) {
        c.active = false;
        changed = true;
        continue;
      }
      Vec3 ft;
      if (c.sliding) {
        const Vec3 vt(c.vel.x(), 0.0, c.vel.z());
        ft = -cp.mu * c.n0 * vt / vt.norm();
      } else {
        ft = -cp.kt * (tangent_proj * vplus);
        if (ft.norm() > cp.mu * normal * (1.0 + 1e-9) + 1e-12 &&
            std::hypot(c.vel.x(), c.vel.z()) > 0.0) {
          c.sliding = true;
          changed = true;
        }
      }
      applied[k] = normal * up + ft;
    }
    if (!changed) break;
  }

  StepResult out;
  HybridState& next = out.state;
  next = state;
  const VecX vmid = 0.5 * (v + vnew);
  if (!model.fixed_base) {
    next.base = state.base * exp_se3(Twist(Vec6(vmid.head<6>())), dt);
    // Re-orthonormalize against round-off accumulation.
    Eigen::JacobiSVD<Mat3> svd(next.base.rotation,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
    next.base.rotation = svd.matrixU() * svd.matrixV().transpose();
  }
  next.q_rigid = state.q_rigid + dt * vmid.segment(6, model.rigid_dof());
  if (model.rod && ns > 0) {
    VecX q = state.rod.strain_vector();
    for (int k = 0; k < ns; ++k) q[sidx[k]] += dt * vmid[so + k];
    next.rod.set_strain_vector(q);
  }
  set_generalized_velocity(model, next, vnew);

  const bool base_free =
      !model.fixed_base &&
      (opts.locked.empty() ||
       std::none_of(opts.locked.begin(), opts.locked.begin() + 6,
                    [](bool x) { return x; }));
  if (opts.momentum_projection && base_free && next.allFinite()) {
    Vec3 external = model.total_mass() * model.gravity +
                    state.base.rotation * tau.base.tail<3>();
    for (const auto& f : applied) external += f;
    for (const auto& pl : opts.point_loads) external += pl.second;
    const Vec3 target = momentum(model, state).tail<3>() + dt * external;
    const Vec3 actual = momentum(model, next).tail<3>();
    next.base_velocity.linear() +=
        next.base.rotation.transpose() * (target - actual) / model.total_mass();
  }

  if (!next.allFinite()) {
    std::ostringstream os;
    os << "step: non-finite state (base p=" << state.base.position.transpose()
       << ", q_R=" << state.q_rigid.transpose() << ")";
    throw SimulationDiverged(os.str());
  }

  for (std::size_t k = 0; k < cands.size(); ++k) {
    ContactForce c;
    c.index = cands[k].index;
    c.name = model.contacts[k].name;
    c.position = cands[k].pos;
    c.velocity = cands[k].vel;
    c.penetration = cands[k].depth;
    c.normal = applied[k].y();
    c.tangential = Vec3(applied[k].x(), 0.0, applied[k].z());
    c.active = cands[k].active && c.normal > 0.0;
    out.contacts.push_back(c);
  }
  return out;
}

}  // namespace hybridlink
