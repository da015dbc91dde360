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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "hybridlink/control.hpp"
#include "hybridlink/hybrid_dynamics.hpp"
#include "test_support.hpp"

namespace hybridlink {
namespace {

using testing::floating_test_model;
using testing::perturb_coordinate;
using testing::random_state;

std::vector<HybridModel> all_models() {
  return {floating_test_model(), testing::toy_model(), testing::humanoid_model()};
}

HybridModel without_damping(HybridModel m) {
  if (m.rod) m.rod = m.rod->scaled(1.0, 0.0);
  return m;
}

TEST(MassMatrix, SymmetricPositiveDefiniteAndMatchesKineticEnergy) {
  std::mt19937_64 g(41);
  for (const HybridModel& m : all_models()) {
    for (int trial = 0; trial < 10; ++trial) {
      const HybridState s = random_state(m, g);
      const MatX mm = mass_matrix(m, s);
      ASSERT_EQ(mm.rows(), m.dof());
      EXPECT_LT((mm - mm.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      const auto free = free_coordinates(m, {});
      MatX sub(free.size(), free.size());
      for (std::size_t r = 0; r < free.size(); ++r)
        for (std::size_t c = 0; c < free.size(); ++c) sub(r, c) = mm(free[r], free[c]);
      Eigen::SelfAdjointEigenSolver<MatX> es(sub);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << m.name;
      const VecX v = generalized_velocity(m, s);
      EXPECT_NEAR(0.5 * v.dot(mm * v), kinetic_energy(m, s),
                  1e-10 * std::max(1.0, kinetic_energy(m, s)));
    }
  }
}

TEST(Dynamics, InverseForwardRoundTrip) {
  std::mt19937_64 g(42);
  for (const HybridModel& m : all_models()) {
    for (int trial = 0; trial < 10; ++trial) {
      const HybridState s = random_state(m, g);
      VecX qdd = testing::random_vecx(g, m.dof());
      if (m.fixed_base) qdd.head<6>().setZero();
      const GeneralizedForce tau = inverse_dynamics(m, s, qdd);
      const VecX back = forward_dynamics(m, s, tau);
      EXPECT_LT((back - qdd).norm(), 1e-8 * std::max(1.0, qdd.norm())) << m.name;
    }
  }
}

TEST(Dynamics, GravityBiasIsPotentialGradient) {
  std::mt19937_64 g(43);
  for (const HybridModel& m : all_models()) {
    HybridState s = random_state(m, g);
    set_generalized_velocity(m, s, VecX::Zero(m.dof()));
    const VecX b = bias_vector(m, s);
    const double h = 1e-6;
    for (int k = m.fixed_base ? 6 : 0; k < m.dof(); ++k) {
      const double fd = (potential_energy(m, perturb_coordinate(m, s, k, h)) -
                         potential_energy(m, perturb_coordinate(m, s, k, -h))) /
                        (2 * h);
      EXPECT_NEAR(b[k], fd, 1e-6 * std::max(1.0, std::abs(fd))) << m.name << " coord " << k;
    }
  }
}

TEST(Dynamics, ContactJacobianMatchesFiniteDifferences) {
  std::mt19937_64 g(44);
  for (const HybridModel& m : {floating_test_model(), testing::humanoid_model()}) {
    const HybridState s = random_state(m, g);
    const auto kin = detail::evaluate(m, s, {true, false});
    const VecX v = generalized_velocity(m, s);
    for (int ci = 0; ci < static_cast<int>(m.contacts.size()); ++ci) {
      const MatX j = detail::contact_jacobian(kin, ci);
      EXPECT_LT((j * v - detail::contact_velocity(kin, ci)).norm(), 1e-10);
      const double h = 1e-6;
      for (int k = 0; k < m.dof(); ++k) {
        const auto kp = detail::evaluate(m, perturb_coordinate(m, s, k, h), {false, false});
        const auto km = detail::evaluate(m, perturb_coordinate(m, s, k, -h), {false, false});
        const Vec3 fd = (detail::contact_position(kp, ci) - detail::contact_position(km, ci)) /
                        (2 * h);
        EXPECT_LT((fd - j.col(k)).norm(), 1e-5 * std::max(1.0, fd.norm()))
            << m.name << " contact " << ci << " coord " << k;
      }
    }
  }
}

TEST(Dynamics, Rk4ConservesEnergyAndMomentum) {
  // An independent integrator on forward_dynamics: any inconsistency between
  // the mass matrix and the velocity-product terms shows up as energy drift.
  // The rod is stiff, so the step is small.
  std::mt19937_64 g(45);
  HybridModel m = without_damping(floating_test_model());
  m.gravity.setZero();
  HybridState s = random_state(m, g, 0.3);
  const double e0 = total_energy(m, s);
  const Vec6 h0 = momentum(m, s);
  for (int i = 0; i < 1000; ++i) s = testing::rk4_step(m, s, 5e-5);
  EXPECT_NEAR(total_energy(m, s), e0, 1e-5 * e0);
  EXPECT_LT((momentum(m, s) - h0).norm(), 1e-6 * std::max(1.0, h0.norm()));
}

TEST(Dynamics, Rk4ConservesEnergyUnderGravity) {
  std::mt19937_64 g(46);
  for (HybridModel m : {floating_test_model(), testing::toy_model()}) {
    m = without_damping(m);
    HybridState s = random_state(m, g, 0.05);
    const double e0 = total_energy(m, s);
    for (int i = 0; i < 1000; ++i) s = testing::rk4_step(m, s, 5e-5);
    EXPECT_NEAR(total_energy(m, s), e0, 1e-5 * std::max(1.0, std::abs(e0))) << m.name;
  }
}

TEST(Dynamics, FixedBaseHasNoBaseAcceleration) {
  std::mt19937_64 g(47);
  const HybridModel m = testing::toy_model();
  const HybridState s = random_state(m, g);
  const VecX qdd = forward_dynamics(m, s, GeneralizedForce::zero(m));
  EXPECT_TRUE(qdd.head<6>().isZero(0.0));
}

// Rod at rest strain; base and joints moving, so the rod is excited only
// through inertial coupling.
HybridState coupled_motion_state(const HybridModel& m, std::mt19937_64& g) {
  HybridState s = random_state(m, g, 0.0);
  VecX v = generalized_velocity(m, s);
  v.tail(m.dof() - m.strain_offset()).setZero();
  set_generalized_velocity(m, s, v);
  return s;
}

TEST(Step, ZeroGravityConservesEnergyAndMomentum) {
  std::mt19937_64 g(48);
  for (HybridModel m : {floating_test_model(), testing::humanoid_model()}) {
    m = without_damping(m);
    m.gravity.setZero();
    HybridState s = coupled_motion_state(m, g);
    const double e0 = total_energy(m, s);
    const Vec6 h0 = momentum(m, s);
    StepOptions opts;
    opts.ground_height = -100.0;
    for (int i = 0; i < 600; ++i) {
      s = step(m, s, GeneralizedForce::zero(m), 1.0 / 1200, opts).state;
    }
    EXPECT_NEAR(total_energy(m, s), e0, 5e-3 * e0) << m.name;
    EXPECT_LT((momentum(m, s).tail<3>() - h0.tail<3>()).norm(), 1e-8) << m.name;
  }
}

TEST(Step, DampedRodSettlesFromStrainOffset) {
  // Axial and shear modes are far above the step rate; damping must keep
  // them bounded rather than pumping energy in.
  const HybridModel m = [] {
    HybridModel h = testing::humanoid_model();
    h.gravity.setZero();
    return h;
  }();
  HybridState s = HybridState::rest(m);
  s.base = m.rest_base;
  VecX q = s.rod.strain_vector();
  q[3] += 0.01;
  q[10] += 0.01;
  s.rod.set_strain_vector(q);
  const double e0 = total_energy(m, s);
  StepOptions opts;
  opts.ground_height = -100.0;
  double late_max = 0.0;
  for (int i = 0; i < 1200; ++i) {
    s = step(m, s, GeneralizedForce::zero(m), 1.0 / 1200, opts).state;
    if (i >= 600) late_max = std::max(late_max, total_energy(m, s));
  }
  EXPECT_LT(late_max, 1e-3 * e0);
}

TEST(Step, FreeFallFollowsParabola) {
  std::mt19937_64 g(49);
  const HybridModel m = floating_test_model();
  HybridState s = random_state(m, g, 0.1);
  const Vec3 c0 = center_of_mass(m, s);
  const Vec3 v0 = momentum(m, s).tail<3>() / m.total_mass();
  StepOptions opts;
  opts.ground_height = -100.0;
  const double dt = 1.0 / 1200;
  const int n = 600;
  for (int i = 0; i < n; ++i) s = step(m, s, GeneralizedForce::zero(m), dt, opts).state;
  const double t = n * dt;
  const Vec3 expected = c0 + v0 * t + 0.5 * m.gravity * t * t;
  EXPECT_LT((center_of_mass(m, s) - expected).norm(), 1e-4);
}

TEST(Step, FixedBaseAndLockedCoordinatesStayPut) {
  std::mt19937_64 g(50);
  const HybridModel toy = testing::toy_model();
  HybridState s = random_state(toy, g);
  const Pose base = s.base;
  StepOptions opts;
  opts.locked.assign(toy.dof(), false);
  opts.locked[6] = true;  // shoulder
  s.dq_rigid[0] = 0.0;
  const double q0 = s.q_rigid[0];
  for (int i = 0; i < 50; ++i) s = step(toy, s, GeneralizedForce::zero(toy), 1e-3, opts).state;
  EXPECT_TRUE(s.base.matrix().isApprox(base.matrix(), 0.0));
  EXPECT_EQ(s.q_rigid[0], q0);
  EXPECT_EQ(s.dq_rigid[0], 0.0);
}

TEST(Step, RejectsBadArguments) {
  const HybridModel m = testing::toy_model();
  const HybridState s = HybridState::rest(m);
  EXPECT_THROW(step(m, s, GeneralizedForce::zero(m), 0.0), InvalidArgument);
  StepOptions opts;
  opts.locked.assign(3, false);
  EXPECT_THROW(step(m, s, GeneralizedForce::zero(m), 1e-3, opts), InvalidArgument);
  GeneralizedForce bad = GeneralizedForce::zero(m);
  bad.rigid = VecX::Zero(5);
  EXPECT_THROW(step(m, s, bad, 1e-3), InvalidArgument);
}

TEST(Step, NonFiniteForceDiverges) {
  const HybridModel m = floating_test_model();
  HybridState s = HybridState::rest(m);
  s.base = m.rest_base;
  GeneralizedForce tau = GeneralizedForce::zero(m);
  tau.rigid[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_ANY_THROW({
    try {
      step(m, s, tau, 1e-3);
    } catch (const SimulationDiverged&) {
      throw;
    } catch (const NumericalError&) {
      throw;
    }
  });
}

TEST(Step, HumanoidStandsUnderPdHold) {
  const HybridModel m = testing::humanoid_model();
  HybridState s = HybridState::rest(m);
  s.base = m.rest_base;
  const double dt = 1.0 / 1200;
  Vec3 grf = Vec3::Zero();
  int samples = 0;
  for (int i = 0; i < 1200; ++i) {
    GeneralizedForce tau = GeneralizedForce::zero(m);
    tau.rigid = pd_torque(m.control.gains, VecX::Zero(9), s.q_rigid, s.dq_rigid,
                          m.control.torque_limit).torque;
    tau.base = pelvis_stabilizer(s.base, s.base_velocity, m.control.stabilizer);
    StepResult r = step(m, s, tau, dt);
    s = r.state;
    if (i >= 960) {
      for (const auto& c : r.contacts) grf += c.force();
      ++samples;
    }
  }
  // The PD gains are soft, so the body sags; it must not collapse.
  EXPECT_GT(s.base.position.y(), 0.5 * m.rest_base.position.y());
  EXPECT_TRUE(s.allFinite());
  grf /= samples;
  EXPECT_GT(grf.y(), 0.5 * m.total_mass() * 9.81);
}

TEST(Contacts, PenaltyLaw) {
  const HybridModel m = floating_test_model();
  HybridState s = HybridState::rest(m);
  s.base = Pose::Translation(Vec3(0.0, 0.05, 0.0));
  s.base_velocity = Twist(0, 0, 0, 0.3, -0.2, 0.0);
  const auto forces = contact_forces(m, s);
  ASSERT_EQ(forces.size(), 2u);
  const auto& c = forces[1];  // base corner at y = -0.05
  EXPECT_NEAR(c.penetration, 0.05, 1e-12);
  EXPECT_NEAR(c.normal, m.contact.kn * 0.05 - m.contact.dn * c.velocity.y(), 1e-9);
  EXPECT_TRUE(c.active);
  // Friction opposes sliding and respects the Coulomb bound.
  EXPECT_LT(c.tangential.x(), 0.0);
  EXPECT_LE(c.tangential.norm(), m.contact.mu * c.normal + 1e-9);
  // A point above the ground carries no force.
  s.base = Pose::Translation(Vec3(0.0, 2.0, 0.0));
  for (const auto& f : contact_forces(m, s)) EXPECT_FALSE(f.active);
}

TEST(GeneralizedForce, VectorRoundTripRespectsActiveMask) {
  const HybridModel m = testing::humanoid_model();
  std::mt19937_64 g(51);
  const VecX v = testing::random_vecx(g, m.dof());
  const GeneralizedForce f = GeneralizedForce::from_vector(m, v);
  EXPECT_EQ(f.rod.size(), 36);
  EXPECT_EQ(f.to_vector(m), v);
  EXPECT_EQ(m.dof(), 33);
}

TEST(HybridState, VelocityRoundTrip) {
  const HybridModel m = floating_test_model();
  std::mt19937_64 g(52);
  HybridState s = HybridState::rest(m);
  const VecX v = testing::random_vecx(g, m.dof());
  set_generalized_velocity(m, s, v);
  EXPECT_EQ(generalized_velocity(m, s), v);
  EXPECT_THROW(set_generalized_velocity(m, s, VecX::Zero(3)), InvalidArgument);
}

TEST(RodBoundaryPoses, MatchStandaloneRodKinematics) {
  std::mt19937_64 g(53);
  const HybridModel m = testing::humanoid_model();
  const HybridState s = random_state(m, g);
  const auto poses = rod_boundary_poses(m, s);
  const SkeletonPose fk = skeleton_fk(m.skeleton, s.base, s.q_rigid, false);
  const RodFrames rf = rod_forward_kinematics(*m.rod, s.rod, *fk.socket);
  ASSERT_EQ(poses.size(), rf.boundary().size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_LT((poses[i].matrix() - rf.boundary()[i].matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

}  // namespace
}  // namespace hybridlink
