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

#include <random>

#include "hybridlink/liegroup.hpp"
#include "test_support.hpp"

namespace hybridlink {
namespace {

using testing::matrix_exp;
using testing::random_pose;
using testing::random_vec3;
using testing::random_vec6;
using testing::twist_matrix;

// Brute-force alternating series, far more terms than needed.
Mat6 tangent_series(const Vec6& x) {
  const Mat6 a = ad(x);
  Mat6 p = Mat6::Identity(), s = Mat6::Identity();
  double fact = 1.0;
  for (int k = 1; k < 60; ++k) {
    p = p * a;
    fact *= k + 1;
    s += ((k % 2) ? -1.0 : 1.0) / fact * p;
  }
  return s;
}

TEST(HatVee, RoundTripAndCrossProduct) {
  std::mt19937_64 g(1);
  for (int i = 0; i < 20; ++i) {
    const Vec3 a = random_vec3(g), b = random_vec3(g);
    EXPECT_TRUE(vee(hat(a)).isApprox(a, 1e-15));
    EXPECT_TRUE((hat(a) * b).isApprox(a.cross(b), 1e-14));
    EXPECT_TRUE((hat(a) + hat(a).transpose()).isZero(0.0));
  }
}

TEST(ExpSO3, MatchesMatrixExponential) {
  std::mt19937_64 g(2);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = random_vec3(g, i % 5 == 0 ? 1e-8 : 1.0);
    Mat4 m = Mat4::Zero();
    m.topLeftCorner<3, 3>() = hat(w);
    const Mat3 ref = matrix_exp(m).topLeftCorner<3, 3>();
    EXPECT_LT((exp_so3(w) - ref).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(LogSO3, InvertsExpAwayFromHalfTurn) {
  std::mt19937_64 g(3);
  for (int i = 0; i < 200; ++i) {
    Vec3 w = random_vec3(g);
    if (w.norm() > 3.0) w *= 3.0 / w.norm();
    if (i % 7 == 0) w *= 1e-7;
    EXPECT_LT((log_so3(exp_so3(w)) - w).norm(), 1e-10) << w.transpose();
  }
  EXPECT_TRUE(log_so3(Mat3::Identity()).isZero(0.0));
}

TEST(LogSO3, HalfTurnIsIllConditioned) {
  const Mat3 r = exp_so3(Vec3(0.0, 0.0, M_PI - 1e-4));
  EXPECT_THROW(log_so3(r), IllConditioned);
  EXPECT_THROW(log_se3(Pose::Rotation(r)), IllConditioned);
  EXPECT_NO_THROW(log_so3(exp_so3(Vec3(0.0, 0.0, M_PI - 2e-3))));
}

TEST(ExpSE3, MatchesMatrixExponentialIncludingSmallAngles) {
  std::mt19937_64 g(4);
  for (int i = 0; i < 100; ++i) {
    Vec6 x = random_vec6(g);
    if (i % 4 == 0) x.head<3>() *= 1e-7;  // Taylor branch
    if (i % 4 == 1) x.head<3>() *= 3e-7 / std::max(x.head<3>().norm(), 1e-300);
    const double s = 0.3 + 0.1 * (i % 5);
    const Pose p = exp_se3(Twist(x), s);
    const Mat4 ref = matrix_exp(twist_matrix(s * x));
    EXPECT_LT((p.matrix() - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(p.isValid(1e-12));
  }
}

TEST(ExpSE3, ContinuousAcrossTaylorSwitch) {
  const Vec6 dir = (Vec6() << 0.3, -0.5, 0.8, 1.0, 0.2, -0.4).finished().normalized();
  const Pose a = exp_se3(Twist(Vec6(dir * (kSmallAngle * 0.999))), 1.0);
  const Pose b = exp_se3(Twist(Vec6(dir * (kSmallAngle * 1.001))), 1.0);
  EXPECT_LT((a.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ExpSE3, RejectsBadInput) {
  EXPECT_THROW(exp_se3(Twist(0, 0, 1, 1, 0, 0), -0.1), InvalidArgument);
  EXPECT_THROW(exp_se3(Twist(NAN, 0, 0, 0, 0, 0), 1.0), InvalidArgument);
  EXPECT_TRUE(exp_se3(Twist(1, 2, 3, 4, 5, 6), 0.0).matrix().isIdentity(0.0));
}

TEST(LogSE3, InvertsExp) {
  std::mt19937_64 g(5);
  for (int i = 0; i < 200; ++i) {
    Vec6 x = random_vec6(g);
    if (x.head<3>().norm() > 3.0) x.head<3>() *= 3.0 / x.head<3>().norm();
    if (i % 5 == 0) x.head<3>() *= 1e-6;
    EXPECT_LT((log_se3(exp_se3(Twist(x), 1.0)).vector() - x).norm(), 1e-9);
  }
}

TEST(ExpSE3, OneParameterSubgroup) {
  std::mt19937_64 g(6);
  for (int i = 0; i < 20; ++i) {
    const Twist x(random_vec6(g));
    const Pose ab = exp_se3(x, 0.3) * exp_se3(x, 0.45);
    EXPECT_LT((ab.matrix() - exp_se3(x, 0.75).matrix()).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Adjoint, HomomorphismAndInverse) {
  std::mt19937_64 g(7);
  for (int i = 0; i < 30; ++i) {
    const Pose a = random_pose(g), b = random_pose(g);
    EXPECT_TRUE((adjoint(a * b)).isApprox(adjoint(a) * adjoint(b), 1e-12));
    EXPECT_TRUE((adjoint(a) * adjoint_inverse(a)).isIdentity(1e-12));
    EXPECT_TRUE(adjoint_inverse(a).isApprox(adjoint(a.inverse()), 1e-12));
  }
}

TEST(Adjoint, ConjugatesTwistMatrices) {
  // H [x] H^-1 = [Ad(H) x]
  std::mt19937_64 g(8);
  for (int i = 0; i < 20; ++i) {
    const Pose h = random_pose(g);
    const Vec6 x = random_vec6(g);
    const Mat4 lhs = h.matrix() * twist_matrix(x) * h.inverse().matrix();
    EXPECT_LT((lhs - twist_matrix(adjoint(h) * x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Ad, LieBracketProperties) {
  std::mt19937_64 g(9);
  for (int i = 0; i < 20; ++i) {
    const Vec6 x = random_vec6(g), y = random_vec6(g), z = random_vec6(g);
    EXPECT_TRUE((ad(x) * y).isApprox(-(ad(y) * x), 1e-14));
    EXPECT_TRUE(ad_apply(x, y).isApprox(ad(x) * y, 1e-14));
    const Vec6 jacobi = ad(x) * (ad(y) * z) + ad(y) * (ad(z) * x) + ad(z) * (ad(x) * y);
    EXPECT_LT(jacobi.norm(), 1e-12);
    // Matrix commutator of twist matrices.
    const Mat4 c = twist_matrix(x) * twist_matrix(y) - twist_matrix(y) * twist_matrix(x);
    EXPECT_LT((c - twist_matrix(ad(x) * y)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(TangentMap, MatchesSeries) {
  std::mt19937_64 g(10);
  for (int i = 0; i < 300; ++i) {
    Vec6 x = random_vec6(g, std::pow(10.0, -(i % 6)));
    if (i % 3 == 0) x.head<3>() *= 0.5 / std::max(x.head<3>().norm(), 1e-300);
    if (i % 11 == 0) x.head<3>().setZero();
    EXPECT_LT((tangent_map(x) - tangent_series(x)).cwiseAbs().maxCoeff(), 1e-13);
    const Vec6 v = random_vec6(g);
    EXPECT_LT((tangent_apply(x, v) - tangent_series(x) * v).norm(), 1e-13);
  }
}

TEST(TangentMap, CoefficientsContinuousAtSeriesSwitch) {
  const auto a = detail::tangent_coefficients(0.5 - 1e-12);
  const auto b = detail::tangent_coefficients(0.5 + 1e-12);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * std::abs(a[i]));
}

TEST(TangentMap, DifferentiatesExponential) {
  // exp(X)^-1 d/de exp(X + e Y) = tangent_map(X) Y, by central differences.
  std::mt19937_64 g(11);
  for (int i = 0; i < 40; ++i) {
    const Vec6 x = random_vec6(g);
    const Vec6 y = random_vec6(g);
    const double h = 1e-6;
    const Pose base = exp_se3(Twist(x), 1.0);
    const Pose plus = exp_se3(Twist(Vec6(x + h * y)), 1.0);
    const Pose minus = exp_se3(Twist(Vec6(x - h * y)), 1.0);
    const Vec6 fd = (testing::relative_twist(base, plus) - testing::relative_twist(base, minus)) /
                    (2.0 * h);
    EXPECT_LT((fd - tangent_map(x) * y).norm(), 1e-7 * std::max(1.0, y.norm()));
  }
}

TEST(TangentMap, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 g(12);
  for (int i = 0; i < 40; ++i) {
    const Vec6 x = random_vec6(g, i % 2 ? 1.0 : 0.05);
    const Vec6 y = random_vec6(g), v = random_vec6(g);
    const double h = 1e-5;
    const Vec6 fd = (tangent_apply(x + h * y, v) - tangent_apply(x - h * y, v)) / (2.0 * h);
    const Vec6 an = tangent_derivative_apply(x, y, v);
    EXPECT_LT((fd - an).norm(), 1e-8 * std::max(1.0, an.norm()));
  }
}

TEST(TangentMap, IdentityAtZero) {
  EXPECT_TRUE(tangent_map(Vec6::Zero()).isIdentity(0.0));
  EXPECT_TRUE(tangent_derivative_apply(Vec6::Zero(), Vec6::Zero(), Vec6::Ones()).isZero(0.0));
}

TEST(Pose, InverseAndValidity) {
  std::mt19937_64 g(13);
  const Pose p = random_pose(g);
  EXPECT_TRUE((p * p.inverse()).matrix().isIdentity(1e-14));
  EXPECT_TRUE(p.isValid());
  Pose bad = p;
  bad.rotation(0, 0) += 1e-3;
  EXPECT_FALSE(bad.isValid());
  bad.rotation = -p.rotation;  // reflection
  EXPECT_FALSE(bad.isValid());
}

}  // namespace
}  // namespace hybridlink
