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

// SE(3) / se(3) primitives.
//
// Conventions used throughout the library:
//  * Six-vectors are ordered (angular, linear). A twist xi = (k, u) with
//    [xi x] = [[k]x u; 0 0].
//  * Velocities are body-frame twists, V = H^{-1} dH/dt.
//  * Ad(H) maps body twists of a child frame expressed in the child to the
//    parent: V_parent = Ad(H_parent_child) V_child.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <initializer_list>
#include <iterator>
#include <string>

#include "hybridlink/errors.hpp"

namespace hybridlink {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Below this rotation angle exp_se3 switches to its Taylor expansion.
inline constexpr double kSmallAngle = 1e-6;

inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

// A six-vector with (angular, linear) layout. Used for strains (k in rad/m,
// u dimensionless) and for spatial velocities (rad/s, m/s).
class Twist {
 public:
  Twist() : v_(Vec6::Zero()) {}
  explicit Twist(const Vec6& v) : v_(v) {}
  Twist(const Vec3& angular, const Vec3& linear) {
    v_ << angular, linear;
  }
  Twist(double kx, double ky, double kz, double ux, double uy, double uz) {
    v_ << kx, ky, kz, ux, uy, uz;
  }

  static Twist Zero() { return Twist(); }

  auto angular() { return v_.head<3>(); }
  auto angular() const { return v_.head<3>(); }
  auto linear() { return v_.tail<3>(); }
  auto linear() const { return v_.tail<3>(); }

  const Vec6& vector() const { return v_; }
  Vec6& vector() { return v_; }
  double operator[](int i) const { return v_[i]; }
  double& operator[](int i) { return v_[i]; }

  bool allFinite() const { return v_.allFinite(); }

  Twist operator+(const Twist& o) const { return Twist(Vec6(v_ + o.v_)); }
  Twist operator-(const Twist& o) const { return Twist(Vec6(v_ - o.v_)); }
  Twist operator*(double s) const { return Twist(Vec6(v_ * s)); }
  bool operator==(const Twist& o) const { return v_ == o.v_; }

 private:
  Vec6 v_;
};

// Base-link spatial velocity eta_0 shares the twist layout.
using SpatialVelocity = Twist;

// Rigid transform (R, p) in SE(3).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  Pose() = default;
  Pose(const Mat3& r, const Vec3& p) : rotation(r), position(p) {}

  static Pose Identity() { return Pose(); }
  static Pose Translation(const Vec3& p) { return Pose(Mat3::Identity(), p); }
  static Pose Rotation(const Mat3& r) { return Pose(r, Vec3::Zero()); }

  Pose operator*(const Pose& o) const {
    return Pose(rotation * o.rotation, rotation * o.position + position);
  }
  Vec3 operator*(const Vec3& point) const {
    return rotation * point + position;
  }
  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return Pose(rt, -rt * position);
  }
  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = position;
    return m;
  }
  bool allFinite() const {
    return rotation.allFinite() && position.allFinite();
  }
  // Orthonormality and handedness of the rotation block.
  bool isValid(double tol = 1e-10) const {
    if (!allFinite()) return false;
    if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs()
            .maxCoeff() > tol) {
      return false;
    }
    return std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

inline Mat3 rotation_about(const Vec3& unit_axis, double angle) {
  return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

// exp([w]x) for an arbitrary rotation vector.
inline Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = hat(w);
  const Mat3 k2 = k * k;
  if (theta > kSmallAngle) {
    const double t2 = theta * theta;
    return Mat3::Identity() + (std::sin(theta) / theta) * k +
           ((1.0 - std::cos(theta)) / t2) * k2;
  }
  return Mat3::Identity() + k + k2 / 2.0 + k2 * k / 6.0 + k2 * k2 / 24.0;
}

// Rotation vector of R; requires angle < pi - 1e-3.
inline Vec3 log_so3(const Mat3& r) {
  const Vec3 axis_sin = vee(r);  // sin(theta) * axis
  const double s = axis_sin.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (M_PI - theta < 1e-3) {
    throw IllConditioned("log_so3: rotation angle " + std::to_string(theta) +
                         " too close to pi");
  }
  if (theta < 1e-5) {
    // theta / sin(theta) = 1 + theta^2/6 + 7 theta^4/360
    const double t2 = theta * theta;
    return axis_sin * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  return axis_sin * (theta / s);
}

// exp(s [xi x]) in closed form (Rodrigues) with a 4th-order Taylor branch for
// |s k| <= kSmallAngle.
inline Pose exp_se3(const Twist& xi, double s) {
  if (!xi.allFinite() || !std::isfinite(s)) {
    throw InvalidArgument("exp_se3: non-finite input");
  }
  if (s < 0.0) {
    throw InvalidArgument("exp_se3: negative length");
  }
  const Vec3 w = xi.angular() * s;
  const Vec3 v = xi.linear() * s;
  const double theta = w.norm();
  const Mat3 k = hat(w);
  const Mat3 k2 = k * k;
  Mat3 r;
  Mat3 left_jacobian;
  if (theta > kSmallAngle) {
    const double t2 = theta * theta;
    const double sn = std::sin(theta);
    const double cs = std::cos(theta);
    r = Mat3::Identity() + (sn / theta) * k + ((1.0 - cs) / t2) * k2;
    left_jacobian = Mat3::Identity() + ((1.0 - cs) / t2) * k +
                    ((theta - sn) / (t2 * theta)) * k2;
  } else {
    const Mat3 k3 = k2 * k;
    const Mat3 k4 = k2 * k2;
    r = Mat3::Identity() + k + k2 / 2.0 + k3 / 6.0 + k4 / 24.0;
    left_jacobian = Mat3::Identity() + k / 2.0 + k2 / 6.0 + k3 / 24.0 +
                    k4 / 120.0;
  }
  return Pose(r, left_jacobian * v);
}

// Inverse of exp_se3(., 1). Throws IllConditioned within 1e-3 of a half turn.
inline Twist log_se3(const Pose& h) {
  if (!h.allFinite()) throw InvalidArgument("log_se3: non-finite pose");
  const Vec3 w = log_so3(h.rotation);
  const double theta = w.norm();
  const Mat3 k = hat(w);
  double coeff;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    coeff = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    coeff = (1.0 - theta * std::sin(theta) /
                       (2.0 * (1.0 - std::cos(theta)))) /
            (theta * theta);
  }
  const Mat3 inv_left = Mat3::Identity() - 0.5 * k + coeff * k * k;
  return Twist(w, inv_left * h.position);
}

// Ad(H) = [[R, 0], [[p]x R, R]].
inline Mat6 adjoint(const Pose& h) {
  if (!h.allFinite()) throw InvalidArgument("adjoint: non-finite pose");
  Mat6 a = Mat6::Zero();
  a.topLeftCorner<3, 3>() = h.rotation;
  a.bottomRightCorner<3, 3>() = h.rotation;
  a.bottomLeftCorner<3, 3>() = hat(h.position) * h.rotation;
  return a;
}

// Ad(H^{-1}) without forming the inverse pose.
inline Mat6 adjoint_inverse(const Pose& h) {
  const Mat3 rt = h.rotation.transpose();
  Mat6 a = Mat6::Zero();
  a.topLeftCorner<3, 3>() = rt;
  a.bottomRightCorner<3, 3>() = rt;
  a.bottomLeftCorner<3, 3>() = -rt * hat(h.position);
  return a;
}

// Lie bracket matrix ad_V = [[w]x, 0; [v]x, [w]x].
inline Mat6 ad(const Vec6& v) {
  Mat6 a = Mat6::Zero();
  const Mat3 w = hat(v.head<3>());
  a.topLeftCorner<3, 3>() = w;
  a.bottomRightCorner<3, 3>() = w;
  a.bottomLeftCorner<3, 3>() = hat(v.tail<3>());
  return a;
}

// ad_X y without building the matrix.
inline Vec6 ad_apply(const Vec6& x, const Vec6& y) {
  Vec6 out;
  out.head<3>() = x.head<3>().cross(y.head<3>());
  out.tail<3>() = x.tail<3>().cross(y.head<3>()) +
                  x.head<3>().cross(y.tail<3>());
  return out;
}

namespace detail {

// Number of series terms so that |ad_X|^n / (n+1)! falls below 1e-18.
inline int tangent_series_terms(const Vec6& x) {
  const double a = 2.0 * (x.head<3>().norm() + x.tail<3>().norm()) + 1e-300;
  double term = 1.0;
  int n = 0;
  while (n < 80) {
    ++n;
    term *= a / static_cast<double>(n + 1);
    if (term < 1e-18) break;
  }
  return n + 1;
}

// Coefficients c1..c4 with tangent_map(X) = I - c1 ad + c2 ad^2 - c3 ad^3
// + c4 ad^4, which is exact because ad_X^5 = -2 th^2 ad_X^3 - th^4 ad_X,
// th = |angular part of X|. Small angles use the Taylor expansion.
inline std::array<double, 4> tangent_coefficients(double th) {
  const double t2 = th * th;
  if (th < 0.5) {
    auto poly = [t2](std::initializer_list<double> c) {
      double r = 0.0;
      for (auto it = std::rbegin(c); it != std::rend(c); ++it) r = r * t2 + *it;
      return r;
    };
    return {poly({1.0 / 2, 0.0, -1.0 / 720, 1.0 / 20160, -1.0 / 1209600,
                  1.0 / 119750400, -1.0 / 17435658240.0}),
            poly({1.0 / 6, 0.0, -1.0 / 5040, 1.0 / 181440, -1.0 / 13305600,
                  1.0 / 1556755200, -1.0 / 261534873600.0}),
            poly({1.0 / 24, -1.0 / 360, 1.0 / 13440, -1.0 / 907200,
                  1.0 / 95800320, -1.0 / 14529715200.0, 1.0 / 2988969984000.0}),
            poly({1.0 / 120, -1.0 / 2520, 1.0 / 120960, -1.0 / 9979200,
                  1.0 / 1245404160, -1.0 / 217945728000.0,
                  1.0 / 50812489728000.0})};
  }
  const double s = std::sin(th), c = std::cos(th);
  const double t3 = t2 * th, t4 = t2 * t2, t5 = t4 * th;
  return {(4.0 - 4.0 * c - th * s) / (2.0 * t2),
          (4.0 * th - 5.0 * s + th * c) / (2.0 * t3),
          (2.0 - 2.0 * c - th * s) / (2.0 * t4),
          (2.0 * th - 3.0 * s + th * c) / (2.0 * t5)};
}

}  // namespace detail

// Right-trivialized tangent of the exponential: for g(t) = exp([X(t) x]),
// g^{-1} dg/dt = tangent_map(X) dX/dt, with
// tangent_map(X) = sum_k (-1)^k / (k+1)! ad_X^k.
inline Mat6 tangent_map(const Vec6& x) {
  const auto c = detail::tangent_coefficients(x.head<3>().norm());
  const Mat6 a = ad(x);
  const Mat6 a2 = a * a;
  const Mat6 a3 = a2 * a;
  Mat6 t = -c[0] * a + c[1] * a2 - c[2] * a3 + c[3] * (a2 * a2);
  t.diagonal().array() += 1.0;
  return t;
}

// tangent_map(X) v evaluated with vector recursions.
inline Vec6 tangent_apply(const Vec6& x, const Vec6& v) {
  const auto c = detail::tangent_coefficients(x.head<3>().norm());
  const Vec6 w1 = ad_apply(x, v);
  const Vec6 w2 = ad_apply(x, w1);
  const Vec6 w3 = ad_apply(x, w2);
  const Vec6 w4 = ad_apply(x, w3);
  return v - c[0] * w1 + c[1] * w2 - c[2] * w3 + c[3] * w4;
}

// Directional derivative d/de [tangent_map(X + e Y)] v at e = 0.
inline Vec6 tangent_derivative_apply(const Vec6& x, const Vec6& y,
                                     const Vec6& v) {
  const int n = detail::tangent_series_terms(x) + 1;
  Vec6 w = v;               // ad_X^k v
  Vec6 z = Vec6::Zero();    // d/de ad_{X+eY}^k v
  Vec6 sum = Vec6::Zero();
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    z = ad_apply(y, w) + ad_apply(x, z);
    w = ad_apply(x, w);
    fact *= static_cast<double>(k + 1);
    sum += (((k % 2) ? -1.0 : 1.0) / fact) * z;
  }
  return sum;
}

}  // namespace hybridlink
