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

// Piece-wise constant strain (PCS) rod.
//
// The rod is cut into N segments; segment i spans arclength
// [L_{i-1}, L_i) and carries one constant strain twist xi_i = (k_i, u_i).
// Cross-section poses follow H(s) = H_{i-1} exp((s - L_{i-1}) [xi_i x]).
//
// Stiffness and damping blocks are length-integrated: the generalized force
// conjugate to xi_i is K_i (xi_eq,i - xi_i) - D_i dxi_i, so splitting a
// segment in two halves its blocks.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridlink/errors.hpp"
#include "hybridlink/liegroup.hpp"

namespace hybridlink {

struct SegmentSpec {
  double length = 0.0;                        // m
  double linear_density = 0.0;                // kg/m
  Mat3 rotational_inertia_density = Mat3::Zero();  // kg m (per unit length)
  Twist rest_strain = Twist(0, 0, 0, 1, 0, 0);
  Mat6 stiffness = Mat6::Zero();
  Mat6 damping = Mat6::Zero();
  // Strain components that are generalized coordinates. Inactive components
  // stay at their rest value.
  std::array<bool, 6> active = {true, true, true, true, true, true};

  int active_count() const {
    int n = 0;
    for (bool a : active) n += a ? 1 : 0;
    return n;
  }
};

struct RodSpec {
  std::vector<SegmentSpec> segments;
  Pose attachment;  // rod root in the socket frame
  // Optional full 6N x 6N matrices replacing the block-diagonal default.
  std::optional<MatX> coupled_stiffness;
  std::optional<MatX> coupled_damping;

  int segment_count() const { return static_cast<int>(segments.size()); }
  int strain_dim() const { return 6 * segment_count(); }

  // L_0 = 0 < L_1 < ... < L_N.
  std::vector<double> boundaries() const {
    std::vector<double> b(segments.size() + 1, 0.0);
    for (std::size_t i = 0; i < segments.size(); ++i) {
      b[i + 1] = b[i] + segments[i].length;
    }
    return b;
  }
  double total_length() const { return boundaries().back(); }

  MatX stiffness_matrix() const {
    if (coupled_stiffness) return *coupled_stiffness;
    MatX k = MatX::Zero(strain_dim(), strain_dim());
    for (int i = 0; i < segment_count(); ++i) {
      k.block<6, 6>(6 * i, 6 * i) = segments[i].stiffness;
    }
    return k;
  }
  MatX damping_matrix() const {
    if (coupled_damping) return *coupled_damping;
    MatX d = MatX::Zero(strain_dim(), strain_dim());
    for (int i = 0; i < segment_count(); ++i) {
      d.block<6, 6>(6 * i, 6 * i) = segments[i].damping;
    }
    return d;
  }
  VecX rest_vector() const {
    VecX q(strain_dim());
    for (int i = 0; i < segment_count(); ++i) {
      q.segment<6>(6 * i) = segments[i].rest_strain.vector();
    }
    return q;
  }
  // Indices into the 6N strain vector that are generalized coordinates.
  std::vector<int> active_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < segment_count(); ++i) {
      for (int c = 0; c < 6; ++c) {
        if (segments[i].active[c]) idx.push_back(6 * i + c);
      }
    }
    return idx;
  }
  int active_dim() const { return static_cast<int>(active_indices().size()); }

  // Copy with K scaled by k_scale and D by d_scale.
  RodSpec scaled(double k_scale, double d_scale = 1.0) const {
    RodSpec out = *this;
    for (auto& seg : out.segments) {
      seg.stiffness *= k_scale;
      seg.damping *= d_scale;
    }
    if (out.coupled_stiffness) *out.coupled_stiffness *= k_scale;
    if (out.coupled_damping) *out.coupled_damping *= d_scale;
    return out;
  }

  void validate() const;
};

namespace detail {

inline bool is_symmetric_psd(const MatX& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (m + m.transpose()),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

}  // namespace detail

inline void RodSpec::validate() const {
  if (segments.empty()) throw ModelError("rod: at least one segment required");
  if (!attachment.isValid(1e-8)) throw ModelError("rod: invalid attachment");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const std::string where = "rod segment " + std::to_string(i) + ": ";
    if (!(seg.length > 0.0)) throw ModelError(where + "length must be > 0");
    if (seg.linear_density < 0.0) {
      throw ModelError(where + "negative linear density");
    }
    if (!detail::is_symmetric_psd(seg.rotational_inertia_density)) {
      throw ModelError(where + "rotational inertia density not symmetric PSD");
    }
    if (!detail::is_symmetric_psd(seg.stiffness)) {
      throw ModelError(where + "stiffness not symmetric PSD");
    }
    if (!detail::is_symmetric_psd(seg.damping)) {
      throw ModelError(where + "damping not symmetric PSD");
    }
    if (!(seg.rest_strain[3] > 0.0)) {
      throw ModelError(where + "rest strain must have positive axial stretch");
    }
    if (!seg.rest_strain.allFinite()) {
      throw ModelError(where + "non-finite rest strain");
    }
  }
  const int n = strain_dim();
  if (coupled_stiffness) {
    if (coupled_stiffness->rows() != n || !detail::is_symmetric_psd(*coupled_stiffness)) {
      throw ModelError("rod: coupled stiffness must be symmetric PSD 6N x 6N");
    }
  }
  if (coupled_damping) {
    if (coupled_damping->rows() != n || !detail::is_symmetric_psd(*coupled_damping)) {
      throw ModelError("rod: coupled damping must be symmetric PSD 6N x 6N");
    }
  }
}

struct RodState {
  std::vector<Twist> strains;
  std::vector<Twist> strain_rates;

  static RodState rest(const RodSpec& spec) {
    RodState st;
    for (const auto& seg : spec.segments) {
      st.strains.push_back(seg.rest_strain);
      st.strain_rates.push_back(Twist::Zero());
    }
    return st;
  }

  int segment_count() const { return static_cast<int>(strains.size()); }

  VecX strain_vector() const {
    VecX q(6 * strains.size());
    for (std::size_t i = 0; i < strains.size(); ++i) {
      q.segment<6>(6 * i) = strains[i].vector();
    }
    return q;
  }
  VecX rate_vector() const {
    VecX q(6 * strain_rates.size());
    for (std::size_t i = 0; i < strain_rates.size(); ++i) {
      q.segment<6>(6 * i) = strain_rates[i].vector();
    }
    return q;
  }
  void set_strain_vector(const VecX& q) {
    for (std::size_t i = 0; i < strains.size(); ++i) {
      strains[i] = Twist(Vec6(q.segment<6>(6 * i)));
    }
  }
  void set_rate_vector(const VecX& q) {
    for (std::size_t i = 0; i < strain_rates.size(); ++i) {
      strain_rates[i] = Twist(Vec6(q.segment<6>(6 * i)));
    }
  }
  bool allFinite() const {
    for (const auto& t : strains) if (!t.allFinite()) return false;
    for (const auto& t : strain_rates) if (!t.allFinite()) return false;
    return true;
  }
};

inline void check_dims(const RodSpec& spec, const RodState& state) {
  if (state.strains.size() != spec.segments.size() ||
      state.strain_rates.size() != spec.segments.size()) {
    throw InvalidArgument("rod state has " +
                          std::to_string(state.strains.size()) +
                          " segments, spec has " +
                          std::to_string(spec.segments.size()));
  }
}

// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline Quadrature gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    q.nodes[n - 1 - i] = x;
    q.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

struct SegmentLocation {
  int segment = 0;
  double offset = 0.0;  // s - L_{segment}
};

// Segment containing arclength s; s == L_N maps to the end of the last one.
inline SegmentLocation locate(const RodSpec& spec, double s) {
  const auto b = spec.boundaries();
  const double tol = 1e-12 * std::max(1.0, b.back());
  if (!(s >= -tol && s <= b.back() + tol)) {
    throw DomainError("arclength " + std::to_string(s) + " outside [0, " +
                      std::to_string(b.back()) + "]");
  }
  s = std::clamp(s, 0.0, b.back());
  const int n = spec.segment_count();
  for (int i = 0; i < n; ++i) {
    if (s < b[i + 1] || i == n - 1) {
      return {i, std::clamp(s - b[i], 0.0, spec.segments[i].length)};
    }
  }
  return {n - 1, spec.segments.back().length};
}

// Boundary poses H_0..H_N of a rod whose socket frame sits at `root`.
class RodFrames {
 public:
  RodFrames(const RodSpec& spec, std::vector<Pose> boundary,
            std::vector<Twist> strains)
      : spec_(&spec),
        boundary_(std::move(boundary)),
        strains_(std::move(strains)) {}

  const std::vector<Pose>& boundary() const { return boundary_; }
  const Pose& root() const { return boundary_.front(); }
  const Pose& tip() const { return boundary_.back(); }

  Pose pose_at(double s) const {
    const SegmentLocation loc = locate(*spec_, s);
    return boundary_[loc.segment] * exp_se3(strains_[loc.segment], loc.offset);
  }

 private:
  const RodSpec* spec_;
  std::vector<Pose> boundary_;
  std::vector<Twist> strains_;
};

inline RodFrames rod_forward_kinematics(const RodSpec& spec,
                                        const RodState& state,
                                        const Pose& root) {
  check_dims(spec, state);
  std::vector<Pose> b;
  b.reserve(spec.segments.size() + 1);
  b.push_back(root * spec.attachment);
  for (int i = 0; i < spec.segment_count(); ++i) {
    b.push_back(b.back() * exp_se3(state.strains[i], spec.segments[i].length));
  }
  return RodFrames(spec, std::move(b), state.strains);
}

// Body-frame Jacobian of the cross-section at s. `root_jacobian` (6 x m) maps
// the caller's velocity coordinates to the body twist of the socket frame;
// the result is 6 x (m + 6N), the extra columns being the strain rates of all
// segments in order.
inline MatX rod_point_jacobian(const RodSpec& spec, const RodState& state,
                               const MatX& root_jacobian, double s) {
  check_dims(spec, state);
  if (root_jacobian.rows() != 6) {
    throw InvalidArgument("rod_point_jacobian: root jacobian must have 6 rows");
  }
  const SegmentLocation loc = locate(spec, s);
  const int m = static_cast<int>(root_jacobian.cols());
  MatX j = MatX::Zero(6, m + spec.strain_dim());
  j.leftCols(m) = adjoint_inverse(spec.attachment) * root_jacobian;
  for (int i = 0; i <= loc.segment; ++i) {
    const double x =
        (i == loc.segment) ? loc.offset : spec.segments[i].length;
    const Vec6 xi = state.strains[i].vector();
    const Pose g = exp_se3(state.strains[i], x);
    j = (adjoint_inverse(g) * j).eval();
    j.block<6, 6>(0, m + 6 * i) += x * tangent_map(x * xi);
  }
  return j;
}

// Spatial inertia of the cross-sections in [0, length) expressed in the
// segment's root frame, by n-point Gauss-Legendre quadrature.
inline Mat6 segment_inertia(const SegmentSpec& seg, const Twist& xi,
                            int quadrature_points = 5) {
  Mat6 density = Mat6::Zero();
  density.topLeftCorner<3, 3>() = seg.rotational_inertia_density;
  density.bottomRightCorner<3, 3>() =
      Mat3::Identity() * seg.linear_density;
  const Quadrature q = gauss_legendre(quadrature_points);
  Mat6 out = Mat6::Zero();
  const double half = 0.5 * seg.length;
  for (int k = 0; k < quadrature_points; ++k) {
    const double x = half * (q.nodes[k] + 1.0);
    const Mat6 a = adjoint_inverse(exp_se3(xi, x));
    out += (half * q.weights[k]) * (a.transpose() * density * a);
  }
  return 0.5 * (out + out.transpose());
}

// tau_S = K (q_eq - q) - D dq over the full 6N strain vector.
inline VecX viscoelastic_force(const RodSpec& spec, const RodState& state) {
  check_dims(spec, state);
  const VecX dq = spec.rest_vector() - state.strain_vector();
  return spec.stiffness_matrix() * dq -
         spec.damping_matrix() * state.rate_vector();
}

inline double elastic_energy(const RodSpec& spec, const RodState& state) {
  check_dims(spec, state);
  const VecX dq = spec.rest_vector() - state.strain_vector();
  return std::max(0.0, 0.5 * dq.dot(spec.stiffness_matrix() * dq));
}

}  // namespace hybridlink
