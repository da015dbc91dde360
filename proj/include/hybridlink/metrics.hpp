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

// Gait energetics and ground-reaction statistics computed from recorded
// trajectories.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hybridlink/errors.hpp"
#include "hybridlink/liegroup.hpp"
#include "hybridlink/trajectory.hpp"
#include "json.hpp"

namespace hybridlink {

inline constexpr double kDefaultEfficiency = 0.8;
inline constexpr double kContactThreshold = 5.0;   // N
inline constexpr double kMinCotDistance = 0.1;     // m

// Sample spacing of the `t` column. Throws FormatError unless uniform.
inline double uniform_dt(const Trajectory& traj) {
  const VecX t = traj.column("t");
  if (t.size() < 2) throw FormatError("trajectory: need at least two samples");
  const double dt = (t[t.size() - 1] - t[0]) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) throw FormatError("trajectory: time is not increasing");
  for (Eigen::Index i = 1; i < t.size(); ++i) {
    if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt + 1e-12) {
      throw FormatError("trajectory: time samples are not uniform");
    }
  }
  return dt;
}

// Positive mechanical work of all joints: the integral of
// sum_j max(0, tau_j * dq_j), trapezoidal rule.
inline double joint_work(const Trajectory& traj) {
  const auto taus = traj.columns_with_prefix("tau_");
  if (taus.empty()) throw FormatError("trajectory: no torque columns");
  if (traj.size() < 2) return 0.0;
  const double dt = uniform_dt(traj);
  VecX power = VecX::Zero(static_cast<Eigen::Index>(traj.size()));
  for (const auto& name : taus) {
    const std::string joint = name.substr(4);
    const VecX tau = traj.column(name);
    const VecX dq = traj.column("dq_" + joint);
    power += tau.cwiseProduct(dq).cwiseMax(0.0);
  }
  const Eigen::Index n = power.size();
  return dt * (power.sum() - 0.5 * (power[0] + power[n - 1]));
}

inline double cost_of_transport(double work, double mass, double distance,
                                double efficiency = kDefaultEfficiency) {
  if (!(mass > 0.0)) throw InvalidArgument("cost_of_transport: mass must be positive");
  if (!(efficiency > 0.0)) throw InvalidArgument("cost_of_transport: efficiency must be positive");
  if (!(distance > kMinCotDistance)) {
    throw UndefinedMetric("cost of transport undefined: distance " + std::to_string(distance) +
                          " m is not above " + std::to_string(kMinCotDistance) + " m");
  }
  return work / (efficiency * mass * distance);
}

// Net forward (x) displacement of the base.
inline double forward_distance(const Trajectory& traj) {
  const VecX x = traj.column("base_px");
  if (x.size() == 0) return 0.0;
  return x[x.size() - 1] - x[0];
}

inline double cost_of_transport(const Trajectory& traj, double mass,
                                double efficiency = kDefaultEfficiency) {
  return cost_of_transport(joint_work(traj), mass, forward_distance(traj), efficiency);
}

struct ContactInterval {
  int first = 0;  // sample indices, inclusive
  int last = 0;
  double contact_time = 0.0;
  double time_to_peak = 0.0;
  double peak_force = 0.0;
  double avg_propulsion_late_stance = 0.0;
  double avg_braking_late_stance = 0.0;
};

struct GrfStats {
  bool empty = true;
  std::vector<ContactInterval> intervals;
  // Averages over intervals.
  double contact_time = 0.0;
  double time_to_peak = 0.0;
  double peak_force = 0.0;
  double avg_propulsion_late_stance = 0.0;
  double avg_braking_late_stance = 0.0;
};

// Contact statistics from a vertical (fy) and forward (fx) force series.
// Each sample stands for [t - dt/2, t + dt/2]; a contact interval is a
// maximal run of samples with fy above the threshold. A flat peak is placed
// at the middle of its plateau. Late stance is the second half of each
// interval; propulsion is forward force (fx > 0), braking its opposite.
inline GrfStats grf_stats(const VecX& fx, const VecX& fy, double dt,
                          double threshold = kContactThreshold) {
  if (fx.size() != fy.size()) throw InvalidArgument("grf_stats: size mismatch");
  if (!(dt > 0.0)) throw InvalidArgument("grf_stats: dt must be positive");
  GrfStats out;
  const int n = static_cast<int>(fy.size());
  int i = 0;
  while (i < n) {
    if (!(fy[i] > threshold)) {
      ++i;
      continue;
    }
    ContactInterval c;
    c.first = i;
    while (i < n && fy[i] > threshold) ++i;
    c.last = i - 1;
    const int count = c.last - c.first + 1;
    c.contact_time = count * dt;

    c.peak_force = fy.segment(c.first, count).maxCoeff();
    int pk_first = -1, pk_last = -1;
    for (int k = c.first; k <= c.last; ++k) {
      if (fy[k] == c.peak_force) {
        if (pk_first < 0) pk_first = k;
        pk_last = k;
      }
    }
    c.time_to_peak = (0.5 * (pk_first + pk_last) - c.first + 0.5) * dt;

    // Sample k covers [k - first, k - first + 1] * dt from contact start;
    // it is late stance when its centre lies past the half.
    double prop = 0.0, brake = 0.0;
    int late = 0;
    for (int k = c.first; k <= c.last; ++k) {
      if (2.0 * (k - c.first) + 1.0 <= count) continue;
      prop += std::max(0.0, fx[k]);
      brake += std::max(0.0, -fx[k]);
      ++late;
    }
    if (late > 0) {
      c.avg_propulsion_late_stance = prop / late;
      c.avg_braking_late_stance = brake / late;
    }
    out.intervals.push_back(c);
  }
  out.empty = out.intervals.empty();
  if (!out.empty) {
    const double m = static_cast<double>(out.intervals.size());
    for (const auto& c : out.intervals) {
      out.contact_time += c.contact_time / m;
      out.time_to_peak += c.time_to_peak / m;
      out.peak_force += c.peak_force / m;
      out.avg_propulsion_late_stance += c.avg_propulsion_late_stance / m;
      out.avg_braking_late_stance += c.avg_braking_late_stance / m;
    }
  }
  return out;
}

// side is "left" or "right".
inline GrfStats grf_stats(const Trajectory& traj, const std::string& side,
                          double threshold = kContactThreshold) {
  if (side != "left" && side != "right") {
    throw InvalidArgument("grf_stats: side must be 'left' or 'right'");
  }
  const VecX fx = traj.column("grf_" + side + "_x");
  const VecX fy = traj.column("grf_" + side + "_y");
  if (traj.size() < 2) return {};
  return grf_stats(fx, fy, uniform_dt(traj), threshold);
}

struct StrainSummary {
  std::vector<double> max_deviation;  // per segment, max |xi - xi_rest|
  double peak_elastic_energy = 0.0;   // J
  double mechanical_cost = 0.0;       // J/(kg m); NaN when distance is too short
  bool mechanical_cost_defined = false;
};

inline StrainSummary strain_summary(const Trajectory& traj) {
  StrainSummary out;
  if (!traj.has("elastic_energy")) throw FormatError("trajectory: missing column 'elastic_energy'");
  if (!traj.meta.count("rod_segments")) {
    out.mechanical_cost = std::nan("");
    return out;
  }
  const int ns = static_cast<int>(traj.meta_number("rod_segments"));
  const VecX rest = traj.meta_vector("rest_strain");
  if (rest.size() != 6 * ns) throw FormatError("trajectory: rest_strain has wrong length");
  out.max_deviation.assign(ns, 0.0);
  for (int i = 0; i < ns; ++i) {
    std::vector<int> cols;
    for (int k = 0; k < 6; ++k) {
      const int c = traj.column_index("xi" + std::to_string(i) + "_" + std::to_string(k));
      if (c < 0) throw FormatError("trajectory: missing strain columns of segment " + std::to_string(i));
      cols.push_back(c);
    }
    for (const auto& row : traj.rows) {
      double s = 0.0;
      for (int k = 0; k < 6; ++k) {
        const double d = row[cols[k]] - rest[6 * i + k];
        s += d * d;
      }
      out.max_deviation[i] = std::max(out.max_deviation[i], std::sqrt(s));
    }
  }
  const VecX e = traj.column("elastic_energy");
  out.peak_elastic_energy = e.size() ? e.maxCoeff() : 0.0;
  const double d = traj.size() ? forward_distance(traj) : 0.0;
  if (d > kMinCotDistance && traj.meta.count("total_mass")) {
    out.mechanical_cost = out.peak_elastic_energy / (traj.meta_number("total_mass") * d);
    out.mechanical_cost_defined = true;
  } else {
    out.mechanical_cost = std::nan("");
  }
  return out;
}

namespace detail {

inline nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline nlohmann::json grf_json(const GrfStats& g) {
  nlohmann::json j;
  j["empty"] = g.empty;
  j["intervals"] = static_cast<int>(g.intervals.size());
  j["contact_time"] = g.contact_time;
  j["time_to_peak"] = g.time_to_peak;
  j["peak_force"] = g.peak_force;
  j["avg_propulsion_late_stance"] = g.avg_propulsion_late_stance;
  j["avg_braking_late_stance"] = g.avg_braking_late_stance;
  return j;
}

}  // namespace detail

// All metrics of one trajectory. `mass` <= 0 takes the total_mass metadata.
inline nlohmann::json metrics_report(const Trajectory& traj, double mass = 0.0,
                                     double efficiency = kDefaultEfficiency) {
  if (traj.size() < 2) throw FormatError("trajectory: need at least two samples");
  if (!(mass > 0.0)) mass = traj.meta_number("total_mass");
  nlohmann::json j;
  if (traj.meta.count("model")) j["model"] = traj.meta.at("model");
  j["samples"] = traj.size();
  j["duration"] = traj.rows.back()[0] - traj.rows.front()[0];
  j["mass"] = mass;
  j["efficiency"] = efficiency;
  const double work = joint_work(traj);
  const double d = forward_distance(traj);
  j["joint_work"] = work;
  j["distance"] = d;
  try {
    j["cost_of_transport"] = cost_of_transport(work, mass, d, efficiency);
  } catch (const UndefinedMetric& e) {
    j["cost_of_transport"] = nullptr;
    j["cost_of_transport_note"] = e.what();
  }
  j["grf"]["left"] = detail::grf_json(grf_stats(traj, "left"));
  j["grf"]["right"] = detail::grf_json(grf_stats(traj, "right"));
  const StrainSummary s = strain_summary(traj);
  j["strain"]["max_deviation"] = s.max_deviation;
  j["strain"]["max_deviation_overall"] =
      s.max_deviation.empty() ? 0.0 : *std::max_element(s.max_deviation.begin(), s.max_deviation.end());
  j["strain"]["peak_elastic_energy"] = s.peak_elastic_energy;
  j["strain"]["mechanical_cost"] = detail::number_or_null(s.mechanical_cost);
  return j;
}

}  // namespace hybridlink
