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

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "hybridlink/metrics.hpp"

namespace hybridlink {
namespace {

// One-joint trajectory sampled on [0, duration] with spacing dt.
Trajectory joint_fixture(double dt, double duration, const std::function<double(double)>& tau,
                         const std::function<double(double)>& dq) {
  Trajectory t;
  t.meta["version"] = "1";
  t.columns = {"t", "base_px", "tau_knee", "dq_knee"};
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int i = 0; i <= n; ++i) {
    const double s = i * dt;
    t.rows.push_back({s, 0.0, tau(s), dq(s)});
  }
  return t;
}

auto constant(double c) {
  return [c](double) { return c; };
}

TEST(JointWork, WorkedValues) {
  EXPECT_EQ(joint_work(joint_fixture(0.01, 1.0, constant(0.0), constant(2.0))), 0.0);
  EXPECT_NEAR(joint_work(joint_fixture(0.01, 1.0, constant(10.0), constant(2.0))), 20.0, 1e-12);
  EXPECT_EQ(joint_work(joint_fixture(0.01, 1.0, constant(-2.5), constant(2.0))), 0.0);
}

TEST(JointWork, SumsJointsAndRectifiesEachSeparately) {
  Trajectory t = joint_fixture(0.01, 1.0, constant(10.0), constant(2.0));
  t.columns.push_back("tau_hip");
  t.columns.push_back("dq_hip");
  for (auto& r : t.rows) {
    r.push_back(5.0);
    r.push_back(-1.0);
  }
  EXPECT_NEAR(joint_work(t), 20.0, 1e-12);
}

TEST(JointWork, StableUnderRefinement) {
  auto tau = [](double s) { return std::sin(s); };
  auto dq = [](double s) { return std::cos(s); };
  const double coarse = joint_work(joint_fixture(0.01, 2.0 * std::numbers::pi, tau, dq));
  const double fine = joint_work(joint_fixture(0.005, 2.0 * std::numbers::pi, tau, dq));
  // Exact value: integral of max(0, sin(2s)/2) over one period of s is 1.
  EXPECT_NEAR(fine, 1.0, 1e-3);
  EXPECT_LT(std::abs(fine - coarse) / fine, 1e-3);
}

TEST(JointWork, MissingColumnsAreFormatErrors) {
  Trajectory t = joint_fixture(0.01, 1.0, constant(1.0), constant(1.0));
  t.columns[3] = "dq_ankle";
  EXPECT_THROW(joint_work(t), FormatError);
  t.columns = {"t", "base_px", "x", "y"};
  EXPECT_THROW(joint_work(t), FormatError);
}

TEST(JointWork, RejectsNonUniformTime) {
  Trajectory t = joint_fixture(0.01, 1.0, constant(1.0), constant(1.0));
  t.rows[10][0] += 0.004;
  EXPECT_THROW(joint_work(t), FormatError);
}

// ---------------------------------------------------------------------------

TEST(CostOfTransport, FormulaAndScaling) {
  const double cot = cost_of_transport(100.0, 58.0, 1.0, 0.8);
  EXPECT_NEAR(cot, 100.0 / (0.8 * 58.0), 1e-15);
  EXPECT_NEAR(cot, 2.155, 5e-4);
  EXPECT_DOUBLE_EQ(cost_of_transport(100.0, 58.0, 2.0), 0.5 * cot);
  EXPECT_DOUBLE_EQ(cost_of_transport(100.0, 116.0, 1.0), 0.5 * cot);
  EXPECT_GT(cost_of_transport(1e-3, 58.0, 3.0), 0.0);
}

TEST(CostOfTransport, ShortDistanceIsUndefined) {
  EXPECT_THROW(cost_of_transport(100.0, 58.0, 0.1), UndefinedMetric);
  EXPECT_THROW(cost_of_transport(100.0, 58.0, -2.0), UndefinedMetric);
  EXPECT_THROW(cost_of_transport(100.0, 0.0, 1.0), InvalidArgument);
}

TEST(CostOfTransport, FromTrajectoryUsesForwardDisplacement) {
  Trajectory t = joint_fixture(0.01, 1.0, constant(10.0), constant(2.0));
  for (auto& r : t.rows) r[1] = 2.0 * r[0];  // 2 m over the run
  EXPECT_NEAR(forward_distance(t), 2.0, 1e-12);
  EXPECT_NEAR(cost_of_transport(t, 50.0), 20.0 / (0.8 * 50.0 * 2.0), 1e-12);
}

// ---------------------------------------------------------------------------

VecX square_pulse(int n, int first, int count, double level) {
  VecX f = VecX::Zero(n);
  f.segment(first, count).setConstant(level);
  return f;
}

TEST(GrfStats, SquarePulse) {
  const double dt = 0.01;
  const VecX fy = square_pulse(60, 10, 26, 500.0);
  const GrfStats g = grf_stats(VecX::Zero(60), fy, dt);
  ASSERT_FALSE(g.empty);
  ASSERT_EQ(g.intervals.size(), 1u);
  EXPECT_NEAR(g.contact_time, 0.26, 1e-12);
  EXPECT_NEAR(g.time_to_peak, 0.13, 1e-12);
  EXPECT_EQ(g.peak_force, 500.0);
}

TEST(GrfStats, ThresholdRobustOnSquarePulse) {
  const VecX fy = square_pulse(60, 10, 26, 500.0);
  const GrfStats ref = grf_stats(VecX::Zero(60), fy, 0.01);
  for (double th = 1.0; th <= 10.0; th += 0.5) {
    const GrfStats g = grf_stats(VecX::Zero(60), fy, 0.01, th);
    EXPECT_EQ(g.contact_time, ref.contact_time);
    EXPECT_EQ(g.time_to_peak, ref.time_to_peak);
  }
}

TEST(GrfStats, ZeroForcesAreEmpty) {
  const GrfStats g = grf_stats(VecX::Zero(40), VecX::Zero(40), 0.01);
  EXPECT_TRUE(g.empty);
  EXPECT_TRUE(g.intervals.empty());
  EXPECT_EQ(g.contact_time, 0.0);
  // Exactly at the threshold is not contact.
  EXPECT_TRUE(grf_stats(VecX::Zero(5), VecX::Constant(5, kContactThreshold), 0.01).empty);
}

TEST(GrfStats, TwoPulsesAreAveraged) {
  VecX fy = square_pulse(100, 5, 20, 400.0) + square_pulse(100, 50, 30, 600.0);
  // Late stance of the second pulse pushes forward, the first one brakes.
  VecX fx = VecX::Zero(100);
  fx.segment(15, 10).setConstant(-30.0);
  fx.segment(65, 15).setConstant(60.0);
  const GrfStats g = grf_stats(fx, fy, 0.01);
  ASSERT_EQ(g.intervals.size(), 2u);
  EXPECT_NEAR(g.intervals[0].contact_time, 0.20, 1e-12);
  EXPECT_NEAR(g.intervals[1].contact_time, 0.30, 1e-12);
  EXPECT_NEAR(g.contact_time, 0.25, 1e-12);
  EXPECT_NEAR(g.time_to_peak, 0.5 * (0.10 + 0.15), 1e-12);
  EXPECT_NEAR(g.peak_force, 500.0, 1e-12);
  EXPECT_NEAR(g.intervals[0].avg_braking_late_stance, 30.0, 1e-12);
  EXPECT_NEAR(g.intervals[0].avg_propulsion_late_stance, 0.0, 1e-12);
  EXPECT_NEAR(g.intervals[1].avg_propulsion_late_stance, 60.0, 1e-12);
  EXPECT_NEAR(g.avg_propulsion_late_stance, 30.0, 1e-12);
}

TEST(GrfStats, PeakAndLateStanceOfRamp) {
  // Rising ramp over 10 samples: peak on the last sample, late stance is the
  // last five samples.
  VecX fy = VecX::Zero(20), fx = VecX::Zero(20);
  for (int k = 0; k < 10; ++k) {
    fy[5 + k] = 100.0 * (k + 1);
    fx[5 + k] = k;
  }
  const GrfStats g = grf_stats(fx, fy, 0.01);
  ASSERT_EQ(g.intervals.size(), 1u);
  EXPECT_NEAR(g.time_to_peak, 0.095, 1e-12);
  EXPECT_NEAR(g.avg_propulsion_late_stance, (5 + 6 + 7 + 8 + 9) / 5.0, 1e-12);
}

TEST(GrfStats, ArgumentChecks) {
  EXPECT_THROW(grf_stats(VecX::Zero(3), VecX::Zero(4), 0.01), InvalidArgument);
  EXPECT_THROW(grf_stats(VecX::Zero(3), VecX::Zero(3), 0.0), InvalidArgument);
  Trajectory t = joint_fixture(0.01, 0.1, constant(0.0), constant(0.0));
  EXPECT_THROW(grf_stats(t, "middle"), InvalidArgument);
  EXPECT_THROW(grf_stats(t, "left"), FormatError);
}

// ---------------------------------------------------------------------------

// Two-segment rod trajectory with given per-sample deviation of strain
// component `k` on segment 1.
Trajectory strain_fixture(const std::vector<double>& dev, int k, const std::vector<double>& energy,
                          double distance) {
  Trajectory t;
  t.meta["version"] = "1";
  t.meta["rod_segments"] = "2";
  t.meta["total_mass"] = "58";
  t.meta["rest_strain"] = "0 0 0 1 0 0 0 0 0 1 0 0";
  t.columns = {"t", "base_px", "elastic_energy"};
  for (int s = 0; s < 2; ++s) {
    for (int c = 0; c < 6; ++c) t.columns.push_back("xi" + std::to_string(s) + "_" + std::to_string(c));
  }
  const int n = static_cast<int>(dev.size());
  for (int i = 0; i < n; ++i) {
    std::vector<double> row = {0.01 * i, distance * i / (n - 1), energy[i]};
    for (int s = 0; s < 2; ++s) {
      for (int c = 0; c < 6; ++c) row.push_back(c == 3 ? 1.0 : 0.0);
    }
    row[3 + 6 + k] += dev[i];
    t.rows.push_back(row);
  }
  return t;
}

TEST(StrainSummary, RestTrajectoryIsZero) {
  const StrainSummary s = strain_summary(strain_fixture({0, 0, 0}, 2, {0, 0, 0}, 1.0));
  ASSERT_EQ(s.max_deviation.size(), 2u);
  EXPECT_EQ(s.max_deviation[0], 0.0);
  EXPECT_EQ(s.max_deviation[1], 0.0);
  EXPECT_EQ(s.peak_elastic_energy, 0.0);
  EXPECT_TRUE(s.mechanical_cost_defined);
  EXPECT_EQ(s.mechanical_cost, 0.0);
}

TEST(StrainSummary, KnownDeflection) {
  // Bending deflection delta on a segment of stiffness k: energy k*delta^2/2.
  const double k = 12.6, delta = 0.2;
  const double e = 0.5 * k * delta * delta;
  const StrainSummary s =
      strain_summary(strain_fixture({0.0, -delta, 0.5 * delta}, 2, {0.0, e, 0.25 * e}, 1.5));
  EXPECT_EQ(s.max_deviation[0], 0.0);
  EXPECT_NEAR(s.max_deviation[1], delta, 1e-15);
  EXPECT_EQ(s.peak_elastic_energy, e);
  EXPECT_NEAR(s.mechanical_cost, e / (58.0 * 1.5), 1e-15);
}

TEST(StrainSummary, ShortDistanceAndMissingRod) {
  const StrainSummary s = strain_summary(strain_fixture({0, 0.1}, 0, {0, 1}, 0.05));
  EXPECT_FALSE(s.mechanical_cost_defined);
  EXPECT_TRUE(std::isnan(s.mechanical_cost));

  Trajectory rigid = joint_fixture(0.01, 0.1, constant(0.0), constant(0.0));
  rigid.columns.push_back("elastic_energy");
  for (auto& r : rigid.rows) r.push_back(0.0);
  EXPECT_TRUE(strain_summary(rigid).max_deviation.empty());
  EXPECT_THROW(strain_summary(joint_fixture(0.01, 0.1, constant(0.0), constant(0.0))),
               FormatError);
}

// ---------------------------------------------------------------------------

Trajectory full_fixture() {
  Trajectory t = strain_fixture(std::vector<double>(61, 0.0), 0, std::vector<double>(61, 0.0), 1.2);
  t.columns.insert(t.columns.end(), {"tau_knee", "dq_knee", "grf_left_x", "grf_left_y",
                                     "grf_right_x", "grf_right_y"});
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const bool right = i >= 10 && i < 36;
    t.rows[i].insert(t.rows[i].end(), {10.0, 2.0, 0.0, 0.0, 0.0, right ? 500.0 : 0.0});
  }
  return t;
}

TEST(MetricsReport, CollectsAllMetrics) {
  const Trajectory t = full_fixture();
  const nlohmann::json j = metrics_report(t);
  EXPECT_EQ(j["samples"], 61);
  EXPECT_NEAR(j["duration"].get<double>(), 0.6, 1e-12);
  EXPECT_EQ(j["mass"], 58.0);
  EXPECT_NEAR(j["joint_work"].get<double>(), 12.0, 1e-12);
  EXPECT_NEAR(j["distance"].get<double>(), 1.2, 1e-12);
  EXPECT_NEAR(j["cost_of_transport"].get<double>(), 12.0 / (0.8 * 58.0 * 1.2), 1e-12);
  EXPECT_TRUE(j["grf"]["left"]["empty"].get<bool>());
  EXPECT_NEAR(j["grf"]["right"]["contact_time"].get<double>(), 0.26, 1e-12);
  EXPECT_NEAR(j["grf"]["right"]["time_to_peak"].get<double>(), 0.13, 1e-12);
  EXPECT_EQ(j["strain"]["max_deviation_overall"], 0.0);

  // An explicit mass overrides the metadata.
  EXPECT_EQ(metrics_report(t, 70.0)["mass"], 70.0);
}

TEST(MetricsReport, UndefinedCostIsNullWithNote) {
  Trajectory t = full_fixture();
  for (auto& r : t.rows) r[1] = 0.0;
  const nlohmann::json j = metrics_report(t);
  EXPECT_TRUE(j["cost_of_transport"].is_null());
  EXPECT_TRUE(j.contains("cost_of_transport_note"));
  EXPECT_TRUE(j["strain"]["mechanical_cost"].is_null());
}

TEST(MetricsReport, SurvivesFileRoundTrip) {
  const Trajectory t = full_fixture();
  std::stringstream ss;
  write_trajectory(t, ss);
  const Trajectory back = read_trajectory(ss, "fixture");
  EXPECT_EQ(metrics_report(back).dump(), metrics_report(t).dump());
}

TEST(MetricsReport, RejectsTooShortTrajectory) {
  Trajectory t = full_fixture();
  t.rows.resize(1);
  EXPECT_THROW(metrics_report(t), FormatError);
}

}  // namespace
}  // namespace hybridlink
