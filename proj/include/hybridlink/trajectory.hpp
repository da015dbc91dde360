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

// Simulation trajectories as CSV. Metadata lines "# key=value" precede the
// header row; readers reject files whose major version they do not know.
// Column layout is documented in docs/file_formats.md.

#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hybridlink/errors.hpp"
#include "hybridlink/hybrid_dynamics.hpp"
#include "hybridlink/model.hpp"

namespace hybridlink {

inline constexpr int kTrajectoryVersion = 1;

class Trajectory {
 public:
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
  bool has(const std::string& name) const { return column_index(name) >= 0; }

  VecX column(const std::string& name) const {
    const int c = column_index(name);
    if (c < 0) throw FormatError("trajectory: missing column '" + name + "'");
    VecX v(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) v[r] = rows[r][c];
    return v;
  }

  // Columns whose names start with `prefix`, in file order.
  std::vector<std::string> columns_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& c : columns) {
      if (c.rfind(prefix, 0) == 0) out.push_back(c);
    }
    return out;
  }

  double meta_number(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError("trajectory: missing metadata '" + key + "'");
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw FormatError("trajectory: metadata '" + key + "' is not a number");
    }
  }

  VecX meta_vector(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError("trajectory: missing metadata '" + key + "'");
    std::stringstream ss(it->second);
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    return Eigen::Map<VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  std::size_t size() const { return rows.size(); }
};

inline void write_trajectory(const Trajectory& traj, std::ostream& out) {
  out << std::setprecision(17);
  out << "# format=hybridlink-trajectory\n";
  out << "# version=" << kTrajectoryVersion << "\n";
  for (const auto& [k, v] : traj.meta) {
    if (k == "format" || k == "version") continue;
    out << "# " << k << "=" << v << "\n";
  }
  for (std::size_t i = 0; i < traj.columns.size(); ++i) {
    out << (i ? "," : "") << traj.columns[i];
  }
  out << "\n";
  for (const auto& row : traj.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

inline void write_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write trajectory '" + path + "'");
  write_trajectory(traj, out);
}

inline Trajectory read_trajectory(std::istream& in, const std::string& what) {
  Trajectory t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      t.meta[key] = line.substr(eq + 1);
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (t.columns.empty()) {
      while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
      continue;
    }
    std::vector<double> row;
    row.reserve(t.columns.size());
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw FormatError(what + ": bad number '" + cell + "'");
      }
      row.push_back(x);
    }
    if (row.size() != t.columns.size()) {
      throw FormatError(what + ": row " + std::to_string(t.rows.size() + 1) +
                        " has " + std::to_string(row.size()) + " cells, header has " +
                        std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (t.meta.count("format") && t.meta["format"] != "hybridlink-trajectory") {
    throw FormatError(what + ": not a trajectory file");
  }
  if (!t.meta.count("version")) throw FormatError(what + ": missing version");
  const std::string major = t.meta["version"].substr(0, t.meta["version"].find('.'));
  if (major != std::to_string(kTrajectoryVersion)) {
    throw FormatError(what + ": unsupported trajectory version " + t.meta["version"]);
  }
  if (t.columns.empty()) throw FormatError(what + ": empty file (no header)");
  return t;
}

inline Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open trajectory '" + path + "'");
  return read_trajectory(in, path);
}

// Everything recorded at one physics step.
struct StepRecord {
  double t = 0.0;
  const HybridState* state = nullptr;
  VecX joint_torque;                  // applied actuator torques
  std::vector<ContactForce> contacts;
};

// Builds trajectory rows with a fixed column layout for one model.
class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(const HybridModel& model) : model_(&model) {
    auto& c = traj_.columns;
    c = {"t"};
    for (const char* k : {"base_px", "base_py", "base_pz", "base_rx", "base_ry",
                          "base_rz", "base_wx", "base_wy", "base_wz", "base_vx",
                          "base_vy", "base_vz"}) {
      c.push_back(k);
    }
    const auto& sk = model.skeleton;
    for (int j : sk.actuated_joints()) c.push_back("q_" + sk.joints[j].name);
    for (int j : sk.actuated_joints()) c.push_back("dq_" + sk.joints[j].name);
    const int ns = model.rod ? model.rod->segment_count() : 0;
    for (int i = 0; i < ns; ++i) {
      for (int k = 0; k < 6; ++k) c.push_back("xi" + std::to_string(i) + "_" + std::to_string(k));
    }
    for (int i = 0; i < ns; ++i) {
      for (int k = 0; k < 6; ++k) c.push_back("dxi" + std::to_string(i) + "_" + std::to_string(k));
    }
    for (int j : sk.actuated_joints()) c.push_back("tau_" + sk.joints[j].name);
    for (const auto& cs : model.contacts) {
      for (const char* a : {"_x", "_y", "_z"}) c.push_back("f_" + cs.name + a);
    }
    for (const char* side : {"left", "right"}) {
      for (const char* a : {"_x", "_y", "_z"}) c.push_back(std::string("grf_") + side + a);
    }
    c.push_back("elastic_energy");

    std::ostringstream os;
    os << std::setprecision(17);
    traj_.meta["model"] = model.name;
    os << model.total_mass();
    traj_.meta["total_mass"] = os.str();
    if (model.rod) {
      std::ostringstream rs;
      rs << std::setprecision(17);
      const VecX rest = model.rod->rest_vector();
      for (int i = 0; i < rest.size(); ++i) rs << (i ? " " : "") << rest[i];
      traj_.meta["rest_strain"] = rs.str();
      traj_.meta["rod_segments"] = std::to_string(ns);
    }
  }

  void set_meta(const std::string& key, const std::string& value) { traj_.meta[key] = value; }
  void set_meta(const std::string& key, double value) {
    std::ostringstream os;
    os << std::setprecision(17) << value;
    traj_.meta[key] = os.str();
  }

  void record(const StepRecord& r) {
    const HybridModel& m = *model_;
    const HybridState& s = *r.state;
    std::vector<double> row;
    row.reserve(traj_.columns.size());
    row.push_back(r.t);
    const Vec3 rv = log_so3(s.base.rotation);
    for (int i = 0; i < 3; ++i) row.push_back(s.base.position[i]);
    for (int i = 0; i < 3; ++i) row.push_back(rv[i]);
    for (int i = 0; i < 6; ++i) row.push_back(s.base_velocity[i]);
    for (int i = 0; i < s.q_rigid.size(); ++i) row.push_back(s.q_rigid[i]);
    for (int i = 0; i < s.dq_rigid.size(); ++i) row.push_back(s.dq_rigid[i]);
    if (m.rod) {
      const VecX q = s.rod.strain_vector();
      const VecX dq = s.rod.rate_vector();
      for (int i = 0; i < q.size(); ++i) row.push_back(q[i]);
      for (int i = 0; i < dq.size(); ++i) row.push_back(dq[i]);
    }
    for (int i = 0; i < m.rigid_dof(); ++i) {
      row.push_back(r.joint_torque.size() ? r.joint_torque[i] : 0.0);
    }
    Vec3 left = Vec3::Zero(), right = Vec3::Zero();
    for (std::size_t k = 0; k < m.contacts.size(); ++k) {
      Vec3 f = Vec3::Zero();
      for (const auto& c : r.contacts) {
        if (c.index == static_cast<int>(k)) f = c.force();
      }
      for (int i = 0; i < 3; ++i) row.push_back(f[i]);
      if (m.contacts[k].side == "left") left += f;
      if (m.contacts[k].side == "right") right += f;
    }
    for (int i = 0; i < 3; ++i) row.push_back(left[i]);
    for (int i = 0; i < 3; ++i) row.push_back(right[i]);
    row.push_back(rod_elastic_energy(m, s));
    traj_.rows.push_back(std::move(row));
  }

  const Trajectory& trajectory() const { return traj_; }
  Trajectory& trajectory() { return traj_; }

 private:
  const HybridModel* model_;
  Trajectory traj_;
};

}  // namespace hybridlink
