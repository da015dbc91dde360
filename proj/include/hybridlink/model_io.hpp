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

// JSON model files. Units: SI (m, kg, s, rad). Layout documented in
// docs/model_format.md; bodies, joints and end effectors refer to each other
// by name.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hybridlink/errors.hpp"
#include "hybridlink/model.hpp"

namespace hybridlink {

using Json = nlohmann::json;

namespace io {

inline constexpr int kModelVersion = 1;

template <int N>
Eigen::Matrix<double, N, 1> vec(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) {
    throw FormatError(what + ": expected an array of " + std::to_string(N) +
                      " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = j[i].get<double>();
  return v;
}

inline VecX vecx(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array");
  VecX v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

// 3x3 from 9 row-major numbers or a 3-entry diagonal.
inline Mat3 mat3(const Json& j, const std::string& what) {
  if (j.is_array() && j.size() == 3) return vec<3>(j, what).asDiagonal();
  if (!j.is_array() || j.size() != 9) {
    throw FormatError(what + ": expected 3 (diagonal) or 9 (row-major) numbers");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
  }
  return m;
}

// n x n from n*n row-major numbers or an n-entry diagonal.
inline MatX matx(const Json& j, int n, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array");
  if (static_cast<int>(j.size()) == n) return vecx(j, what).asDiagonal();
  if (static_cast<int>(j.size()) != n * n) {
    throw FormatError(what + ": expected " + std::to_string(n) +
                      " (diagonal) or " + std::to_string(n * n) +
                      " (row-major) numbers");
  }
  MatX m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m(r, c) = j[n * r + c].get<double>();
  }
  return m;
}

// {"position": [3], "rotation": [9] | "axis_angle": [3]}
inline Pose pose(const Json& j, const std::string& what) {
  Pose p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw FormatError(what + ": pose must be an object");
  if (j.contains("position")) p.position = vec<3>(j["position"], what + ".position");
  if (j.contains("rotation")) {
    p.rotation = mat3(j["rotation"], what + ".rotation");
  } else if (j.contains("axis_angle")) {
    p.rotation = exp_so3(vec<3>(j["axis_angle"], what + ".axis_angle"));
  }
  if (!p.isValid(1e-8)) throw FormatError(what + ": rotation is not orthonormal");
  return p;
}

template <typename T>
Json array(const T& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json matrix_rows(const MatX& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

inline Json pose_json(const Pose& p) {
  return Json{{"position", array(p.position)},
              {"rotation", matrix_rows(p.rotation)}};
}

inline double number(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

}  // namespace io

inline HybridModel model_from_json(const Json& root) {
  using namespace io;
  if (!root.is_object()) throw FormatError("model: top level must be an object");
  if (root.value("format", "") != "hybridlink-model") {
    throw FormatError("model: missing \"format\": \"hybridlink-model\"");
  }
  if (root.value("version", 0) != kModelVersion) {
    throw FormatError("model: unsupported version " +
                      std::to_string(root.value("version", 0)));
  }
  HybridModel m;
  m.name = root.value("name", "model");
  m.humanoid = root.value("humanoid", false);
  m.fixed_base = root.value("fixed_base", false);
  if (root.contains("gravity")) m.gravity = vec<3>(root["gravity"], "gravity");
  if (root.contains("rest_base")) m.rest_base = pose(root["rest_base"], "rest_base");

  const Json& sk = root.at("skeleton");
  SkeletonSpec& s = m.skeleton;
  for (const auto& b : sk.at("bodies")) {
    BodySpec body;
    body.name = b.at("name").get<std::string>();
    body.mass = b.at("mass").get<double>();
    if (b.contains("com")) body.com = vec<3>(b["com"], body.name + ".com");
    body.inertia = mat3(b.at("inertia"), body.name + ".inertia");
    s.bodies.push_back(body);
  }
  auto body_of = [&](const Json& j, const std::string& what) {
    const std::string name = j.get<std::string>();
    for (std::size_t i = 0; i < s.bodies.size(); ++i) {
      if (s.bodies[i].name == name) return static_cast<int>(i);
    }
    throw ModelError(what + ": unknown body '" + name + "'");
  };
  if (sk.contains("joints")) {
    for (const auto& jj : sk["joints"]) {
      JointSpec jt;
      jt.name = jj.at("name").get<std::string>();
      const std::string type = jj.value("type", "revolute");
      if (type == "revolute") {
        jt.type = JointType::kRevolute;
      } else if (type == "fixed") {
        jt.type = JointType::kFixed;
      } else {
        throw FormatError("joint '" + jt.name + "': unknown type " + type);
      }
      if (jj.contains("axis")) jt.axis = vec<3>(jj["axis"], jt.name + ".axis");
      jt.parent_body = body_of(jj.at("parent"), "joint '" + jt.name + "'");
      jt.child_body = body_of(jj.at("child"), "joint '" + jt.name + "'");
      if (jj.contains("mount")) jt.mount = pose(jj["mount"], jt.name + ".mount");
      jt.lower = number(jj, "lower", jt.lower);
      jt.upper = number(jj, "upper", jt.upper);
      jt.torque_limit = number(jj, "torque_limit", jt.torque_limit);
      const int idx = static_cast<int>(s.joints.size());
      if (s.bodies[jt.child_body].parent_joint != -1) {
        throw ModelError("body '" + s.bodies[jt.child_body].name +
                         "' has more than one parent joint");
      }
      s.bodies[jt.child_body].parent_joint = idx;
      s.joints.push_back(jt);
    }
  }
  if (sk.contains("end_effectors")) {
    for (const auto& e : sk["end_effectors"]) {
      EndEffector ee;
      ee.name = e.at("name").get<std::string>();
      ee.body = body_of(e.at("body"), "end effector '" + ee.name + "'");
      if (e.contains("point")) ee.point = vec<3>(e["point"], ee.name + ".point");
      s.end_effectors.push_back(ee);
    }
  }
  if (sk.contains("socket")) {
    Socket sock;
    sock.body = body_of(sk["socket"].at("body"), "socket");
    sock.pose = pose(sk["socket"].value("pose", Json()), "socket.pose");
    s.socket = sock;
  }

  if (root.contains("rod") && !root["rod"].is_null()) {
    const Json& r = root["rod"];
    RodSpec rod;
    rod.attachment = pose(r.value("attachment", Json()), "rod.attachment");
    int i = 0;
    for (const auto& js : r.at("segments")) {
      const std::string w = "rod.segments[" + std::to_string(i++) + "]";
      SegmentSpec seg;
      seg.length = js.at("length").get<double>();
      seg.linear_density = js.at("linear_density").get<double>();
      if (js.contains("rotational_inertia_density")) {
        seg.rotational_inertia_density =
            mat3(js["rotational_inertia_density"], w + ".rotational_inertia_density");
      }
      if (js.contains("rest_strain")) {
        seg.rest_strain = Twist(Vec6(vec<6>(js["rest_strain"], w + ".rest_strain")));
      }
      seg.stiffness = matx(js.at("stiffness"), 6, w + ".stiffness");
      if (js.contains("damping")) seg.damping = matx(js["damping"], 6, w + ".damping");
      if (js.contains("active")) {
        const Json& a = js["active"];
        if (!a.is_array() || a.size() != 6) {
          throw FormatError(w + ".active: expected 6 booleans");
        }
        for (int k = 0; k < 6; ++k) seg.active[k] = a[k].get<bool>();
      }
      rod.segments.push_back(seg);
    }
    const int n = 6 * static_cast<int>(rod.segments.size());
    if (r.contains("coupled_stiffness")) {
      rod.coupled_stiffness = matx(r["coupled_stiffness"], n, "rod.coupled_stiffness");
    }
    if (r.contains("coupled_damping")) {
      rod.coupled_damping = matx(r["coupled_damping"], n, "rod.coupled_damping");
    }
    m.rod = rod;
  }

  if (root.contains("contacts")) {
    for (const auto& c : root["contacts"]) {
      ContactSpec cs;
      cs.name = c.at("name").get<std::string>();
      cs.side = c.value("side", "");
      if (c.contains("rod_s")) {
        cs.host = ContactHost::kRod;
        cs.rod_s = c["rod_s"].get<double>();
      } else {
        cs.host = ContactHost::kBody;
        cs.body = body_of(c.at("body"), "contact '" + cs.name + "'");
        if (c.contains("point")) cs.point = vec<3>(c["point"], cs.name + ".point");
      }
      m.contacts.push_back(cs);
    }
  }
  if (root.contains("contact_params")) {
    const Json& c = root["contact_params"];
    m.contact.kn = number(c, "kn", m.contact.kn);
    m.contact.dn = number(c, "dn", m.contact.dn);
    m.contact.mu = number(c, "mu", m.contact.mu);
    m.contact.kt = number(c, "kt", m.contact.kt);
  }

  m.set_default_control();
  if (root.contains("control")) {
    const Json& c = root["control"];
    const int n = m.rigid_dof();
    auto gains = [&](const char* key, VecX& out) {
      if (!c.contains(key)) return;
      if (c[key].is_number()) {
        out = VecX::Constant(n, c[key].get<double>());
      } else {
        out = vecx(c[key], std::string("control.") + key);
      }
    };
    gains("kp", m.control.gains.kp);
    gains("kd", m.control.gains.kd);
    if (c.contains("stabilizer")) {
      const Json& st = c["stabilizer"];
      m.control.stabilizer.kp = number(st, "kp", m.control.stabilizer.kp);
      m.control.stabilizer.kd = number(st, "kd", m.control.stabilizer.kd);
      m.control.stabilizer_enabled = st.value("enabled", true);
    }
    const std::string mode = c.value("pd_mode", "hold_target");
    if (mode == "hold_target") {
      m.control.pd_mode = PDMode::kHoldTarget;
    } else if (mode == "hold_torque") {
      m.control.pd_mode = PDMode::kHoldTorque;
    } else {
      throw FormatError("control.pd_mode: expected hold_target or hold_torque");
    }
  }
  m.validate();
  return m;
}

inline Json model_to_json(const HybridModel& m) {
  using namespace io;
  Json root;
  root["format"] = "hybridlink-model";
  root["version"] = kModelVersion;
  root["name"] = m.name;
  root["humanoid"] = m.humanoid;
  root["fixed_base"] = m.fixed_base;
  root["gravity"] = array(m.gravity);
  root["rest_base"] = pose_json(m.rest_base);
  const SkeletonSpec& s = m.skeleton;
  Json bodies = Json::array();
  for (const auto& b : s.bodies) {
    bodies.push_back({{"name", b.name},
                      {"mass", b.mass},
                      {"com", array(b.com)},
                      {"inertia", matrix_rows(b.inertia)}});
  }
  Json joints = Json::array();
  for (const auto& j : s.joints) {
    joints.push_back({{"name", j.name},
                      {"type", j.type == JointType::kFixed ? "fixed" : "revolute"},
                      {"axis", array(j.axis)},
                      {"parent", s.bodies[j.parent_body].name},
                      {"child", s.bodies[j.child_body].name},
                      {"mount", pose_json(j.mount)},
                      {"lower", j.lower},
                      {"upper", j.upper},
                      {"torque_limit", j.torque_limit}});
  }
  Json ees = Json::array();
  for (const auto& e : s.end_effectors) {
    ees.push_back({{"name", e.name},
                   {"body", s.bodies[e.body].name},
                   {"point", array(e.point)}});
  }
  root["skeleton"] = {{"bodies", bodies}, {"joints", joints}, {"end_effectors", ees}};
  if (s.socket) {
    root["skeleton"]["socket"] = {{"body", s.bodies[s.socket->body].name},
                                  {"pose", pose_json(s.socket->pose)}};
  }
  if (m.rod) {
    Json segs = Json::array();
    for (const auto& seg : m.rod->segments) {
      Json active = Json::array();
      for (bool a : seg.active) active.push_back(a);
      segs.push_back({{"length", seg.length},
                      {"linear_density", seg.linear_density},
                      {"rotational_inertia_density",
                       matrix_rows(seg.rotational_inertia_density)},
                      {"rest_strain", array(seg.rest_strain.vector())},
                      {"stiffness", matrix_rows(seg.stiffness)},
                      {"damping", matrix_rows(seg.damping)},
                      {"active", active}});
    }
    root["rod"] = {{"attachment", pose_json(m.rod->attachment)}, {"segments", segs}};
    if (m.rod->coupled_stiffness) {
      root["rod"]["coupled_stiffness"] = matrix_rows(*m.rod->coupled_stiffness);
    }
    if (m.rod->coupled_damping) {
      root["rod"]["coupled_damping"] = matrix_rows(*m.rod->coupled_damping);
    }
  }
  Json contacts = Json::array();
  for (const auto& c : m.contacts) {
    Json jc = {{"name", c.name}, {"side", c.side}};
    if (c.host == ContactHost::kRod) {
      jc["rod_s"] = c.rod_s;
    } else {
      jc["body"] = s.bodies[c.body].name;
      jc["point"] = array(c.point);
    }
    contacts.push_back(jc);
  }
  root["contacts"] = contacts;
  root["contact_params"] = {{"kn", m.contact.kn},
                            {"dn", m.contact.dn},
                            {"mu", m.contact.mu},
                            {"kt", m.contact.kt}};
  root["control"] = {
      {"kp", array(m.control.gains.kp)},
      {"kd", array(m.control.gains.kd)},
      {"stabilizer",
       {{"kp", m.control.stabilizer.kp},
        {"kd", m.control.stabilizer.kd},
        {"enabled", m.control.stabilizer_enabled}}},
      {"pd_mode",
       m.control.pd_mode == PDMode::kHoldTarget ? "hold_target" : "hold_torque"}};
  return root;
}

inline HybridModel parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

inline HybridModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

inline void save_model(const HybridModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(2) << "\n";
}

}  // namespace hybridlink
