#pragma once

// JSON forms of the configuration and frame types (nlohmann/json).

#include <string>

#include <json.hpp>

#include "gaitfuzz/dsl.hpp"
#include "gaitfuzz/engine.hpp"
#include "gaitfuzz/error.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace gaitfuzz {

using json = nlohmann::json;

inline json to_json(Vec2 v) { return json::array({v.x, v.y}); }

inline json to_json(const LimbDimensions& d) {
  return {{"thigh", d.thigh},
          {"shank", d.shank},
          {"heel_to_ball", d.heel_to_ball},
          {"ball_to_toe", d.ball_to_toe},
          {"pelvis_height_offset", d.pelvis_height_offset}};
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline LimbDimensions dims_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("dims must be a JSON object");
  LimbDimensions d;
  for (const auto& [key, value] : j.items()) {
    double* field = key == "thigh"                  ? &d.thigh
                    : key == "shank"                ? &d.shank
                    : key == "heel_to_ball"         ? &d.heel_to_ball
                    : key == "ball_to_toe"          ? &d.ball_to_toe
                    : key == "pelvis_height_offset" ? &d.pelvis_height_offset
                                                    : nullptr;
    if (!field) throw InvalidInput("unknown dims field '" + key + "'");
    if (!value.is_number()) throw InvalidInput("dims field '" + key + "' must be a number");
    *field = value.get<double>();
  }
  d.validate();
  return d;
}

inline json to_json(const LegAngles& a) {
  return {{"hip", a.hip}, {"knee", a.knee}, {"ankle", a.ankle}, {"ball", a.ball}};
}

inline json to_json(const Pose& p) {
  return {{"root", to_json(p.root)}, {"left", to_json(p.left)}, {"right", to_json(p.right)}};
}

inline json to_json(const FootTarget& t) {
  return {{"position", to_json(t.position)},
          {"surface_tangent", to_json(t.surface_tangent)},
          {"required_knee_flexion", t.required_knee_flexion}};
}

inline json to_json(const GaitConfig& c) {
  return {{"step_length", c.step_length},
          {"dims", to_json(c.dims)},
          {"dt", c.dt},
          {"terrain", c.terrain.to_string()},
          {"max_phase_duration", c.max_phase_duration},
          {"double_support_dwell", c.double_support_dwell},
          {"placement_tolerance", c.placement_tolerance}};
}

/// Frame as sent to clients; joint chains are included so a viewer does not
/// need its own forward kinematics.
inline json to_json(const FrameOutput& f, const LimbDimensions& dims) {
  json vel = json::object();
  json chains = json::object();
  for (Leg l : {Leg::left, Leg::right}) {
    const LegChain c = forward_kinematics(f.pose, dims, l);
    chains[std::string(leg_name(l))] = json::array(
        {to_json(c.hip), to_json(c.knee), to_json(c.ankle), to_json(c.ball), to_json(c.toe)});
    vel[std::string(leg_name(l))] = to_json(f.joint_velocities[static_cast<std::size_t>(l)]);
  }
  json events = json::array();
  for (Event e : f.events) events.push_back(std::string(event_name(e)));
  return {{"time", f.time},
          {"pose", to_json(f.pose)},
          {"joint_velocities", vel},
          {"scaled_delta", f.scaled_delta},
          {"events", events},
          {"phase", f.phase == Phase::swing ? "swing" : "double_support"},
          {"swing_leg", std::string(leg_name(f.swing_leg))},
          {"target", to_json(f.target)},
          {"chains", chains}};
}

}  // namespace gaitfuzz
