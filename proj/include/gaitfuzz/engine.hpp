#pragma once

// Gait engine: drives the rig through alternating swing phases. Every joint
// velocity comes from a bound fuzzy controller; joint angles are integrated
// with explicit Euler at a fixed step and the stance ankle stays pinned.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaitfuzz/dsl.hpp"
#include "gaitfuzz/error.hpp"
#include "gaitfuzz/fuzzy.hpp"
#include "gaitfuzz/metrics.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace gaitfuzz {

struct Terrain {
  enum class Kind { flat, incline, stairs };

  Kind kind = Kind::flat;
  double incline = 0.0;  // radians, positive uphill
  double riser = 0.0;    // meters
  double tread = 0.0;    // meters
  double first_riser_x = 0.0;
  double heel_margin = 0.03;  // landing heel distance past the nosing

  static Terrain flat() { return {}; }
  static Terrain make_incline(double angle) {
    Terrain t;
    t.kind = Kind::incline;
    t.incline = angle;
    return t;
  }
  /// Stairs whose first riser sits one tread minus the heel margin ahead
  /// of the origin, so the first step lands exactly one tread forward.
  static Terrain make_stairs(double riser, double tread) {
    Terrain t;
    t.kind = Kind::stairs;
    t.riser = riser;
    t.tread = tread;
    t.first_riser_x = tread - t.heel_margin;
    return t;
  }

  void validate() const {
    switch (kind) {
      case Kind::flat: break;
      case Kind::incline:
        if (!std::isfinite(incline) || std::abs(incline) > 0.35)
          throw InvalidInput("incline angle must be within +-0.35 rad");
        break;
      case Kind::stairs:
        if (!std::isfinite(riser) || !(riser > 0.0) || riser > 0.3)
          throw InvalidInput("stair riser must be in (0, 0.3] m");
        if (!std::isfinite(tread) || !(tread > 0.15) || tread > 0.5)
          throw InvalidInput("stair tread must be in (0.15, 0.5] m");
        break;
    }
  }

  /// Index of the stair step under x (0 = ground before the first riser).
  int step_index(double x) const noexcept {
    if (kind != Kind::stairs || x < first_riser_x) return 0;
    return static_cast<int>(std::floor((x - first_riser_x) / tread)) + 1;
  }

  double height_at(double x) const noexcept {
    switch (kind) {
      case Kind::flat: return 0.0;
      case Kind::incline: return x * std::tan(incline);
      case Kind::stairs: return step_index(x) * riser;
    }
    return 0.0;
  }

  double surface_angle() const noexcept { return kind == Kind::incline ? incline : 0.0; }

  /// Front edge (nosing) of stair step k >= 1.
  Vec2 nosing(int k) const noexcept { return {first_riser_x + (k - 1) * tread, k * riser}; }

  /// "flat", "incline:<deg>" or "stairs:<riser>x<tread>".
  std::string to_string() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::flat: os << "flat"; break;
      case Kind::incline: os << "incline:" << rad_to_deg(incline); break;
      case Kind::stairs: os << "stairs:" << riser << 'x' << tread; break;
    }
    return os.str();
  }

  static Terrain parse(std::string_view s) {
    auto number = [&](std::string_view v) {
      double out = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        throw InvalidInput("bad terrain '" + std::string(s) + "'");
      return out;
    };
    Terrain t;
    if (s == "flat") {
      t = flat();
    } else if (s.starts_with("incline:")) {
      t = make_incline(deg_to_rad(number(s.substr(8))));
    } else if (s.starts_with("stairs:")) {
      auto body = s.substr(7);
      auto x = body.find('x');
      if (x == std::string_view::npos) throw InvalidInput("bad terrain '" + std::string(s) + "'");
      t = make_stairs(number(body.substr(0, x)), number(body.substr(x + 1)));
    } else {
      throw InvalidInput("bad terrain '" + std::string(s) + "' (expected flat, incline:<deg> or stairs:<r>x<t>)");
    }
    t.validate();
    return t;
  }

  dsl::GaitMode gait_mode() const noexcept { return kind == Kind::stairs ? dsl::GaitMode::ascent : dsl::GaitMode::level; }

  bool operator==(const Terrain&) const = default;
};

struct GaitConfig {
  double step_length = 0.6;
  LimbDimensions dims;
  JointLimits limits;
  dsl::ControllerSet controllers;
  double dt = 1.0 / 120.0;
  Terrain terrain;
  double max_phase_duration = 2.0;    // watchdog
  double double_support_dwell = 0.05;
  double placement_tolerance = 0.01;  // m
  double completion_threshold = 0.995;
  // Swing knee flexion held while the thigh is behind the hip, released
  // towards the touchdown flexion as the swing progresses.
  double knee_lift = 1.0;
  double ascent_knee_lift = 2.0;
  double knee_release_begin = -0.5;  // scaled delta
  double knee_release_end = 0.2;
  double ascent_knee_release_begin = 0.2;
  double ascent_knee_release_end = 0.8;
  // Scaled delta at which the stance leg should have reached its touchdown pose.
  double stance_blend_end = 0.6;
  // Touchdown hip position on stairs, as a fraction of the tread.
  double stair_hip_fraction = 0.5;

  void validate() const {
    dims.validate();
    terrain.validate();
    if (!std::isfinite(dt) || !(dt > 0.0) || dt > 1.0 / 30.0) throw InvalidInput("dt must be in (0, 1/30] s");
    if (!std::isfinite(step_length) || !(step_length > 0.0)) throw InvalidInput("step length must be positive");
    if (!(max_phase_duration > 0.0)) throw InvalidInput("max phase duration must be positive");
    if (terrain.kind == Terrain::Kind::stairs && dims.foot_length() + terrain.heel_margin >= terrain.tread)
      throw InvalidInput("foot does not fit on the stair tread");
    const auto mode = terrain.gait_mode();
    for (auto role : dsl::kJointRoles) {
      const auto* b = controllers.binding(mode, role);
      if (!b)
        throw ConfigError("no controller bound to '" + std::string(dsl::role_name(role)) + "' for gait mode '" +
                          std::string(dsl::mode_name(mode)) + "'");
      if (!controllers.find(b->controller)) throw ConfigError("unknown controller '" + b->controller + "'");
    }
  }
};

enum class Phase { swing, double_support };

enum class Event { step_completed, target_reached, clamped, watchdog_reset };

constexpr std::string_view event_name(Event e) noexcept {
  switch (e) {
    case Event::step_completed: return "step_completed";
    case Event::target_reached: return "target_reached";
    case Event::clamped: return "clamped";
    case Event::watchdog_reset: return "watchdog_reset";
  }
  return "?";
}

struct GaitState {
  Pose pose;
  Leg swing_leg = Leg::right;
  Phase phase = Phase::double_support;
  double phase_time = 0.0;
  double time = 0.0;
  std::array<FootTarget, 2> targets{};  // indexed by Leg
  DeltaMetric delta;
  int cycle_count = 0;

  // Pinned stance ankle and the surface it stands on.
  Vec2 stance_anchor;
  double stance_surface_angle = 0.0;
  // Captured on the first frame of each swing.
  bool swing_started = false;
  bool zero_anchor_fixed = false;
  LegAngles stance_start;
  LegAngles stance_end;
  bool target_reached = false;
  std::vector<Event> pending_events;

  Leg stance_leg() const noexcept { return other(swing_leg); }
  FootTarget& target(Leg l) noexcept { return targets[static_cast<std::size_t>(l)]; }
  const FootTarget& target(Leg l) const noexcept { return targets[static_cast<std::size_t>(l)]; }
};

/// Per-joint velocities, left leg then right leg.
using JointVelocities = std::array<LegAngles, 2>;

struct FrameOutput {
  double time = 0.0;
  Pose pose;
  JointVelocities joint_velocities{};
  double scaled_delta = -1.0;
  std::vector<Event> events;
  Phase phase = Phase::double_support;
  Leg swing_leg = Leg::right;
  FootTarget target;  // current target of the swing leg

  bool has(Event e) const noexcept { return std::ranges::find(events, e) != events.end(); }
  double velocity(Leg l, Joint j) const noexcept { return joint_velocities[static_cast<std::size_t>(l)][j]; }
};

// ---------------------------------------------------------------------------
// Building blocks of a frame. They are public so a frame can be re-derived
// step by step.

/// Standing pose: feet together at the origin, legs straight, soles flush.
inline GaitState initial_state(const GaitConfig& config) {
  GaitState s;
  const double ground = config.terrain.height_at(0.0);
  s.stance_anchor = {0.0, ground};
  s.stance_surface_angle = config.terrain.surface_angle();
  for (Leg l : {Leg::left, Leg::right}) {
    auto& a = s.pose.leg(l);
    a = {};
    a.ankle = config.terrain.surface_angle();
    s.target(l) = {s.stance_anchor, {std::cos(s.stance_surface_angle), std::sin(s.stance_surface_angle)}, 0.0};
  }
  s.swing_leg = Leg::right;
  s.pose.root = root_for_planted_ankle(s.stance_anchor, s.pose.leg(Leg::left), config.dims);
  s.phase = Phase::double_support;
  s.phase_time = config.double_support_dwell;  // plan on the first frame
  return s;
}

/// Hip position at touchdown for a step from `stance` to `target`.
inline Vec2 touchdown_hip(Vec2 stance, Vec2 target, const GaitConfig& config) {
  const double leg = config.dims.leg_length();
  if (config.terrain.kind == Terrain::Kind::stairs) {
    const double dx = config.stair_hip_fraction * (target.x - stance.x);
    return {stance.x + dx, stance.y + std::sqrt(std::max(0.0, leg * leg - dx * dx))};
  }
  // both legs straight: on the perpendicular bisector of the feet
  const Vec2 d = target - stance;
  const double half = 0.5 * d.norm();
  const Vec2 normal = (1.0 / d.norm()) * Vec2{-d.y, d.x};
  return stance + 0.5 * d + std::sqrt(std::max(0.0, leg * leg - half * half)) * normal;
}

/// Next foot target for the swing leg from the pinned stance foot.
inline FootTarget plan_target(const GaitState& state, const GaitConfig& config) {
  const Vec2 stance = state.stance_anchor;
  const double reach = config.dims.leg_length();
  FootTarget t;
  const Terrain& terr = config.terrain;
  switch (terr.kind) {
    case Terrain::Kind::flat:
    case Terrain::Kind::incline: {
      if (config.step_length >= reach)
        throw ReachError("step length " + std::to_string(config.step_length) + " m exceeds leg reach " +
                             std::to_string(reach) + " m",
                         config.step_length - reach);
      const double a = terr.surface_angle();
      t.surface_tangent = {std::cos(a), std::sin(a)};
      const double x = stance.x + config.step_length * std::cos(a);
      t.position = {x, terr.height_at(x)};
      t.required_knee_flexion = 0.0;
      break;
    }
    case Terrain::Kind::stairs: {
      const int k = terr.step_index(stance.x + 1e-9);
      const Vec2 nose = terr.nosing(k + 1);
      t.position = {nose.x + terr.heel_margin, nose.y};
      t.surface_tangent = {1.0, 0.0};
      const Vec2 hip = touchdown_hip(stance, t.position, config);
      const double far = distance(hip, t.position);
      if (far > reach + kReachSlack) throw ReachError("next stair step out of reach by " + std::to_string(far - reach) + " m", far - reach);
      t.required_knee_flexion = solve_two_link(hip, t.position, config.dims).second;
      break;
    }
  }
  return t;
}

/// Scaled-delta knee target: lifted early in the swing, released to the
/// touchdown flexion later.
inline double swing_knee_target(double scaled, double lift, double touchdown, double begin, double end) noexcept {
  double w;
  if (scaled <= begin) w = 1.0;
  else if (scaled >= end) w = 0.0;
  else {
    const double u = (scaled - begin) / (end - begin);
    w = 1.0 - u * u * (3.0 - 2.0 * u);
  }
  return touchdown + (lift - touchdown) * w;
}

inline double swing_knee_target(double scaled, const GaitConfig& config, const FootTarget& target) noexcept {
  if (config.terrain.kind == Terrain::Kind::stairs)
    return swing_knee_target(scaled, std::max(config.ascent_knee_lift, target.required_knee_flexion),
                             target.required_knee_flexion, config.ascent_knee_release_begin,
                             config.ascent_knee_release_end);
  return swing_knee_target(scaled, std::max(config.knee_lift, target.required_knee_flexion),
                           target.required_knee_flexion, config.knee_release_begin, config.knee_release_end);
}

/// Stance hip/knee target: linear blend from the swing-start pose to the
/// touchdown pose, complete once the scaled delta reaches `blend_end`.
inline LegAngles stance_target(const GaitState& state, double scaled, double blend_end) noexcept {
  const double p = std::clamp((scaled + 1.0) / (blend_end + 1.0), 0.0, 1.0);
  LegAngles t = state.stance_end;
  t.hip = state.stance_start.hip + (state.stance_end.hip - state.stance_start.hip) * p;
  t.knee = state.stance_start.knee + (state.stance_end.knee - state.stance_start.knee) * p;
  return t;
}

/// Raw hip swing angle and its value were the thigh vertical.
struct SwingAngles {
  double raw = 0.0;
  double at_zero_rotation = 0.0;
};

inline SwingAngles swing_angles(const Pose& pose, Leg swing, const FootTarget& target, const GaitConfig& config) {
  const LegChain c = forward_kinematics(pose, config.dims, swing);
  if (config.terrain.kind == Terrain::Kind::stairs) {
    const Vec2 knee_end = knee_end_position(c.hip, config.dims, target.position, target.required_knee_flexion);
    return {delta_ascent(c.hip, c.knee, config.dims, target), limb_angle(knee_end - c.hip)};
  }
  return {delta_level(c.hip, c.knee, target), limb_angle(target.position - c.hip)};
}

/// Rear swing that starts with the thigh at least this far behind vertical
/// uses the vertical-thigh anchor; otherwise the zero anchor is fixed halfway.
inline constexpr double kMinRearSwing = 0.1;
inline constexpr double kMinStartDelta = 0.02;

/// Anchors for the current frame of the swing.
inline DeltaAnchors swing_anchors(const GaitState& state, const SwingAngles& now) noexcept {
  DeltaAnchors a{state.delta.at_start, 0.5 * state.delta.at_start, 0.0};
  if (!state.zero_anchor_fixed) {
    DeltaAnchors dyn{state.delta.at_start, now.at_zero_rotation, 0.0};
    if (dyn.valid()) return dyn;
  }
  return a;
}

/// Evaluate the controller bound to `role` on a metric value.
inline double bound_velocity(const GaitConfig& config, dsl::JointRole role, double metric) {
  const auto mode = config.terrain.gait_mode();
  const auto* b = config.controllers.binding(mode, role);
  if (!b) throw ConfigError("no controller bound to '" + std::string(dsl::role_name(role)) + "'");
  const auto* c = config.controllers.find(b->controller);
  if (!c) throw ConfigError("unknown controller '" + b->controller + "'");
  return fuzzy::evaluate(*c, {metric});
}

/// Euler step of one joint, clamped to its limits. Returns true if clamped.
inline bool integrate_joint(LegAngles& a, Joint j, double velocity, double dt, const JointLimits& limits) noexcept {
  a[j] += velocity * dt;
  const Interval lim = limits[j];
  const double c = std::clamp(a[j], lim.lo, lim.hi);
  const bool clamped = c != a[j];
  a[j] = c;
  return clamped;
}

/// Initialise anchors and stance targets on the first frame of a swing.
inline void begin_swing(GaitState& s, const GaitConfig& config) {
  const FootTarget& target = s.target(s.swing_leg);
  const SwingAngles now = swing_angles(s.pose, s.swing_leg, target, config);
  s.delta.at_start = std::max(now.raw, kMinStartDelta);
  s.delta.at_end = 0.0;
  s.zero_anchor_fixed = s.delta.at_start - now.at_zero_rotation < kMinRearSwing;
  s.stance_start = s.pose.leg(s.stance_leg());
  const Vec2 hip_end = touchdown_hip(s.stance_anchor, target.position, config);
  auto [hip, knee] = solve_two_link(hip_end, s.stance_anchor, config.dims);
  // solve_two_link returns the leg hanging from hip_end to the stance ankle.
  s.stance_end = s.stance_start;
  s.stance_end.hip = hip;
  s.stance_end.knee = knee;
  s.swing_started = true;
  s.target_reached = false;
}

/// Advance one fixed step.
inline std::pair<GaitState, FrameOutput> step_frame(const GaitState& state, const GaitConfig& config) {
  using dsl::JointRole;
  GaitState s = state;
  FrameOutput out;
  out.events = std::move(s.pending_events);
  s.pending_events.clear();
  const double dt = config.dt;
  s.time += dt;
  s.phase_time += dt;

  if (s.phase == Phase::double_support) {
    if (s.phase_time >= config.double_support_dwell - 1e-12) {
      s.target(s.swing_leg) = plan_target(s, config);
      s.phase = Phase::swing;
      s.phase_time = 0.0;
      s.swing_started = false;
    }
    out.time = s.time;
    out.pose = s.pose;
    out.scaled_delta = s.delta.scaled;
    out.phase = Phase::double_support;
    out.swing_leg = s.swing_leg;
    out.target = s.target(s.swing_leg);
    return {std::move(s), std::move(out)};
  }

  if (!s.swing_started) begin_swing(s, config);
  const Leg sw = s.swing_leg;
  const Leg st = s.stance_leg();
  const FootTarget& target = s.target(sw);

  // (1) metrics on the current pose
  const SwingAngles now = swing_angles(s.pose, sw, target, config);
  const DeltaAnchors anchors = swing_anchors(s, now);
  const double scaled = scale_delta(now.raw, anchors);
  LegAngles& swing = s.pose.leg(sw);
  LegAngles& stance = s.pose.leg(st);
  const LegAngles stance_goal = stance_target(s, scaled, config.stance_blend_end);

  // (2) controllers
  JointVelocities vel{};
  LegAngles& vsw = vel[static_cast<std::size_t>(sw)];
  LegAngles& vst = vel[static_cast<std::size_t>(st)];
  vsw.hip = bound_velocity(config, JointRole::hip_swing, scaled);
  vsw.knee = bound_velocity(config, JointRole::knee_swing, alpha(swing.knee, swing_knee_target(scaled, config, target)));
  vsw.ball = bound_velocity(config, JointRole::ball_swing, alpha(swing.ball, 0.0));
  vst.hip = bound_velocity(config, JointRole::hip_stance, alpha(stance.hip, stance_goal.hip));
  vst.knee = bound_velocity(config, JointRole::knee_stance, alpha(stance.knee, stance_goal.knee));
  vst.ball = bound_velocity(config, JointRole::ball_stance, alpha(stance.ball, 0.0));

  // (3)+(4) integrate hip, knee and ball of both legs
  bool clamped = false;
  for (Joint j : {Joint::hip, Joint::knee, Joint::ball}) {
    clamped |= integrate_joint(swing, j, vsw[j], dt, config.limits);
    clamped |= integrate_joint(stance, j, vst[j], dt, config.limits);
  }
  // ankles follow the sole angle of the updated shank
  vsw.ankle = bound_velocity(config, JointRole::ankle_swing,
                             sole_angle(s.pose, config.dims, sw, target.surface_angle()));
  vst.ankle = bound_velocity(config, JointRole::ankle_stance,
                             sole_angle(s.pose, config.dims, st, s.stance_surface_angle));
  clamped |= integrate_joint(swing, Joint::ankle, vsw.ankle, dt, config.limits);
  clamped |= integrate_joint(stance, Joint::ankle, vst.ankle, dt, config.limits);
  if (clamped) out.events.push_back(Event::clamped);

  // (5) keep the stance ankle pinned
  s.pose.root = root_for_planted_ankle(s.stance_anchor, stance, config.dims);

  // (6) progress and completion
  const SwingAngles after = swing_angles(s.pose, sw, target, config);
  s.delta.raw = after.raw;
  const DeltaAnchors a2 = swing_anchors(s, after);
  s.delta.at_zero_rotation = a2.at_zero_rotation;
  s.delta.scaled = scale_delta(after.raw, a2);

  const Vec2 foot = forward_kinematics(s.pose, config.dims, sw).ankle;
  const bool placed = distance(foot, target.position) <= config.placement_tolerance;
  if (placed && !s.target_reached) {
    s.target_reached = true;
    out.events.push_back(Event::target_reached);
  }
  const bool done = placed && s.delta.scaled >= config.completion_threshold;
  const bool watchdog = !done && s.phase_time > config.max_phase_duration;
  if (watchdog) out.events.push_back(Event::watchdog_reset);

  out.time = s.time;
  out.joint_velocities = vel;
  out.scaled_delta = s.delta.scaled;
  out.phase = Phase::swing;
  out.swing_leg = sw;
  out.target = target;

  if (done || watchdog) {
    out.events.push_back(Event::step_completed);
    s.stance_anchor = foot;
    s.stance_surface_angle = target.surface_angle();
    s.swing_leg = st;
    s.phase = Phase::double_support;
    s.phase_time = 0.0;
    s.swing_started = false;
    ++s.cycle_count;
  }
  out.pose = s.pose;
  return {std::move(s), std::move(out)};
}

struct RunLimit {
  std::optional<int> steps;
  std::optional<double> duration;

  static RunLimit n_steps(int n) { return {n, std::nullopt}; }
  static RunLimit seconds(double t) { return {std::nullopt, t}; }
};

inline FrameOutput initial_frame(const GaitState& s) {
  FrameOutput f;
  f.time = s.time;
  f.pose = s.pose;
  f.scaled_delta = s.delta.scaled;
  f.phase = s.phase;
  f.swing_leg = s.swing_leg;
  f.target = s.target(s.swing_leg);
  return f;
}

/// Deterministic frame sequence from the standing pose, including the
/// initial frame. Stops at the n-th completed step or at the duration.
inline std::vector<FrameOutput> run(const GaitConfig& config, RunLimit limit, GaitState start) {
  config.validate();
  if (!limit.steps && !limit.duration) throw InvalidInput("run needs a step count or a duration");
  if (limit.steps && *limit.steps < 0) throw InvalidInput("step count must be non-negative");
  std::vector<FrameOutput> frames;
  frames.push_back(initial_frame(start));
  GaitState s = std::move(start);
  const int target_steps = limit.steps.value_or(-1);
  const int start_count = s.cycle_count;
  auto finished = [&] {
    if (limit.steps && s.cycle_count - start_count >= target_steps) return true;
    if (limit.duration && s.time >= *limit.duration - 1e-12) return true;
    return false;
  };
  while (!finished()) {
    auto [next, frame] = step_frame(s, config);
    s = std::move(next);
    frames.push_back(std::move(frame));
  }
  return frames;
}

inline std::vector<FrameOutput> run(const GaitConfig& config, RunLimit limit) {
  return run(config, limit, initial_state(config));
}

/// Offset one joint of the leg that plays `role`, clamped to the limits.
/// A clamp is reported by the next frame.
inline GaitState perturb(const GaitState& state, dsl::JointRole role, double offset, const GaitConfig& config) {
  GaitState s = state;
  const Leg leg = dsl::role_is_swing(role) ? s.swing_leg : s.stance_leg();
  LegAngles& a = s.pose.leg(leg);
  const Joint j = dsl::role_joint(role);
  a[j] += offset;
  auto [clamped, flags] = clamp_to_limits(a, config.limits);
  a = clamped;
  if (flags.any()) s.pending_events.push_back(Event::clamped);
  if (leg == s.stance_leg()) s.pose.root = root_for_planted_ankle(s.stance_anchor, a, config.dims);
  return s;
}

}  // namespace gaitfuzz
