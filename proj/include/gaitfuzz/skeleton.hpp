#pragma once

// Sagittal-plane biped rig: two legs with hip, knee, ankle and ball joints.
//
// Frame: x forward, y up. Conventions, all in radians:
//   hip    0 = thigh straight down, positive = flexion (thigh forward)
//   knee   0 = shank collinear with thigh, positive = flexion (shank back)
//   ankle  0 = sole perpendicular to shank, positive = toes up
//   ball   0 = toes in line with the sole, positive = toes up
// In the zero pose on flat ground the sole is flush with the ground. The
// ankle point doubles as the heel; the sole runs ankle -> ball -> toe.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include "gaitfuzz/error.hpp"

namespace gaitfuzz {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return {s * a.x, s * a.y}; }
  constexpr Vec2& operator+=(Vec2 b) noexcept { return *this = *this + b; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const noexcept { return std::hypot(x, y); }
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) noexcept { return (a - b).norm(); }

/// Wrap into (-pi, pi].
inline double wrap_angle(double a) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

/// Unit vector of a limb at `angle` from straight down (positive = forward).
inline Vec2 limb_direction(double angle) noexcept { return {std::sin(angle), -std::cos(angle)}; }

/// Angle from straight down of a direction vector (inverse of limb_direction).
inline double limb_angle(Vec2 d) noexcept { return std::atan2(d.x, -d.y); }

inline constexpr double deg_to_rad(double d) noexcept { return d * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double r) noexcept { return r * 180.0 / std::numbers::pi; }

enum class Leg { left, right };
constexpr Leg other(Leg l) noexcept { return l == Leg::left ? Leg::right : Leg::left; }
constexpr std::string_view leg_name(Leg l) noexcept { return l == Leg::left ? "left" : "right"; }

enum class Joint { hip, knee, ankle, ball };
inline constexpr std::array<Joint, 4> kJoints{Joint::hip, Joint::knee, Joint::ankle, Joint::ball};
constexpr std::string_view joint_name(Joint j) noexcept {
  switch (j) {
    case Joint::hip: return "hip";
    case Joint::knee: return "knee";
    case Joint::ankle: return "ankle";
    case Joint::ball: return "ball";
  }
  return "?";
}

struct LimbDimensions {
  double thigh = 0.45;
  double shank = 0.45;
  double heel_to_ball = 0.15;
  double ball_to_toe = 0.07;
  double pelvis_height_offset = 0.10;

  double leg_length() const noexcept { return thigh + shank; }
  double foot_length() const noexcept { return heel_to_ball + ball_to_toe; }

  /// Throws InvalidInput when a dimension is non-finite or out of range.
  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!std::isfinite(v) || !(v > 0.0)) throw InvalidInput(std::string(what) + " must be finite and > 0");
    };
    auto non_negative = [](double v, const char* what) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput(std::string(what) + " must be finite and >= 0");
    };
    positive(thigh, "thigh");
    positive(shank, "shank");
    positive(heel_to_ball, "heel_to_ball");
    non_negative(ball_to_toe, "ball_to_toe");
    non_negative(pelvis_height_offset, "pelvis_height_offset");
  }

  bool operator==(const LimbDimensions&) const = default;
};

struct LegAngles {
  double hip = 0.0;
  double knee = 0.0;
  double ankle = 0.0;
  double ball = 0.0;

  double& operator[](Joint j) noexcept {
    switch (j) {
      case Joint::hip: return hip;
      case Joint::knee: return knee;
      case Joint::ankle: return ankle;
      case Joint::ball: break;
    }
    return ball;
  }
  double operator[](Joint j) const noexcept { return const_cast<LegAngles&>(*this)[j]; }

  bool operator==(const LegAngles&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct JointLimits {
  Interval hip{-0.7, 2.0};
  Interval knee{0.0, 2.6};
  Interval ankle{-0.9, 0.9};
  Interval ball{0.0, 1.0};

  Interval operator[](Joint j) const noexcept {
    switch (j) {
      case Joint::hip: return hip;
      case Joint::knee: return knee;
      case Joint::ankle: return ankle;
      case Joint::ball: break;
    }
    return ball;
  }
  bool operator==(const JointLimits&) const = default;
};

struct Pose {
  Vec2 root{0.0, 1.0};
  LegAngles left;
  LegAngles right;

  LegAngles& leg(Leg l) noexcept { return l == Leg::left ? left : right; }
  const LegAngles& leg(Leg l) const noexcept { return l == Leg::left ? left : right; }
  bool operator==(const Pose&) const = default;
};

/// World positions of one leg, hip to toe.
struct LegChain {
  Vec2 hip, knee, ankle, ball, toe;
};

inline Vec2 hip_position(Vec2 root, const LimbDimensions& dims) noexcept {
  return {root.x, root.y - dims.pelvis_height_offset};
}

/// Absolute shank angle from straight down.
inline double shank_angle(const LegAngles& a) noexcept { return a.hip - a.knee; }

/// Absolute sole direction, counter-clockwise from +x.
inline double foot_angle(const LegAngles& a) noexcept { return shank_angle(a) + a.ankle; }

inline LegChain forward_kinematics(Vec2 root, const LegAngles& a, const LimbDimensions& dims) noexcept {
  LegChain c;
  c.hip = hip_position(root, dims);
  c.knee = c.hip + dims.thigh * limb_direction(a.hip);
  c.ankle = c.knee + dims.shank * limb_direction(shank_angle(a));
  const double sole = foot_angle(a);
  c.ball = c.ankle + dims.heel_to_ball * Vec2{std::cos(sole), std::sin(sole)};
  const double toes = sole + a.ball;
  c.toe = c.ball + dims.ball_to_toe * Vec2{std::cos(toes), std::sin(toes)};
  return c;
}

inline LegChain forward_kinematics(const Pose& pose, const LimbDimensions& dims, Leg leg) noexcept {
  return forward_kinematics(pose.root, pose.leg(leg), dims);
}

/// Root position that puts the leg's ankle at `ankle` for the given angles.
inline Vec2 root_for_planted_ankle(Vec2 ankle, const LegAngles& a, const LimbDimensions& dims) noexcept {
  const LegChain at_origin = forward_kinematics(Vec2{0.0, 0.0}, a, dims);
  return ankle - at_origin.ankle;
}

/// Signed angle of the heel->ball sole segment relative to a surface whose
/// tangent makes `surface_angle` with +x. Zero when flush, positive toes up.
inline double sole_angle(const Pose& pose, const LimbDimensions& /*dims*/, Leg leg, double surface_angle = 0.0) noexcept {
  return wrap_angle(foot_angle(pose.leg(leg)) - surface_angle);
}

/// Rounding slack when a limb is asked to be exactly straight.
inline constexpr double kReachSlack = 1e-9;

struct ClampFlags {
  std::array<bool, 4> joint{};
  bool any() const noexcept { return joint[0] || joint[1] || joint[2] || joint[3]; }
  bool operator[](Joint j) const noexcept { return joint[static_cast<std::size_t>(j)]; }
};

inline std::pair<LegAngles, ClampFlags> clamp_to_limits(const LegAngles& angles, const JointLimits& limits) noexcept {
  LegAngles out = angles;
  ClampFlags flags;
  for (Joint j : kJoints) {
    const Interval lim = limits[j];
    const double v = angles[j];
    const double c = v < lim.lo ? lim.lo : (v > lim.hi ? lim.hi : v);
    out[j] = c;
    flags.joint[static_cast<std::size_t>(j)] = c != v;
  }
  return {out, flags};
}

/// Hip and knee angles placing the ankle at `ankle` with the knee bent
/// forward. Throws ReachError when the ankle is out of reach.
inline std::pair<double, double> solve_two_link(Vec2 hip, Vec2 ankle, const LimbDimensions& dims) {
  const Vec2 d = ankle - hip;
  const double len = d.norm();
  const double t = dims.thigh;
  const double s = dims.shank;
  if (len > t + s + kReachSlack) throw ReachError("target out of reach by " + std::to_string(len - (t + s)) + " m", len - (t + s));
  if (len < std::abs(t - s) || len == 0.0)
    throw ReachError("target too close to the hip for the limb lengths", std::abs(t - s) - len);
  const double cos_knee = std::clamp((len * len - t * t - s * s) / (2.0 * t * s), -1.0, 1.0);
  const double knee = std::acos(cos_knee);
  const double cos_psi = std::clamp((t * t + len * len - s * s) / (2.0 * t * len), -1.0, 1.0);
  return {limb_angle(d) + std::acos(cos_psi), knee};
}

}  // namespace gaitfuzz
