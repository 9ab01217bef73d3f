#pragma once

// Controller input metrics: limb-to-target angle, the hip swing angle
// between thigh and target (level and ascent forms) and its scaling onto
// [-1, 0, +1].

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitfuzz/error.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace gaitfuzz {

/// Where the swing foot should land.
struct FootTarget {
  Vec2 position;                      // ankle (heel) position on touchdown
  Vec2 surface_tangent{1.0, 0.0};     // unit, pointing forward
  double required_knee_flexion = 0.0; // knee flexion at touchdown

  double surface_angle() const noexcept { return std::atan2(surface_tangent.y, surface_tangent.x); }
  bool operator==(const FootTarget&) const = default;
};

/// Signed shortest angular difference target - current, in (-pi, pi].
inline double alpha(double current_angle, double target_angle) noexcept {
  return wrap_angle(target_angle - current_angle);
}

/// Signed angle from direction `from` to direction `to`, counter-clockwise
/// (i.e. forward for limbs hanging down) positive.
inline double signed_angle(Vec2 from, Vec2 to) noexcept { return std::atan2(cross(from, to), dot(from, to)); }

/// Angle at the hip from the thigh to the hip->target segment. Positive when
/// the thigh has to rotate forward (flexion) to point at the target.
inline double delta_level(Vec2 hip, Vec2 knee, const FootTarget& target) {
  const Vec2 thigh = knee - hip;
  const Vec2 to_target = target.position - hip;
  if (thigh.norm() == 0.0) throw GeometryError("hip and knee coincide");
  if (to_target.norm() == 0.0) throw GeometryError("hip and target coincide");
  return signed_angle(thigh, to_target);
}

/// End position of the knee for a leg with `flexion` whose ankle sits at
/// `ankle_end`: the thigh is turned forward of the hip->ankle line by the
/// hip angle of a (thigh, shank) triangle bent by `flexion`.
inline Vec2 knee_end_position(Vec2 hip, const LimbDimensions& dims, Vec2 ankle_end, double flexion) {
  const Vec2 line = ankle_end - hip;
  const double len = line.norm();
  const double reach = dims.thigh + dims.shank;
  if (len == 0.0) throw GeometryError("hip and target coincide");
  if (len > reach + kReachSlack) {
    throw ReachError("target out of reach by " + std::to_string(len - reach) + " m", len - reach);
  }
  const double t = dims.thigh;
  const double s = dims.shank;
  const double chain = std::sqrt(t * t + s * s + 2.0 * t * s * std::cos(flexion));
  const double cos_psi = std::clamp((t * t + chain * chain - s * s) / (2.0 * t * chain), -1.0, 1.0);
  return hip + t * limb_direction(limb_angle(line) + std::acos(cos_psi));
}

/// Hip swing angle for targets reached with a flexed knee: measured against
/// the hip->knee-end segment instead of hip->target. The knee end moves with
/// the hip, so this is re-evaluated every frame.
inline double delta_ascent(Vec2 hip, Vec2 knee, const LimbDimensions& dims, const FootTarget& target) {
  const Vec2 thigh = knee - hip;
  if (thigh.norm() == 0.0) throw GeometryError("hip and knee coincide");
  const Vec2 knee_end = knee_end_position(hip, dims, target.position, target.required_knee_flexion);
  return signed_angle(thigh, knee_end - hip);
}

struct DeltaAnchors {
  double at_start = 0.0;
  double at_zero_rotation = 0.0;
  double at_end = 0.0;

  /// Anchors must be finite, pairwise distinct and strictly monotone.
  bool valid() const noexcept {
    if (!std::isfinite(at_start) || !std::isfinite(at_zero_rotation) || !std::isfinite(at_end)) return false;
    return (at_start < at_zero_rotation && at_zero_rotation < at_end) ||
           (at_start > at_zero_rotation && at_zero_rotation > at_end);
  }
  bool operator==(const DeltaAnchors&) const = default;
};

/// Scaled value is clamped into [-kScaledDeltaLimit, kScaledDeltaLimit].
inline constexpr double kScaledDeltaLimit = 1.2;

/// Piecewise-linear map with knots at_start -> -1, at_zero_rotation -> 0,
/// at_end -> +1, extrapolated linearly and clamped at +-1.2. Non-decreasing
/// along the swing direction (from at_start towards at_end).
inline double scale_delta(double raw, const DeltaAnchors& a) {
  if (!a.valid()) throw ConfigError("delta anchors must be finite, distinct and monotone");
  const double dir = a.at_end > a.at_start ? 1.0 : -1.0;
  double s;
  if (dir * (raw - a.at_zero_rotation) <= 0.0)
    s = -1.0 + (raw - a.at_start) / (a.at_zero_rotation - a.at_start);
  else
    s = (raw - a.at_zero_rotation) / (a.at_end - a.at_zero_rotation);
  return std::clamp(s, -kScaledDeltaLimit, kScaledDeltaLimit);
}

struct DeltaMetric {
  double raw = 0.0;
  double at_start = 0.0;
  double at_zero_rotation = 0.0;
  double at_end = 0.0;
  double scaled = -1.0;

  DeltaAnchors anchors() const noexcept { return {at_start, at_zero_rotation, at_end}; }
  bool operator==(const DeltaMetric&) const = default;
};

}  // namespace gaitfuzz
