#include <cmath>
#include <numbers>
#include <random>

#include "catch_amalgamated.hpp"
#include "gaitfuzz/skeleton.hpp"

using namespace gaitfuzz;
using Catch::Matchers::WithinAbs;

namespace {

LegAngles random_angles(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  return {u(rng), u(rng), u(rng), u(rng)};
}

// Sole direction rotated into the surface frame, measured with atan2.
double rotated_frame_sole(const LegChain& c, double surface) {
  const Vec2 d = c.ball - c.ankle;
  const double x = std::cos(-surface) * d.x - std::sin(-surface) * d.y;
  const double y = std::sin(-surface) * d.x + std::cos(-surface) * d.y;
  return std::atan2(y, x);
}

}  // namespace

TEST_CASE("straight vertical leg in the zero pose") {
  LimbDimensions dims;
  dims.pelvis_height_offset = 0.0;
  Pose pose;
  pose.root = {0.0, 1.0};
  const auto c = forward_kinematics(pose, dims, Leg::left);
  CHECK(c.hip.x == 0.0);
  CHECK(c.hip.y == 1.0);
  CHECK_THAT(c.knee.x, WithinAbs(0.0, 1e-15));
  CHECK_THAT(c.knee.y, WithinAbs(0.55, 1e-15));
  CHECK_THAT(c.ankle.x, WithinAbs(0.0, 1e-15));
  CHECK_THAT(c.ankle.y, WithinAbs(0.10, 1e-15));
  // flat foot pointing forward
  CHECK_THAT(c.ball.x, WithinAbs(0.15, 1e-15));
  CHECK_THAT(c.ball.y, WithinAbs(0.10, 1e-15));
  CHECK_THAT(c.toe.x, WithinAbs(0.22, 1e-15));
}

TEST_CASE("quarter hip rotation moves the knee forward") {
  LimbDimensions dims;
  Pose pose;
  pose.left.hip = std::numbers::pi / 2;
  const auto c = forward_kinematics(pose, dims, Leg::left);
  CHECK_THAT(c.knee.x - c.hip.x, WithinAbs(0.45, 1e-15));
  CHECK_THAT(c.knee.y - c.hip.y, WithinAbs(0.0, 1e-15));
}

TEST_CASE("pelvis offset lowers the hip") {
  Pose pose;
  pose.root = {0.3, 1.0};
  const auto c = forward_kinematics(pose, LimbDimensions{}, Leg::right);
  CHECK(c.hip.x == 0.3);
  CHECK_THAT(c.hip.y, WithinAbs(0.9, 1e-15));
}

TEST_CASE("segment lengths are preserved for random poses") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> len(0.05, 1.0);
  for (int n = 0; n < 5000; ++n) {
    LimbDimensions dims{len(rng), len(rng), len(rng), len(rng), len(rng)};
    Pose pose;
    pose.root = {len(rng) * 10 - 5, len(rng) * 3};
    pose.left = random_angles(rng);
    pose.right = random_angles(rng);
    for (Leg leg : {Leg::left, Leg::right}) {
      const auto c = forward_kinematics(pose, dims, leg);
      CHECK_THAT(distance(c.hip, c.knee), WithinAbs(dims.thigh, 1e-12));
      CHECK_THAT(distance(c.knee, c.ankle), WithinAbs(dims.shank, 1e-12));
      CHECK_THAT(distance(c.ankle, c.ball), WithinAbs(dims.heel_to_ball, 1e-12));
      CHECK_THAT(distance(c.ball, c.toe), WithinAbs(dims.ball_to_toe, 1e-12));
      CHECK_THAT(distance(pose.root, c.hip), WithinAbs(dims.pelvis_height_offset, 1e-12));
    }
  }
}

TEST_CASE("forward kinematics commutes with root translation") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  LimbDimensions dims;
  for (int n = 0; n < 1000; ++n) {
    Pose pose;
    pose.left = random_angles(rng);
    const Vec2 shift{u(rng), u(rng)};
    Pose moved = pose;
    moved.root = pose.root + shift;
    const auto a = forward_kinematics(pose, dims, Leg::left);
    const auto b = forward_kinematics(moved, dims, Leg::left);
    for (auto [p, q] : {std::pair{a.hip, b.hip}, {a.knee, b.knee}, {a.ankle, b.ankle}, {a.ball, b.ball}, {a.toe, b.toe}}) {
      CHECK_THAT(q.x, WithinAbs(p.x + shift.x, 1e-12));
      CHECK_THAT(q.y, WithinAbs(p.y + shift.y, 1e-12));
    }
    CHECK(sole_angle(pose, dims, Leg::left) == sole_angle(moved, dims, Leg::left));
  }
}

TEST_CASE("sole angle examples") {
  LimbDimensions dims;
  Pose pose;
  CHECK(sole_angle(pose, dims, Leg::left) == 0.0);
  pose.left.ankle = 0.2;
  CHECK_THAT(sole_angle(pose, dims, Leg::left), WithinAbs(0.2, 1e-15));

  const double incline = deg_to_rad(10.0);
  Pose flush;
  flush.right.ankle = incline;
  CHECK_THAT(sole_angle(flush, dims, Leg::right, incline), WithinAbs(0.0, 1e-15));
  CHECK_THAT(rotated_frame_sole(forward_kinematics(flush, dims, Leg::right), incline), WithinAbs(0.0, 1e-12));
}

TEST_CASE("sole angle agrees with the rotated-frame oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> surf(-0.5, 0.5);
  LimbDimensions dims;
  for (int n = 0; n < 2000; ++n) {
    Pose pose;
    pose.left = random_angles(rng);
    const double s = surf(rng);
    const double expected = rotated_frame_sole(forward_kinematics(pose, dims, Leg::left), s);
    CHECK_THAT(wrap_angle(sole_angle(pose, dims, Leg::left, s) - expected), WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("sole angle is unchanged when frame and surface rotate together") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LimbDimensions dims;
  for (int n = 0; n < 1000; ++n) {
    Pose pose;
    pose.left = random_angles(rng);
    const double theta = u(rng);
    const double surface = u(rng) * 0.3;
    Pose rotated = pose;
    rotated.left.hip += theta;  // absolute segment angles all shift by theta
    CHECK_THAT(wrap_angle(sole_angle(rotated, dims, Leg::left, surface + theta) - sole_angle(pose, dims, Leg::left, surface)),
               WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("clamping to joint limits") {
  const JointLimits lim;
  LegAngles inside{0.1, 0.5, 0.0, 0.2};
  auto [a, fa] = clamp_to_limits(inside, lim);
  CHECK(a == inside);
  CHECK_FALSE(fa.any());

  auto [b, fb] = clamp_to_limits(LegAngles{0.1, -0.1, 0.0, 0.2}, lim);
  CHECK(b.knee == 0.0);
  CHECK(fb[Joint::knee]);
  CHECK_FALSE(fb[Joint::hip]);

  auto [c, fc] = clamp_to_limits(LegAngles{10, -10, 10, -10}, lim);
  CHECK(c == LegAngles{2.0, 0.0, 0.9, 0.0});
  for (Joint j : kJoints) CHECK(fc[j]);
}

TEST_CASE("two-link solution places the ankle") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ang(-2.5, 2.5);
  std::uniform_real_distribution<double> r(0.05, 0.9);
  const LimbDimensions dims;
  for (int n = 0; n < 2000; ++n) {
    const double a = ang(rng);
    const double len = r(rng);
    const Vec2 hip{0.1, 0.9};
    const Vec2 target = hip + len * limb_direction(a);
    const auto [h, k] = solve_two_link(hip, target, dims);
    CHECK(k >= 0.0);
    const Vec2 knee = hip + dims.thigh * limb_direction(h);
    const Vec2 ankle = knee + dims.shank * limb_direction(h - k);
    CHECK_THAT(distance(ankle, target), WithinAbs(0.0, 1e-9));
  }
  CHECK_THROWS_AS(solve_two_link({0, 1}, {0, 0}, dims), ReachError);
  CHECK_NOTHROW(solve_two_link({0, 1}, {0, 1 - 0.9}, dims));
}

TEST_CASE("planted ankle gives back the root") {
  std::mt19937_64 rng(17);
  const LimbDimensions dims;
  for (int n = 0; n < 500; ++n) {
    Pose pose;
    pose.root = {0.4, 0.95};
    pose.left = random_angles(rng);
    const auto c = forward_kinematics(pose, dims, Leg::left);
    const Vec2 root = root_for_planted_ankle(c.ankle, pose.left, dims);
    CHECK_THAT(root.x, WithinAbs(0.4, 1e-12));
    CHECK_THAT(root.y, WithinAbs(0.95, 1e-12));
  }
}

TEST_CASE("dimension validation") {
  CHECK_NOTHROW(LimbDimensions{}.validate());
  CHECK_THROWS_AS((LimbDimensions{0.0, 0.45, 0.15, 0.07, 0.1}.validate()), InvalidInput);
  CHECK_THROWS_AS((LimbDimensions{0.45, 0.45, 0.15, -0.01, 0.1}.validate()), InvalidInput);
  CHECK_THROWS_AS((LimbDimensions{0.45, std::nan(""), 0.15, 0.07, 0.1}.validate()), InvalidInput);
  CHECK_NOTHROW((LimbDimensions{0.45, 0.45, 0.15, 0.0, 0.0}.validate()));
}

TEST_CASE("angle wrapping") {
  CHECK_THAT(wrap_angle(2 * std::numbers::pi + 0.2831853), WithinAbs(0.2831853, 1e-12));
  CHECK_THAT(wrap_angle(-0.5), WithinAbs(-0.5, 1e-15));
  CHECK_THAT(wrap_angle(std::numbers::pi), WithinAbs(std::numbers::pi, 1e-15));
  CHECK_THAT(wrap_angle(-std::numbers::pi), WithinAbs(std::numbers::pi, 1e-15));
}
