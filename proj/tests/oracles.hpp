#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's evaluation code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gaitfuzz/dsl.hpp"
#include "gaitfuzz/fuzzy.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace oracle {

using gaitfuzz::fuzzy::Controller;
using gaitfuzz::fuzzy::MembershipFunction;
using gaitfuzz::fuzzy::Shape;

/// Membership as linear interpolation through the shape's (x, degree)
/// knots, held constant outside the first and last knot.
inline double knot_degree(const MembershipFunction& mf, double x) {
  std::vector<std::pair<double, double>> k;
  const auto& p = mf.points;
  switch (mf.shape) {
    case Shape::triangular: k = {{p[0], 0}, {p[1], 1}, {p[2], 0}}; break;
    case Shape::trapezoidal: k = {{p[0], 0}, {p[1], 1}, {p[2], 1}, {p[3], 0}}; break;
    case Shape::left_shoulder: k = {{p[0], 1}, {p[1], 0}}; break;
    case Shape::right_shoulder: k = {{p[0], 0}, {p[1], 1}}; break;
  }
  if (x <= k.front().first) return k.front().second;
  if (x >= k.back().first) return k.back().second;
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (x <= k[i].first) {
      const auto [x0, y0] = k[i - 1];
      const auto [x1, y1] = k[i];
      if (x1 == x0) return std::max(y0, y1);
      return y0 + (x - x0) * (y1 - y0) / (x1 - x0);
    }
  }
  return k.back().second;
}

/// Naive fuzzify / min / max / weighted average.
inline double reference_evaluate(const Controller& c, const std::vector<double>& x) {
  std::vector<double> xc(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xc[i] = std::min(std::max(x[i], c.inputs[i].lo), c.inputs[i].hi);
  std::vector<double> best(c.output.singletons.size(), 0.0);
  for (const auto& r : c.rules) {
    double s = 1.0;
    for (const auto& cl : r.antecedent) s = std::min(s, knot_degree(c.inputs[cl.input].labels[cl.label].mf, xc[cl.input]));
    if (s > best[r.consequent]) best[r.consequent] = s;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < best.size(); ++i) {
    num += best[i] * c.output.singletons[i].value;
    den += best[i];
  }
  return num / den;
}

/// Random strictly increasing knots spanning [lo, hi].
inline std::vector<double> random_knots(std::mt19937_64& rng, double lo, double hi, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n - 1);
  double total = 0.0;
  for (auto& v : w) total += (v = 0.2 + u(rng));
  std::vector<double> k{lo};
  for (int i = 0; i + 1 < n - 1; ++i) k.push_back(k.back() + (hi - lo) * w[i] / total);
  k.push_back(hi);
  return k;
}

/// Controllers complete by construction: each input carries a partition of
/// unity (shoulders plus triangles on random knots), every combination of
/// those labels has a rule, and a few extra labels and rules are mixed in.
/// `inputs` fixes the input count (0 = random).
inline Controller random_controller(std::mt19937_64& rng, int inputs = 0) {
  using namespace gaitfuzz::fuzzy;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> labels_n(2, 5);
  Controller c;
  c.name = "random";
  const int n_inputs = inputs > 0 ? inputs : (u(rng) < 0.5 ? 1 : 2);
  std::vector<std::size_t> partition_size;
  for (int i = 0; i < n_inputs; ++i) {
    FuzzyVariable v;
    v.name = "in" + std::to_string(i);
    const double lo = -10.0 + 9.0 * u(rng);
    v.lo = lo;
    v.hi = lo + 0.5 + 20.0 * u(rng);
    const int n = labels_n(rng);
    const auto k = random_knots(rng, v.lo, v.hi, n);
    for (int j = 0; j < n; ++j) {
      MembershipFunction mf = j == 0       ? MembershipFunction::left_shoulder(k[0], k[1])
                              : j == n - 1 ? MembershipFunction::right_shoulder(k[n - 2], k[n - 1])
                                           : MembershipFunction::triangular(k[j - 1], k[j], k[j + 1]);
      v.labels.push_back({"p" + std::to_string(j), mf});
    }
    partition_size.push_back(v.labels.size());
    // extra overlapping labels
    const int extra = static_cast<int>(u(rng) * 3);
    for (int e = 0; e < extra; ++e) {
      std::vector<double> q(4);
      for (auto& x : q) x = v.lo + (v.hi - v.lo) * u(rng);
      std::sort(q.begin(), q.end());
      MembershipFunction mf = u(rng) < 0.5 ? MembershipFunction::triangular(q[0], q[1], q[3])
                                           : MembershipFunction::trapezoidal(q[0], q[1], q[2], q[3]);
      v.labels.push_back({"x" + std::to_string(e), mf});
    }
    c.inputs.push_back(std::move(v));
  }
  c.output.name = "out";
  const int n_out = 1 + static_cast<int>(u(rng) * 4);
  for (int j = 0; j < n_out; ++j) c.output.singletons.push_back({"o" + std::to_string(j), -300.0 + 600.0 * u(rng)});
  std::uniform_int_distribution<std::size_t> out_pick(0, c.output.singletons.size() - 1);
  if (n_inputs == 1) {
    for (std::size_t a = 0; a < partition_size[0]; ++a) c.rules.push_back({{{0, a}}, out_pick(rng)});
  } else {
    for (std::size_t a = 0; a < partition_size[0]; ++a)
      for (std::size_t b = 0; b < partition_size[1]; ++b) c.rules.push_back({{{0, a}, {1, b}}, out_pick(rng)});
  }
  const int extra_rules = static_cast<int>(u(rng) * 3);
  for (int e = 0; e < extra_rules; ++e) {
    Rule r;
    for (int i = 0; i < n_inputs; ++i) {
      if (i > 0 && u(rng) < 0.5) continue;
      std::uniform_int_distribution<std::size_t> lab(0, c.inputs[i].labels.size() - 1);
      r.antecedent.push_back({static_cast<std::size_t>(i), lab(rng)});
    }
    r.consequent = out_pick(rng);
    c.rules.push_back(r);
  }
  return c;
}

/// Random input vector, sometimes outside the universe, sometimes on a knot.
inline std::vector<double> random_input(std::mt19937_64& rng, const Controller& c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  for (const auto& v : c.inputs) {
    const double r = u(rng);
    if (r < 0.1) x.push_back(v.lo - 5.0 * u(rng));
    else if (r < 0.2) x.push_back(v.hi + 5.0 * u(rng));
    else if (r < 0.35) {
      const auto& l = v.labels[static_cast<std::size_t>(u(rng) * v.labels.size())];
      x.push_back(l.mf.breakpoints()[static_cast<std::size_t>(u(rng) * l.mf.breakpoints().size())]);
    } else x.push_back(v.lo + (v.hi - v.lo) * u(rng));
  }
  return x;
}

// Nearest double to v rounded to a multiple of q (q = 10^-n).
inline double round_to(double v, double q) {
  const double inv = std::round(1.0 / q);
  return std::round(v * inv) / inv;
}

/// Random valid controller set whose values survive canonical text exactly:
/// breakpoints and singletons are rounded to 1e-3 in the file's units.
/// Roughly half the sets carry a complete binding table for one gait mode.
inline gaitfuzz::dsl::ControllerSet random_set(std::mt19937_64& rng) {
  using namespace gaitfuzz;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dsl::ControllerSet set;
  const int n = 1 + static_cast<int>(u(rng) * 4);
  for (int i = 0; i < n; ++i) {
    auto c = random_controller(rng, i == 0 ? 1 : 0);
    c.name = "ctl_" + std::to_string(i);
    for (auto& v : c.inputs) {
      v.unit = u(rng) < 0.5 ? fuzzy::Unit::angle : fuzzy::Unit::scalar;
      const bool angle = v.unit == fuzzy::Unit::angle;
      auto fix = [&](double x) {
        const double r = round_to(x, 1e-3);
        return angle ? r * deg_to_rad(1.0) : r;  // as the parser converts
      };
      v.lo = fix(v.lo);
      v.hi = fix(v.hi);
      for (auto& l : v.labels)
        for (std::size_t k = 0; k < fuzzy::arity(l.mf.shape); ++k) l.mf.points[k] = fix(l.mf.points[k]);
    }
    for (auto& s : c.output.singletons) s.value = deg_to_rad(round_to(s.value, 1e-3));
    set.controllers.push_back(std::move(c));
  }
  if (u(rng) < 0.5) {
    const auto mode = u(rng) < 0.5 ? dsl::GaitMode::level : dsl::GaitMode::ascent;
    std::vector<const fuzzy::Controller*> single;
    for (const auto& c : set.controllers)
      if (c.inputs.size() == 1) single.push_back(&c);
    for (auto role : dsl::kJointRoles) {
      const auto* c = single[static_cast<std::size_t>(u(rng) * single.size())];
      const auto metric = c->inputs[0].unit == fuzzy::Unit::scalar ? dsl::Metric::delta_scaled
                          : u(rng) < 0.5                          ? dsl::Metric::alpha
                                                                  : dsl::Metric::sole_angle;
      set.bindings.push_back({mode, role, c->name, metric});
    }
  }
  return set;
}

}  // namespace oracle
