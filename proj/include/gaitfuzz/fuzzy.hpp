#pragma once

// Single-output fuzzy controllers: piecewise-linear membership functions,
// min-conjunction rules, max aggregation, and weighted-average
// defuzzification over singleton outputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaitfuzz/error.hpp"

namespace gaitfuzz::fuzzy {

enum class Shape { triangular, trapezoidal, left_shoulder, right_shoulder };

constexpr std::size_t arity(Shape s) noexcept {
  switch (s) {
    case Shape::triangular: return 3;
    case Shape::trapezoidal: return 4;
    case Shape::left_shoulder:
    case Shape::right_shoulder: return 2;
  }
  return 0;
}

/// Keyword used for the shape in controller files.
constexpr std::string_view shape_keyword(Shape s) noexcept {
  switch (s) {
    case Shape::triangular: return "tri";
    case Shape::trapezoidal: return "trap";
    case Shape::left_shoulder: return "lshoulder";
    case Shape::right_shoulder: return "rshoulder";
  }
  return "?";
}

inline std::optional<Shape> shape_from_keyword(std::string_view k) noexcept {
  for (Shape s : {Shape::triangular, Shape::trapezoidal, Shape::left_shoulder, Shape::right_shoulder})
    if (shape_keyword(s) == k) return s;
  return std::nullopt;
}

/// Piecewise-linear membership function. Only the first arity(shape)
/// entries of `points` are meaningful.
struct MembershipFunction {
  Shape shape = Shape::triangular;
  std::array<double, 4> points{};

  static MembershipFunction triangular(double a, double b, double c) { return {Shape::triangular, {a, b, c, 0.0}}; }
  static MembershipFunction trapezoidal(double a, double b, double c, double d) {
    return {Shape::trapezoidal, {a, b, c, d}};
  }
  /// 1 up to a, falling to 0 at b.
  static MembershipFunction left_shoulder(double a, double b) { return {Shape::left_shoulder, {a, b, 0.0, 0.0}}; }
  /// 0 up to a, rising to 1 at b.
  static MembershipFunction right_shoulder(double a, double b) { return {Shape::right_shoulder, {a, b, 0.0, 0.0}}; }

  std::span<const double> breakpoints() const noexcept { return {points.data(), arity(shape)}; }

  bool finite() const noexcept {
    return std::ranges::all_of(breakpoints(), [](double v) { return std::isfinite(v); });
  }

  bool monotone() const noexcept {
    auto bp = breakpoints();
    return std::ranges::is_sorted(bp);
  }

  double degree(double x) const noexcept {
    const auto& p = points;
    double d = 0.0;
    switch (shape) {
      case Shape::triangular:
        if (x == p[1]) d = 1.0;
        else if (x <= p[0] || x >= p[2]) d = 0.0;
        else if (x < p[1]) d = (x - p[0]) / (p[1] - p[0]);
        else d = (p[2] - x) / (p[2] - p[1]);
        break;
      case Shape::trapezoidal:
        if (x >= p[1] && x <= p[2]) d = 1.0;
        else if (x <= p[0] || x >= p[3]) d = 0.0;
        else if (x < p[1]) d = (x - p[0]) / (p[1] - p[0]);
        else d = (p[3] - x) / (p[3] - p[2]);
        break;
      case Shape::left_shoulder:
        if (x <= p[0]) d = 1.0;
        else if (x >= p[1]) d = 0.0;
        else d = (p[1] - x) / (p[1] - p[0]);
        break;
      case Shape::right_shoulder:
        if (x >= p[1]) d = 1.0;
        else if (x <= p[0]) d = 0.0;
        else d = (x - p[0]) / (p[1] - p[0]);
        break;
    }
    return std::clamp(d, 0.0, 1.0);
  }

  /// Reflection x -> -x.
  MembershipFunction mirrored() const noexcept {
    const auto& p = points;
    switch (shape) {
      case Shape::triangular: return triangular(-p[2], -p[1], -p[0]);
      case Shape::trapezoidal: return trapezoidal(-p[3], -p[2], -p[1], -p[0]);
      case Shape::left_shoulder: return right_shoulder(-p[1], -p[0]);
      case Shape::right_shoulder: return left_shoulder(-p[1], -p[0]);
    }
    return *this;
  }

  bool operator==(const MembershipFunction&) const = default;
};

inline double membership_degree(const MembershipFunction& mf, double x) noexcept { return mf.degree(x); }

/// Physical meaning of an input universe. Angles are stored in radians;
/// scalar inputs are dimensionless.
enum class Unit { angle, scalar };

struct Label {
  std::string name;
  MembershipFunction mf;
  bool operator==(const Label&) const = default;
};

struct FuzzyVariable {
  std::string name;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<Label> labels;
  Unit unit = Unit::angle;

  std::optional<std::size_t> label_index(std::string_view label) const noexcept {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i].name == label) return i;
    return std::nullopt;
  }

  double clamp(double x) const noexcept { return std::clamp(x, lo, hi); }

  bool operator==(const FuzzyVariable&) const = default;
};

/// One degree per label, in label order. `x` is clamped into the universe.
inline std::vector<double> fuzzify(const FuzzyVariable& v, double x) {
  if (!std::isfinite(x)) throw InvalidInput("non-finite value for input '" + v.name + "'");
  const double xc = v.clamp(x);
  std::vector<double> out;
  out.reserve(v.labels.size());
  for (const auto& l : v.labels) out.push_back(l.mf.degree(xc));
  return out;
}

struct Singleton {
  std::string name;
  double value = 0.0;  // rad/s
  bool operator==(const Singleton&) const = default;
};

struct OutputVariable {
  std::string name;
  std::vector<Singleton> singletons;

  std::optional<std::size_t> label_index(std::string_view label) const noexcept {
    for (std::size_t i = 0; i < singletons.size(); ++i)
      if (singletons[i].name == label) return i;
    return std::nullopt;
  }

  double min_value() const noexcept {
    double m = singletons.empty() ? 0.0 : singletons.front().value;
    for (const auto& s : singletons) m = std::min(m, s.value);
    return m;
  }
  double max_value() const noexcept {
    double m = singletons.empty() ? 0.0 : singletons.front().value;
    for (const auto& s : singletons) m = std::max(m, s.value);
    return m;
  }

  bool operator==(const OutputVariable&) const = default;
};

struct Clause {
  std::size_t input = 0;
  std::size_t label = 0;
  bool operator==(const Clause&) const = default;
};

/// if <clause> and <clause> ... then output is <consequent>
struct Rule {
  std::vector<Clause> antecedent;
  std::size_t consequent = 0;
  bool operator==(const Rule&) const = default;
};

namespace detail {

// Weighted average of the singletons, kept inside the range of the fired
// ones against rounding; empty when nothing fired.
inline std::optional<double> weighted_average(std::span<const double> strengths, const OutputVariable& out) {
  double num = 0.0;
  double den = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    num += strengths[i] * out.singletons[i].value;
    den += strengths[i];
    if (strengths[i] > 0.0) {
      lo = std::min(lo, out.singletons[i].value);
      hi = std::max(hi, out.singletons[i].value);
    }
  }
  if (!(den > 0.0)) return std::nullopt;
  return std::clamp(num / den, lo, hi);
}

}  // namespace detail

/// Per-input label degrees, as produced by fuzzify().
using Fuzzified = std::vector<std::vector<double>>;

/// Min-conjunction of the clause degrees.
inline double rule_strength(const Rule& rule, const Fuzzified& fuzzified) {
  if (rule.antecedent.empty()) throw ConfigError("rule has no clauses");
  double s = 1.0;
  for (const auto& c : rule.antecedent) {
    if (c.input >= fuzzified.size() || c.label >= fuzzified[c.input].size())
      throw ConfigError("rule clause references an unknown variable or label");
    s = std::min(s, fuzzified[c.input][c.label]);
  }
  return s;
}

/// Weighted average of singletons; `strengths` holds one entry per output label.
inline double defuzzify(std::span<const double> strengths, const OutputVariable& out) {
  if (strengths.size() != out.singletons.size())
    throw InvalidInput("strength count does not match output labels");
  const auto avg = detail::weighted_average(strengths, out);
  if (!avg) throw RuleGapError("no rule fired for output '" + out.name + "'");
  return *avg;
}

inline double defuzzify(const std::map<std::string, double>& strengths, const OutputVariable& out) {
  std::vector<double> s(out.singletons.size(), 0.0);
  for (const auto& [label, v] : strengths) {
    auto i = out.label_index(label);
    if (!i) throw ConfigError("unknown output label '" + label + "'");
    s[*i] = std::max(s[*i], v);
  }
  return defuzzify(s, out);
}

struct Controller {
  std::string name;
  std::vector<FuzzyVariable> inputs;
  OutputVariable output;
  std::vector<Rule> rules;

  std::optional<std::size_t> input_index(std::string_view var) const noexcept {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i].name == var) return i;
    return std::nullopt;
  }

  /// Resolve a rule given by names. Throws ConfigError on unknown names.
  Rule make_rule(const std::vector<std::pair<std::string, std::string>>& clauses,
                 const std::string& consequent) const {
    if (clauses.empty()) throw ConfigError("rule has no clauses");
    Rule r;
    for (const auto& [var, label] : clauses) {
      auto vi = input_index(var);
      if (!vi) throw ConfigError("unknown variable '" + var + "'");
      auto li = inputs[*vi].label_index(label);
      if (!li) throw ConfigError("unknown label '" + label + "'");
      r.antecedent.push_back({*vi, *li});
    }
    auto ci = output.label_index(consequent);
    if (!ci) throw ConfigError("unknown label '" + consequent + "'");
    r.consequent = *ci;
    return r;
  }

  bool operator==(const Controller&) const = default;
};

namespace detail {

inline std::string describe_point(const Controller& c, std::span<const double> x) {
  std::ostringstream os;
  os << "no rule of controller '" << c.name << "' fires at ";
  for (std::size_t i = 0; i < x.size() && i < c.inputs.size(); ++i) {
    if (i) os << ", ";
    os << c.inputs[i].name << '=' << x[i];
  }
  return os.str();
}

// Aggregated (max) firing strength per output label, written into `agg`.
inline void aggregate(const Controller& c, std::span<const double> clamped, std::span<double> agg) {
  std::ranges::fill(agg, 0.0);
  for (const auto& r : c.rules) {
    double s = 1.0;
    for (const auto& cl : r.antecedent) s = std::min(s, c.inputs[cl.input].labels[cl.label].mf.degree(clamped[cl.input]));
    agg[r.consequent] = std::max(agg[r.consequent], s);
  }
}

}  // namespace detail

/// Crisp output for one value per input variable (positional).
inline double evaluate(const Controller& c, std::span<const double> x) {
  if (x.size() != c.inputs.size())
    throw InvalidInput("controller '" + c.name + "' expects " + std::to_string(c.inputs.size()) + " input(s)");
  std::array<double, 2> clamped{};
  if (x.size() > clamped.size() || x.empty())
    throw InvalidInput("controller '" + c.name + "' must have one or two inputs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InvalidInput("non-finite value for input '" + c.inputs[i].name + "'");
    clamped[i] = c.inputs[i].clamp(x[i]);
  }
  constexpr std::size_t kStack = 32;
  std::array<double, kStack> stack{};
  std::vector<double> heap;
  std::span<double> agg;
  if (c.output.singletons.size() <= kStack) {
    agg = std::span<double>(stack.data(), c.output.singletons.size());
  } else {
    heap.resize(c.output.singletons.size());
    agg = heap;
  }
  detail::aggregate(c, std::span<const double>(clamped.data(), x.size()), agg);
  const auto avg = detail::weighted_average(agg, c.output);
  if (!avg) throw RuleGapError(detail::describe_point(c, x));
  return *avg;
}

inline double evaluate(const Controller& c, std::initializer_list<double> x) {
  return evaluate(c, std::span<const double>(x.begin(), x.size()));
}

/// Named-input form. Every declared input must be present.
inline double evaluate(const Controller& c, const std::map<std::string, double>& inputs) {
  std::array<double, 2> x{};
  if (c.inputs.size() > x.size()) throw InvalidInput("controller '" + c.name + "' has too many inputs");
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    auto it = inputs.find(c.inputs[i].name);
    if (it == inputs.end()) throw InvalidInput("missing input '" + c.inputs[i].name + "'");
    x[i] = it->second;
  }
  return evaluate(c, std::span<const double>(x.data(), c.inputs.size()));
}

struct SurfacePoint {
  std::array<double, 2> x{};
  double y = 0.0;
};

/// Uniform grid over the input universe(s): resolution points per axis.
inline std::vector<SurfacePoint> sample_surface(const Controller& c, std::size_t resolution) {
  if (resolution < 2) throw InvalidInput("surface resolution must be at least 2");
  if (c.inputs.empty() || c.inputs.size() > 2) throw ConfigError("controller must have one or two inputs");
  auto at = [&](const FuzzyVariable& v, std::size_t i) {
    return v.lo + (v.hi - v.lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
  };
  std::vector<SurfacePoint> out;
  if (c.inputs.size() == 1) {
    out.reserve(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
      SurfacePoint p;
      p.x[0] = at(c.inputs[0], i);
      p.y = evaluate(c, std::span<const double>(p.x.data(), 1));
      out.push_back(p);
    }
  } else {
    out.reserve(resolution * resolution);
    for (std::size_t i = 0; i < resolution; ++i)
      for (std::size_t j = 0; j < resolution; ++j) {
        SurfacePoint p;
        p.x = {at(c.inputs[0], i), at(c.inputs[1], j)};
        p.y = evaluate(c, std::span<const double>(p.x.data(), 2));
        out.push_back(p);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

/// Grid size used for the coverage and rule-completeness checks.
inline constexpr std::size_t kValidationGrid = 1024;

enum class IssueKind {
  bad_arity,
  empty_name,
  no_labels,
  duplicate_name,
  bad_range,
  non_finite,
  non_monotone,
  coverage_gap,
  rule_gap,
  bad_rule,
};

constexpr std::string_view issue_code(IssueKind k) noexcept {
  switch (k) {
    case IssueKind::bad_arity: return "bad-arity";
    case IssueKind::empty_name: return "empty-name";
    case IssueKind::no_labels: return "no-labels";
    case IssueKind::duplicate_name: return "duplicate-name";
    case IssueKind::bad_range: return "bad-range";
    case IssueKind::non_finite: return "non-finite";
    case IssueKind::non_monotone: return "non-monotone";
    case IssueKind::coverage_gap: return "coverage-gap";
    case IssueKind::rule_gap: return "rule-gap";
    case IssueKind::bad_rule: return "bad-rule";
  }
  return "unknown";
}

/// A validation problem. Indices locate the offending item (-1 when n/a);
/// `label` refers to an input label, or to a singleton when `input` is -1.
struct Issue {
  IssueKind kind;
  std::string message;
  int input = -1;
  int label = -1;
  int rule = -1;
};

namespace detail {

inline double grid_point(const FuzzyVariable& v, std::size_t i) {
  return v.lo + (v.hi - v.lo) * static_cast<double>(i) / static_cast<double>(kValidationGrid - 1);
}

}  // namespace detail

/// All invariant violations of a controller; empty when valid.
inline std::vector<Issue> validate(const Controller& c) {
  std::vector<Issue> issues;
  auto add = [&](IssueKind k, std::string msg, int in = -1, int lab = -1, int rule = -1) {
    issues.push_back({k, std::move(msg), in, lab, rule});
  };

  if (c.inputs.empty() || c.inputs.size() > 2)
    add(IssueKind::bad_arity, "controller '" + c.name + "' must have one or two inputs");
  for (std::size_t i = 0; i < c.inputs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (c.inputs[i].name == c.inputs[j].name)
        add(IssueKind::duplicate_name, "duplicate input '" + c.inputs[i].name + "'", static_cast<int>(i));

  bool shapes_ok = true;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    const auto& v = c.inputs[i];
    const int ii = static_cast<int>(i);
    if (!std::isfinite(v.lo) || !std::isfinite(v.hi) || !(v.lo < v.hi)) {
      add(IssueKind::bad_range, "input '" + v.name + "' needs a finite range with lo < hi", ii);
      shapes_ok = false;
    }
    if (v.labels.empty()) {
      add(IssueKind::no_labels, "input '" + v.name + "' has no labels", ii);
      shapes_ok = false;
    }
    for (std::size_t l = 0; l < v.labels.size(); ++l) {
      const auto& lab = v.labels[l];
      const int li = static_cast<int>(l);
      for (std::size_t m = 0; m < l; ++m)
        if (v.labels[m].name == lab.name) add(IssueKind::duplicate_name, "duplicate label '" + lab.name + "'", ii, li);
      if (!lab.mf.finite()) {
        add(IssueKind::non_finite, "non-finite breakpoints in label '" + lab.name + "'", ii, li);
        shapes_ok = false;
      } else if (!lab.mf.monotone()) {
        add(IssueKind::non_monotone, "non-monotone breakpoints in label '" + lab.name + "'", ii, li);
        shapes_ok = false;
      }
    }
  }

  if (c.output.singletons.empty()) add(IssueKind::no_labels, "output '" + c.output.name + "' has no labels");
  for (std::size_t l = 0; l < c.output.singletons.size(); ++l) {
    const auto& s = c.output.singletons[l];
    for (std::size_t m = 0; m < l; ++m)
      if (c.output.singletons[m].name == s.name)
        add(IssueKind::duplicate_name, "duplicate label '" + s.name + "'", -1, static_cast<int>(l));
    if (!std::isfinite(s.value))
      add(IssueKind::non_finite, "non-finite value for label '" + s.name + "'", -1, static_cast<int>(l));
  }

  bool rules_ok = true;
  for (std::size_t r = 0; r < c.rules.size(); ++r) {
    const auto& rule = c.rules[r];
    bool ok = !rule.antecedent.empty() && rule.consequent < c.output.singletons.size();
    for (const auto& cl : rule.antecedent)
      ok = ok && cl.input < c.inputs.size() && cl.label < c.inputs[cl.input].labels.size();
    if (!ok) {
      add(IssueKind::bad_rule, "rule " + std::to_string(r + 1) + " references unknown variables or labels", -1, -1,
          static_cast<int>(r));
      rules_ok = false;
    }
  }
  if (c.rules.empty()) {
    add(IssueKind::rule_gap, "controller '" + c.name + "' has no rules");
    rules_ok = false;
  }

  if (!shapes_ok || c.inputs.empty() || c.inputs.size() > 2) return issues;

  // Per-axis degree tables on the validation grid.
  std::vector<std::vector<std::vector<double>>> table(c.inputs.size());
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    const auto& v = c.inputs[i];
    table[i].assign(v.labels.size(), std::vector<double>(kValidationGrid));
    bool reported = false;
    for (std::size_t g = 0; g < kValidationGrid; ++g) {
      const double x = detail::grid_point(v, g);
      double best = 0.0;
      for (std::size_t l = 0; l < v.labels.size(); ++l) {
        table[i][l][g] = v.labels[l].mf.degree(x);
        best = std::max(best, table[i][l][g]);
      }
      if (!(best > 0.0) && !reported) {
        std::ostringstream os;
        os << "input '" << v.name << "' is not covered by any label at " << x;
        add(IssueKind::coverage_gap, os.str(), static_cast<int>(i));
        reported = true;
      }
    }
  }
  if (!rules_ok) return issues;

  const std::size_t n1 = c.inputs.size() == 2 ? kValidationGrid : 1;
  for (std::size_t g0 = 0; g0 < kValidationGrid; ++g0) {
    for (std::size_t g1 = 0; g1 < n1; ++g1) {
      const std::array<std::size_t, 2> g{g0, g1};
      bool fired = false;
      for (const auto& rule : c.rules) {
        double s = 1.0;
        for (const auto& cl : rule.antecedent) s = std::min(s, table[cl.input][cl.label][g[cl.input]]);
        if (s > 0.0) {
          fired = true;
          break;
        }
      }
      if (!fired) {
        std::array<double, 2> x{detail::grid_point(c.inputs[0], g0),
                                c.inputs.size() == 2 ? detail::grid_point(c.inputs[1], g1) : 0.0};
        add(IssueKind::rule_gap, detail::describe_point(c, std::span<const double>(x.data(), c.inputs.size())));
        return issues;
      }
    }
  }
  return issues;
}

/// Throws ConfigError carrying the first validation issue.
inline void check(const Controller& c) {
  auto issues = validate(c);
  if (!issues.empty()) throw ConfigError(issues.front().message);
}

/// Reflection of every universe, breakpoint and singleton through zero.
inline Controller mirrored(const Controller& c) {
  Controller m = c;
  for (auto& v : m.inputs) {
    v.lo = -c.inputs[&v - m.inputs.data()].hi;
    v.hi = -c.inputs[&v - m.inputs.data()].lo;
    for (auto& l : v.labels) l.mf = l.mf.mirrored();
  }
  for (auto& s : m.output.singletons) s.value = -s.value;
  return m;
}

}  // namespace gaitfuzz::fuzzy
