#pragma once

// Joint-angle curves over the gait cycle (heel strike to heel strike of the
// same leg), CSV/JSON export and import, summaries and RMS comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaitfuzz/engine.hpp"
#include "gaitfuzz/error.hpp"
#include "gaitfuzz/json_io.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace gaitfuzz {

inline constexpr std::size_t kCurveCount = 8;

/// Column order of every export: left leg hip..ball, then right leg.
inline constexpr std::array<std::string_view, kCurveCount> kCurveNames{
    "left_hip", "left_knee", "left_ankle", "left_ball", "right_hip", "right_knee", "right_ankle", "right_ball"};

inline std::optional<std::size_t> curve_index(std::string_view name) {
  for (std::size_t i = 0; i < kCurveCount; ++i)
    if (kCurveNames[i] == name) return i;
  return std::nullopt;
}

struct CurveMeta {
  double step_length = 0.0;
  std::string terrain = "flat";
  LimbDimensions dims;
  double dt = 0.0;
  bool operator==(const CurveMeta&) const = default;
};

struct CurveCycle {
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t first = 0;  // index of the first sample
  std::size_t count = 0;
  bool operator==(const CurveCycle&) const = default;
};

/// All series share the sample instants in `percent`; cycles are stored
/// back to back.
struct CurveSet {
  CurveMeta meta;
  std::vector<double> percent;
  std::array<std::vector<double>, kCurveCount> angles;  // radians
  std::vector<CurveCycle> cycles;

  std::size_t size() const noexcept { return percent.size(); }
  bool empty() const noexcept { return percent.empty(); }
  bool operator==(const CurveSet&) const = default;
};

inline double pose_angle(const Pose& p, std::size_t curve) noexcept {
  return p.leg(curve < 4 ? Leg::left : Leg::right)[kJoints[curve % 4]];
}

/// Cycles run between successive completions of the leg that lands first.
inline CurveSet record(const std::vector<FrameOutput>& frames, CurveMeta meta = {}) {
  std::vector<std::size_t> strikes;
  std::optional<Leg> leg;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].has(Event::step_completed)) continue;
    if (!leg) leg = frames[i].swing_leg;
    if (frames[i].swing_leg == *leg) strikes.push_back(i);
  }
  if (strikes.size() < 2) throw EmptyCycleError("no complete gait cycle in the frames");
  CurveSet cs;
  cs.meta = std::move(meta);
  for (std::size_t c = 0; c + 1 < strikes.size(); ++c) {
    const double t0 = frames[strikes[c]].time;
    const double t1 = frames[strikes[c + 1]].time;
    CurveCycle cyc{t0, t1, cs.size(), 0};
    for (std::size_t i = strikes[c]; i <= strikes[c + 1]; ++i) {
      cs.percent.push_back(100.0 * (frames[i].time - t0) / (t1 - t0));
      for (std::size_t k = 0; k < kCurveCount; ++k) cs.angles[k].push_back(pose_angle(frames[i].pose, k));
      ++cyc.count;
    }
    cs.cycles.push_back(cyc);
  }
  return cs;
}

enum class CurveFormat { csv, json };

inline std::string export_csv(const CurveSet& cs) {
  std::ostringstream os;
  os << "cycle_percent";
  for (auto n : kCurveNames) os << ',' << n;
  os << '\n' << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    os << cs.percent[i];
    for (std::size_t k = 0; k < kCurveCount; ++k) {
      double d = rad_to_deg(cs.angles[k][i]);
      if (std::abs(d) < 5e-7) d = 0.0;  // no "-0.000000"
      os << ',' << d;
    }
    os << '\n';
  }
  return os.str();
}

inline json curves_to_json(const CurveSet& cs) {
  json series = json::object();
  for (std::size_t k = 0; k < kCurveCount; ++k) {
    json points = json::array();
    for (std::size_t i = 0; i < cs.size(); ++i) points.push_back(json::array({cs.percent[i], cs.angles[k][i]}));
    series[std::string(kCurveNames[k])] = std::move(points);
  }
  json cycles = json::array();
  for (const auto& c : cs.cycles)
    cycles.push_back({{"start_time", c.start_time}, {"end_time", c.end_time}, {"samples", c.count}});
  return {{"meta",
           {{"step_length", cs.meta.step_length},
            {"terrain", cs.meta.terrain},
            {"dims", to_json(cs.meta.dims)},
            {"dt", cs.meta.dt}}},
          {"series", series},
          {"cycles", cycles}};
}

inline std::string export_json(const CurveSet& cs) { return curves_to_json(cs).dump(2) + "\n"; }

inline std::string export_curves(const CurveSet& cs, CurveFormat f) {
  return f == CurveFormat::csv ? export_csv(cs) : export_json(cs);
}

/// Checks the shared-instant and per-cycle ordering invariants.
inline void check_curves(const CurveSet& cs) {
  for (const auto& a : cs.angles)
    if (a.size() != cs.size()) throw InvalidInput("curve series differ in length");
  std::size_t next = 0;
  for (const auto& c : cs.cycles) {
    if (c.first != next || c.count == 0 || c.first + c.count > cs.size()) throw InvalidInput("bad cycle layout");
    for (std::size_t i = c.first + 1; i < c.first + c.count; ++i)
      if (!(cs.percent[i] > cs.percent[i - 1])) throw InvalidInput("cycle percent must increase within a cycle");
    next += c.count;
  }
  if (next != cs.size()) throw InvalidInput("cycles do not cover all samples");
  for (double p : cs.percent)
    if (!std::isfinite(p) || p < 0.0 || p > 100.0) throw InvalidInput("cycle percent out of [0, 100]");
}

inline CurveSet curves_from_json(const json& j) {
  try {
    CurveSet cs;
    const json& m = j.at("meta");
    cs.meta.step_length = m.at("step_length").get<double>();
    cs.meta.terrain = m.at("terrain").get<std::string>();
    cs.meta.dims = dims_from_json(m.at("dims"));
    cs.meta.dt = m.at("dt").get<double>();
    const json& series = j.at("series");
    bool first = true;
    for (std::size_t k = 0; k < kCurveCount; ++k) {
      const json& pts = series.at(std::string(kCurveNames[k]));
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double p = pts.at(i).at(0).get<double>();
        if (first) cs.percent.push_back(p);
        else if (i >= cs.percent.size() || cs.percent[i] != p)
          throw InvalidInput("series '" + std::string(kCurveNames[k]) + "' does not share sample instants");
        cs.angles[k].push_back(pts.at(i).at(1).get<double>());
      }
      first = false;
    }
    std::size_t next = 0;
    for (const auto& c : j.at("cycles")) {
      CurveCycle cyc{c.at("start_time").get<double>(), c.at("end_time").get<double>(), next,
                     c.at("samples").get<std::size_t>()};
      next += cyc.count;
      cs.cycles.push_back(cyc);
    }
    check_curves(cs);
    return cs;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed curve JSON: ") + e.what());
  }
}

inline CurveSet import_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed curve JSON: ") + e.what());
  }
  return curves_from_json(j);
}

/// CSV carries no times or metadata: a new cycle starts wherever the
/// percentage stops increasing, and cycle i spans [i, i + 1] seconds.
inline CurveSet import_csv(std::string_view text) {
  CurveSet cs;
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("empty curve CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected = "cycle_percent";
  for (auto n : kCurveNames) expected += "," + std::string(n);
  if (line != expected) throw InvalidInput("unexpected CSV header '" + line + "'");
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, kCurveCount + 1> v{};
    std::size_t pos = 0;
    for (std::size_t c = 0; c < v.size(); ++c) {
      const std::size_t end = line.find(',', pos);
      const std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      try {
        std::size_t used = 0;
        v[c] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput("CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      if ((end == std::string::npos) != (c + 1 == v.size()))
        throw InvalidInput("CSV row " + std::to_string(row) + ": expected " + std::to_string(v.size()) + " columns");
      pos = end + 1;
    }
    if (cs.cycles.empty() || !(v[0] > cs.percent.back())) {
      const double t = static_cast<double>(cs.cycles.size());
      cs.cycles.push_back({t, t + 1.0, cs.size(), 0});
    }
    cs.percent.push_back(v[0]);
    for (std::size_t k = 0; k < kCurveCount; ++k) cs.angles[k].push_back(deg_to_rad(v[k + 1]));
    ++cs.cycles.back().count;
  }
  if (cs.empty()) throw InvalidInput("curve CSV has no samples");
  check_curves(cs);
  return cs;
}

struct CurveStats {
  std::string_view name;
  double min = 0.0;
  double max = 0.0;
  double range = 0.0;
  double peak_time_percent = 0.0;  // where the maximum occurs
  double start_velocity = 0.0;     // rad/s at the first cycle start
  double end_velocity = 0.0;       // rad/s at the last cycle end
};

using CurveSummary = std::array<CurveStats, kCurveCount>;

inline CurveSummary summarize(const CurveSet& cs) {
  if (cs.empty() || cs.cycles.empty()) throw EmptyCycleError("empty curve set");
  CurveSummary out;
  const auto& first = cs.cycles.front();
  const auto& last = cs.cycles.back();
  auto rate = [&](const CurveCycle& c, std::size_t k, std::size_t i) {
    const double span = c.end_time - c.start_time;
    const double dt = (cs.percent[i + 1] - cs.percent[i]) / 100.0 * span;
    return dt > 0.0 ? (cs.angles[k][i + 1] - cs.angles[k][i]) / dt : 0.0;
  };
  for (std::size_t k = 0; k < kCurveCount; ++k) {
    CurveStats& s = out[k];
    s.name = kCurveNames[k];
    const auto& a = cs.angles[k];
    const auto mm = std::minmax_element(a.begin(), a.end());
    s.min = *mm.first;
    s.max = *mm.second;
    s.range = s.max - s.min;
    s.peak_time_percent = cs.percent[static_cast<std::size_t>(mm.second - a.begin())];
    if (first.count >= 2) s.start_velocity = rate(first, k, first.first);
    if (last.count >= 2) s.end_velocity = rate(last, k, last.first + last.count - 2);
  }
  return out;
}

inline std::string format_summary(const CurveSummary& s) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "joint" << std::right << std::setw(10) << "min_deg" << std::setw(10)
     << "max_deg" << std::setw(10) << "range_deg" << std::setw(10) << "peak_%" << std::setw(12) << "v0_deg/s"
     << std::setw(12) << "v1_deg/s" << '\n'
     << std::fixed << std::setprecision(2);
  auto clean = [](double v) { return std::abs(v) < 0.005 ? 0.0 : v; };
  for (const auto& r : s) {
    os << std::left << std::setw(12) << r.name << std::right << std::setw(10) << clean(rad_to_deg(r.min))
       << std::setw(10) << clean(rad_to_deg(r.max)) << std::setw(10) << clean(rad_to_deg(r.range)) << std::setw(10)
       << clean(r.peak_time_percent) << std::setw(12) << clean(rad_to_deg(r.start_velocity)) << std::setw(12)
       << clean(rad_to_deg(r.end_velocity)) << '\n';
  }
  return os.str();
}

inline constexpr std::size_t kCompareGrid = 200;

/// Linear interpolation of one cycle of one curve at `percent`.
inline double sample_cycle(const CurveSet& cs, const CurveCycle& c, std::size_t k, double percent) {
  const double* p = cs.percent.data() + c.first;
  const double* a = cs.angles[k].data() + c.first;
  const std::size_t n = c.count;
  if (n == 1 || percent <= p[0]) return a[0];
  if (percent >= p[n - 1]) return a[n - 1];
  const std::size_t hi = static_cast<std::size_t>(std::upper_bound(p, p + n, percent) - p);
  const double u = (percent - p[hi - 1]) / (p[hi] - p[hi - 1]);
  return a[hi - 1] + u * (a[hi] - a[hi - 1]);
}

/// Mean over cycles of one curve, on the 200-point grid 0..100.
inline std::vector<double> mean_cycle(const CurveSet& cs, std::size_t k) {
  if (cs.cycles.empty()) throw EmptyCycleError("empty curve set");
  std::vector<double> out(kCompareGrid, 0.0);
  for (std::size_t i = 0; i < kCompareGrid; ++i) {
    const double pct = 100.0 * static_cast<double>(i) / static_cast<double>(kCompareGrid - 1);
    double sum = 0.0;
    for (const auto& c : cs.cycles) sum += sample_cycle(cs, c, k, pct);
    out[i] = sum / static_cast<double>(cs.cycles.size());
  }
  return out;
}

struct CompareRow {
  std::string_view name;
  double rms = 0.0;  // radians
  double peak_a = 0.0;
  double peak_b = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<std::string> missing;  // requested names matching no curve
};

/// `joints` may hold curve names ("left_hip") or bare joint names ("hip",
/// meaning both legs).
inline CompareResult compare(const CurveSet& a, const CurveSet& b, const std::vector<std::string>& joints) {
  CompareResult r;
  std::vector<std::size_t> picked;
  for (const auto& j : joints) {
    std::vector<std::size_t> hits;
    if (auto i = curve_index(j)) hits.push_back(*i);
    for (std::size_t k = 0; k < kCurveCount; ++k)
      if (kCurveNames[k].substr(kCurveNames[k].find('_') + 1) == j) hits.push_back(k);
    if (hits.empty()) r.missing.push_back(j);
    for (auto h : hits)
      if (std::ranges::find(picked, h) == picked.end()) picked.push_back(h);
  }
  std::ranges::sort(picked);
  for (auto k : picked) {
    const auto ma = mean_cycle(a, k);
    const auto mb = mean_cycle(b, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < kCompareGrid; ++i) sum += (ma[i] - mb[i]) * (ma[i] - mb[i]);
    r.rows.push_back({kCurveNames[k], std::sqrt(sum / kCompareGrid), *std::ranges::max_element(a.angles[k]),
                      *std::ranges::max_element(b.angles[k])});
  }
  return r;
}

}  // namespace gaitfuzz
