#pragma once

// SVG line chart of joint curves with an optional strip of stick figures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "gaitfuzz/curves.hpp"
#include "gaitfuzz/error.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace gaitfuzz {

struct RenderOptions {
  std::vector<std::string> joints;  // curve names; empty = all eight
  int stick_frames = 0;
  double width = 800.0;
  double height = 360.0;
};

inline constexpr std::array<const char*, kCurveCount> kCurveColors{
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#17becf", "#ff7f0e", "#8c564b", "#e377c2"};

inline std::string render_svg(const CurveSet& cs, const RenderOptions& opt = {}) {
  if (cs.empty()) throw InvalidInput("curve set has no samples");
  std::vector<std::size_t> picked;
  if (opt.joints.empty()) {
    for (std::size_t k = 0; k < kCurveCount; ++k) picked.push_back(k);
  } else {
    for (const auto& j : opt.joints) {
      auto k = curve_index(j);
      if (!k) throw InvalidInput("unknown curve '" + j + "'");
      picked.push_back(*k);
    }
  }
  if (opt.stick_frames < 0) throw InvalidInput("stick frame count must be non-negative");

  const double strip = opt.stick_frames > 0 ? 140.0 : 0.0;
  const double left = 60.0, right = 20.0, top = 20.0, bottom = 40.0;
  const double w = opt.width - left - right;
  const double h = opt.height - top - bottom;
  double lo = 0.0, hi = 0.0;
  for (auto k : picked) {
    const auto [mn, mx] = std::minmax_element(cs.angles[k].begin(), cs.angles[k].end());
    lo = std::min(lo, rad_to_deg(*mn));
    hi = std::max(hi, rad_to_deg(*mx));
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  lo = std::floor(lo / 10.0) * 10.0;
  hi = std::ceil(hi / 10.0) * 10.0;
  auto px = [&](double pct) { return left + w * pct / 100.0; };
  auto py = [&](double deg) { return top + h * (hi - deg) / (hi - lo); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height + strip
     << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height + strip << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  for (double d = lo; d <= hi + 1e-9; d += 10.0) {
    os << "<line x1=\"" << left << "\" y1=\"" << py(d) << "\" x2=\"" << left + w << "\" y2=\"" << py(d)
       << "\" stroke=\"#e0e0e0\"/>";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">" << std::setprecision(0) << d
       << std::setprecision(2) << "</text>\n";
  }
  for (int p = 0; p <= 100; p += 20)
    os << "<text x=\"" << px(p) << "\" y=\"" << top + h + 16 << "\" text-anchor=\"middle\">" << p << "%</text>\n";
  os << "<text x=\"" << left + w / 2 << "\" y=\"" << top + h + 32 << "\" text-anchor=\"middle\">gait cycle</text>\n";
  os << "</g>\n";

  for (std::size_t n = 0; n < picked.size(); ++n) {
    const std::size_t k = picked[n];
    os << "<g class=\"curve\" data-joint=\"" << kCurveNames[k] << "\" fill=\"none\" stroke=\"" << kCurveColors[k]
       << "\" stroke-width=\"1.5\">\n";
    for (const auto& c : cs.cycles) {
      os << "<polyline points=\"";
      for (std::size_t i = c.first; i < c.first + c.count; ++i)
        os << (i == c.first ? "" : " ") << px(cs.percent[i]) << ',' << py(rad_to_deg(cs.angles[k][i]));
      os << "\"/>\n";
    }
    os << "</g>\n";
    os << "<text x=\"" << left + 8 << "\" y=\"" << top + 14 + 13.0 * static_cast<double>(n)
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << kCurveColors[k] << "\">" << kCurveNames[k]
       << "</text>\n";
  }

  if (opt.stick_frames > 0) {
    const LimbDimensions& dims = cs.meta.dims;
    const double scale = (strip - 20.0) / (dims.leg_length() + dims.pelvis_height_offset);
    const double cell = w / opt.stick_frames;
    for (int g = 0; g < opt.stick_frames; ++g) {
      const std::size_t i =
          opt.stick_frames == 1 ? 0 : g * (cs.size() - 1) / static_cast<std::size_t>(opt.stick_frames - 1);
      Pose pose;
      pose.root = {0.0, 0.0};
      for (std::size_t k = 0; k < kCurveCount; ++k)
        pose.leg(k < 4 ? Leg::left : Leg::right)[kJoints[k % 4]] = cs.angles[k][i];
      const double cx = left + cell * (g + 0.5);
      const double cy = opt.height + 10.0;
      auto to_px = [&](Vec2 p) { return Vec2{cx + scale * p.x, cy - scale * p.y}; };
      os << "<g class=\"stick\" fill=\"none\" stroke-width=\"2\">\n";
      for (Leg l : {Leg::left, Leg::right}) {
        const LegChain c = forward_kinematics(pose, dims, l);
        os << "<polyline stroke=\"" << (l == Leg::left ? kCurveColors[0] : kCurveColors[4]) << "\" points=\"";
        const Vec2 pts[] = {to_px(pose.root), to_px(c.hip), to_px(c.knee), to_px(c.ankle), to_px(c.ball),
                            to_px(c.toe)};
        for (std::size_t p = 0; p < std::size(pts); ++p) os << (p ? " " : "") << pts[p].x << ',' << pts[p].y;
        os << "\"/>\n";
      }
      os << "</g>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace gaitfuzz
