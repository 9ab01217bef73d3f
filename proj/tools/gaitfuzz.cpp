// gaitfuzz command-line tool: validate, simulate, render, compare, serve.
//
// Exit codes: 0 success, 1 domain error, 2 I/O or usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitfuzz/curves.hpp"
#include "gaitfuzz/defaults.hpp"
#include "gaitfuzz/dsl.hpp"
#include "gaitfuzz/engine.hpp"
#include "gaitfuzz/json_io.hpp"
#include "gaitfuzz/svg.hpp"

#ifdef GAITFUZZ_HAVE_SERVICE
#include <csignal>
#include <pthread.h>

#include "gaitfuzz/service.hpp"
#endif

namespace fs = std::filesystem;
using namespace gaitfuzz;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << data) || !out.flush()) throw IoError("cannot write '" + path + "'");
}

/// Controller set from --controllers, $GAITFUZZ_CONTROLLERS or the built-in
/// file. Diagnostics go to stderr; nullopt means a domain error.
std::optional<dsl::ControllerSet> load_controllers(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv("GAITFUZZ_CONTROLLERS"); env && *env) path = env;
  if (path.empty()) return default_controller_set();
  auto result = dsl::parse(dsl::SourceFile{read_file(path), path});
  for (const auto& d : result.diagnostics) std::cerr << dsl::format(d, path) << '\n';
  if (!result.ok()) return std::nullopt;
  return *result.set;
}

struct SimFlags {
  std::string controllers;
  std::string terrain = "flat";
  double step_length = 0.6;
  int steps = 6;
  double dt = 1.0 / 120.0;
  std::string dims;
  std::string config;
};

void add_sim_flags(CLI::App* app, SimFlags& f) {
  app->add_option("--controllers", f.controllers, "Controller file (default: $GAITFUZZ_CONTROLLERS or built-in)");
  app->add_option("--terrain", f.terrain, "flat | incline:<deg> | stairs:<riser>x<tread>");
  app->add_option("--step-length", f.step_length, "Step length in meters");
  app->add_option("--dt", f.dt, "Fixed time step in seconds");
  app->add_option("--dims", f.dims, "Limb dimensions as inline JSON or a JSON file path");
  app->add_option("--config", f.config, "Run configuration JSON file");
}

json parse_json_arg(const std::string& text_or_path) {
  std::string text = text_or_path;
  if (!text.empty() && text.front() != '{') text = read_file(text_or_path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InvalidInput("malformed JSON in '" + text_or_path + "'");
  return j;
}

/// Flags on the command line override fields of --config.
GaitConfig build_config(SimFlags f, const CLI::App* app) {
  if (!f.config.empty()) {
    const json j = parse_json_arg(f.config);
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      auto given = [&](const char* opt) { return app->count(opt) > 0; };
      if (key == "dims") {
        if (!given("--dims")) f.dims = value.dump();
      } else if (key == "dt") {
        if (!given("--dt")) f.dt = value.get<double>();
      } else if (key == "terrain") {
        if (!given("--terrain")) f.terrain = value.get<std::string>();
      } else if (key == "step_length") {
        if (!given("--step-length")) f.step_length = value.get<double>();
      } else if (key == "controller_file") {
        if (!given("--controllers")) f.controllers = value.get<std::string>();
      } else if (key == "seedless") {
        // the simulation is deterministic; accepted for compatibility
      } else {
        throw InvalidInput("unknown config field '" + key + "'");
      }
    }
  }
  GaitConfig c;
  auto set = load_controllers(f.controllers);
  if (!set) throw ConfigError("controller file has errors");
  c.controllers = std::move(*set);
  c.terrain = Terrain::parse(f.terrain);
  c.step_length = f.step_length;
  c.dt = f.dt;
  if (!f.dims.empty()) c.dims = dims_from_json(parse_json_arg(f.dims));
  c.validate();
  return c;
}

int cmd_validate(const std::string& path) {
  auto result = dsl::parse(dsl::SourceFile{read_file(path), path});
  for (const auto& d : result.diagnostics) std::cerr << dsl::format(d, path) << '\n';
  return result.ok() ? kOk : kDomain;
}

int cmd_simulate(const SimFlags& f, const CLI::App* app, const std::string& out, const std::string& format) {
  const GaitConfig c = build_config(f, app);
  if (f.steps < 3) throw InvalidInput("--steps must be at least 3 for one full gait cycle");
  const auto frames = run(c, RunLimit::n_steps(f.steps));
  const CurveSet cs = record(frames, CurveMeta{c.step_length, c.terrain.to_string(), c.dims, c.dt});
  const auto fmt = format == "json" ? CurveFormat::json : CurveFormat::csv;
  const std::string data = export_curves(cs, fmt);
  if (out.empty() || out == "-") std::cout << data;
  else write_file(out, data);
  std::cout << format_summary(summarize(cs));
  return kOk;
}

CurveSet load_curves(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return import_json(text);
  return import_csv(text);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_render(const std::string& in, const std::string& out, int stick_frames, const std::string& joints) {
  RenderOptions opt;
  opt.stick_frames = stick_frames;
  opt.joints = split(joints);
  write_file(out, render_svg(load_curves(in), opt));
  return kOk;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& joints) {
  const CurveSet a = load_curves(a_path);
  const CurveSet b = load_curves(b_path);
  const auto r = compare(a, b, split(joints));
  for (const auto& m : r.missing) std::cout << "warning: no curve named '" << m << "'\n";
  std::cout << std::left << std::setw(12) << "joint" << std::right << std::setw(12) << "rms_deg" << std::setw(12)
            << "peak_a_deg" << std::setw(12) << "peak_b_deg" << '\n'
            << std::fixed << std::setprecision(4);
  for (const auto& row : r.rows) {
    std::cout << std::left << std::setw(12) << row.name << std::right << std::setw(12) << rad_to_deg(row.rms)
              << std::setw(12) << rad_to_deg(row.peak_a) << std::setw(12) << rad_to_deg(row.peak_b);
    if (row.peak_b > row.peak_a) std::cout << "  peak b > a";
    else if (row.peak_a > row.peak_b) std::cout << "  peak a > b";
    std::cout << '\n';
  }
  return kOk;
}

#ifdef GAITFUZZ_HAVE_SERVICE
int cmd_serve(const SimFlags& f, const CLI::App* app, int port) {
  const GaitConfig c = build_config(f, app);
  if (port < 0 || port > 65535) throw InvalidInput("port must be in [0, 65535]");
  // Block the signals in every thread; the main thread waits for them.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
  ServiceOptions opt;
  opt.port = static_cast<std::uint16_t>(port);
  LiveService service(c, opt);
  service.start();
  std::cout << "serving on ws://127.0.0.1:" << service.port() << std::endl;
  int sig = 0;
  sigwait(&sigs, &sig);
  service.stop();
  std::cout << "stopped after " << service.frame_index() << " frames" << std::endl;
  return kOk;
}
#endif

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy-controller gait animation"};
  app.require_subcommand(1);

  std::string controllers_path;
  auto* validate = app.add_subcommand("validate", "Check a controller file");
  validate->add_option("--controllers", controllers_path, "Controller file")->required();

  SimFlags sim;
  std::string out, format = "csv";
  auto* simulate = app.add_subcommand("simulate", "Run the gait and export joint curves");
  add_sim_flags(simulate, sim);
  simulate->add_option("--steps", sim.steps, "Number of steps");
  simulate->add_option("--out", out, "Output file (default: stdout)");
  simulate->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  std::string render_in, render_out, render_joints;
  int stick_frames = 0;
  auto* render = app.add_subcommand("render", "Draw curves as SVG");
  render->add_option("--in", render_in, "Curve file (JSON or CSV)")->required();
  render->add_option("--out", render_out, "SVG output path")->required();
  render->add_option("--stick-frames", stick_frames, "Number of stick figures");
  render->add_option("--joints", render_joints, "Comma-separated curve names (default: all)");

  std::string cmp_a, cmp_b, cmp_joints = "hip,knee";
  auto* cmp = app.add_subcommand("compare", "RMS difference between two curve files");
  cmp->add_option("--a", cmp_a, "First curve file")->required();
  cmp->add_option("--b", cmp_b, "Second curve file")->required();
  cmp->add_option("--joints", cmp_joints, "Comma-separated joints or curve names");

  SimFlags serve_flags;
  int port = 7341;
  auto* serve = app.add_subcommand("serve", "Run the live websocket service");
  add_sim_flags(serve, serve_flags);
  serve->add_option("--port", port, "TCP port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(controllers_path);
    if (*simulate) return cmd_simulate(sim, simulate, out, format);
    if (*render) return cmd_render(render_in, render_out, stick_frames, render_joints);
    if (*cmp) return cmd_compare(cmp_a, cmp_b, cmp_joints);
    if (*serve) {
#ifdef GAITFUZZ_HAVE_SERVICE
      return cmd_serve(serve_flags, serve, port);
#else
      std::cerr << "error: built without the live service\n";
      return kUsage;
#endif
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}
