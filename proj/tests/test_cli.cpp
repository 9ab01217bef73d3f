#include <algorithm>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"
#include "gaitfuzz/curves.hpp"
#include "support.hpp"

using namespace gaitfuzz;
using Catch::Matchers::ContainsSubstring;
using support::run_cli;
using support::shell_quote;

namespace {

std::size_t count_of(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto at = s.find(what); at != std::string::npos; at = s.find(what, at + what.size())) ++n;
  return n;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("validate accepts the shipped controllers silently") {
  const auto r = run_cli("validate --controllers " + shell_quote(support::default_controller_path()));
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  CHECK(r.err.empty());
}

TEST_CASE("validate prints one line per diagnostic") {
  support::TempDir dir("gaitfuzz_cli_validate");
  std::string text = support::read_file(support::default_controller_path());
  text.replace(text.find("delta is center"), 15, "delta is middle");
  text.replace(text.find("error is on"), 11, "error is off");
  const auto path = (dir / "two.fzc").string();
  support::write_file(path, text);
  const auto r = run_cli("validate --controllers " + shell_quote(path));
  CHECK(r.code == 1);
  CHECK(line_count(r.err) == 2);
  CHECK_THAT(r.err, ContainsSubstring(path + ":"));
  CHECK_THAT(r.err, ContainsSubstring("error: unknown label 'middle' [unknown-label]"));
  CHECK_THAT(r.err, ContainsSubstring("error: unknown label 'off' [unknown-label]"));
}

TEST_CASE("validate reports corpus positions") {
  for (const auto& c : support::malformed_corpus()) {
    const auto r = run_cli("validate --controllers " + shell_quote(c.file.string()));
    INFO(c.file.filename().string() << "\n" << r.err);
    CHECK(r.code == 1);
    const std::string where = c.file.string() + ":" + std::to_string(c.line) + ":" + std::to_string(c.column) + ":";
    CHECK_THAT(r.err, ContainsSubstring(where));
    CHECK_THAT(r.err, ContainsSubstring("[" + c.code + "]"));
  }
}

TEST_CASE("missing files and bad usage exit with 2") {
  CHECK(run_cli("validate --controllers /nonexistent/x.fzc").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("simulate --steps notanumber").code == 2);
  CHECK(run_cli("render --in /nonexistent/c.json --out /tmp/x.svg").code == 2);
  CHECK(run_cli("simulate --controllers /nonexistent/x.fzc").code == 2);
}

TEST_CASE("simulate writes curves and prints a summary") {
  support::TempDir dir("gaitfuzz_cli_sim");
  const auto csv = (dir / "a.csv").string();
  const auto r = run_cli("simulate --terrain flat --step-length 0.60 --steps 6 --out " + shell_quote(csv));
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("left_hip"));
  const auto cs = import_csv(support::read_file(csv));
  CHECK(cs.cycles.size() >= 1);
  const std::string text = support::read_file(csv);
  CHECK(text.rfind("cycle_percent,left_hip,", 0) == 0);

  const auto json_path = (dir / "a.json").string();
  REQUIRE(run_cli("simulate --steps 4 --format json --out " + shell_quote(json_path)).code == 0);
  const auto js = import_json(support::read_file(json_path));
  CHECK(js.meta.step_length == 0.6);
  CHECK(js.meta.terrain == "flat");
}

TEST_CASE("simulate is byte-for-byte repeatable") {
  support::TempDir dir("gaitfuzz_cli_det");
  const auto a = (dir / "a.csv").string();
  const auto b = (dir / "b.csv").string();
  REQUIRE(run_cli("simulate --step-length 0.70 --steps 6 --out " + shell_quote(a)).code == 0);
  REQUIRE(run_cli("simulate --step-length 0.70 --steps 6 --out " + shell_quote(b)).code == 0);
  CHECK(support::read_file(a) == support::read_file(b));
}

TEST_CASE("simulate domain errors exit with 1") {
  const auto r = run_cli("simulate --step-length 1.2 --out /dev/null");
  CHECK(r.code == 1);
  CHECK_THAT(r.err, ContainsSubstring("reach"));
  CHECK(run_cli("simulate --terrain hills --out /dev/null").code == 1);
  CHECK(run_cli("simulate --steps 2 --out /dev/null").code == 1);
  CHECK(run_cli("simulate --dt 0.1 --out /dev/null").code == 1);
  CHECK(run_cli("simulate --dims '{\"thigh\": -1}' --out /dev/null").code == 1);
  CHECK(run_cli("simulate --format xml").code == 2);
}

TEST_CASE("simulate on stairs and with custom dims") {
  support::TempDir dir("gaitfuzz_cli_stairs");
  const auto out = (dir / "s.csv").string();
  CHECK(run_cli("simulate --terrain stairs:0.17x0.28 --steps 4 --out " + shell_quote(out)).code == 0);
  CHECK(import_csv(support::read_file(out)).cycles.size() >= 1);
  const auto dims = (dir / "dims.json").string();
  support::write_file(dims, R"({"thigh": 0.5, "shank": 0.48, "heel_to_ball": 0.15, "ball_to_toe": 0.07,
                                "pelvis_height_offset": 0.1})");
  CHECK(run_cli("simulate --dims " + shell_quote(dims) + " --steps 4 --out " + shell_quote(out)).code == 0);
}

TEST_CASE("simulate reads a config file with flag overrides") {
  support::TempDir dir("gaitfuzz_cli_cfg");
  const auto cfg = (dir / "run.json").string();
  const auto out = (dir / "c.json").string();
  support::write_file(cfg, R"({"step_length": 0.7, "dt": 0.008333333333333333, "terrain": "flat",
    "dims": {"thigh": 0.45, "shank": 0.45, "heel_to_ball": 0.15, "ball_to_toe": 0.07, "pelvis_height_offset": 0.1},
    "controller_file": ")" + support::default_controller_path() + R"(", "seedless": true})");
  REQUIRE(run_cli("simulate --config " + shell_quote(cfg) + " --format json --out " + shell_quote(out)).code == 0);
  CHECK(import_json(support::read_file(out)).meta.step_length == 0.7);
  REQUIRE(run_cli("simulate --config " + shell_quote(cfg) + " --step-length 0.5 --format json --out " +
                  shell_quote(out))
              .code == 0);
  CHECK(import_json(support::read_file(out)).meta.step_length == 0.5);
  support::write_file(cfg, R"({"stride": 0.7})");
  CHECK(run_cli("simulate --config " + shell_quote(cfg) + " --out /dev/null").code == 1);
}

TEST_CASE("controller path from the environment") {
  const auto ok = run_cli("simulate --steps 3 --out /dev/null",
                          "GAITFUZZ_CONTROLLERS=" + shell_quote(support::default_controller_path()));
  CHECK(ok.code == 0);
  const auto bad = support::malformed_corpus().front().file.string();
  CHECK(run_cli("simulate --steps 3 --out /dev/null", "GAITFUZZ_CONTROLLERS=" + shell_quote(bad)).code == 1);
}

TEST_CASE("render draws curves and stick figures") {
  support::TempDir dir("gaitfuzz_cli_render");
  const auto json_path = (dir / "c.json").string();
  const auto svg = (dir / "c.svg").string();
  REQUIRE(run_cli("simulate --steps 4 --format json --out " + shell_quote(json_path)).code == 0);
  const auto cs = import_json(support::read_file(json_path));
  REQUIRE(run_cli("render --in " + shell_quote(json_path) + " --out " + shell_quote(svg) +
                  " --stick-frames 8 --joints left_hip,left_knee")
              .code == 0);
  const std::string text = support::read_file(svg);
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(count_of(text, "<g class=\"stick\"") == 8);
  CHECK(count_of(text, "<g class=\"curve\"") == 2);
  CHECK(count_of(text, "<polyline") == 2 * cs.cycles.size() + 8 * 2);

  REQUIRE(run_cli("render --in " + shell_quote(json_path) + " --out " + shell_quote(svg)).code == 0);
  CHECK(count_of(support::read_file(svg), "<g class=\"curve\"") == 8);
  CHECK(count_of(support::read_file(svg), "<g class=\"stick\"") == 0);

  const auto empty = (dir / "empty.csv").string();
  support::write_file(empty,
                      "cycle_percent,left_hip,left_knee,left_ankle,left_ball,right_hip,right_knee,right_ankle,right_ball\n");
  CHECK(run_cli("render --in " + shell_quote(empty) + " --out " + shell_quote(svg)).code == 1);
  CHECK(run_cli("render --in " + shell_quote(json_path) + " --out " + shell_quote(svg) + " --joints elbow").code == 1);
}

TEST_CASE("compare reports RMS and peak ordering") {
  support::TempDir dir("gaitfuzz_cli_cmp");
  const auto a = (dir / "a.csv").string();
  const auto b = (dir / "b.csv").string();
  REQUIRE(run_cli("simulate --step-length 0.60 --steps 6 --out " + shell_quote(a)).code == 0);
  REQUIRE(run_cli("simulate --step-length 0.70 --steps 6 --out " + shell_quote(b)).code == 0);

  const auto same = run_cli("compare --a " + shell_quote(a) + " --b " + shell_quote(a) + " --joints hip,knee");
  CHECK(same.code == 0);
  std::istringstream rows(same.out);
  std::string line;
  std::getline(rows, line);
  int n = 0;
  for (std::string name, rms; rows >> name >> rms; std::getline(rows, line), ++n) CHECK(rms == "0.0000");
  CHECK(n == 4);
  CHECK(count_of(same.out, "peak a") + count_of(same.out, "peak b") == 0);

  const auto diff = run_cli("compare --a " + shell_quote(a) + " --b " + shell_quote(b) + " --joints hip");
  CHECK(diff.code == 0);
  CHECK_THAT(diff.out, ContainsSubstring("left_hip"));
  CHECK_THAT(diff.out, ContainsSubstring("peak b > a"));

  const auto missing = run_cli("compare --a " + shell_quote(a) + " --b " + shell_quote(b) + " --joints hip,elbow");
  CHECK(missing.code == 0);
  CHECK_THAT(missing.out, ContainsSubstring("warning: no curve named 'elbow'"));
}
