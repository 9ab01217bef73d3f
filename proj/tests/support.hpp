#pragma once

// File helpers and the malformed-controller corpus shared by the tests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace support {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

struct MalformedCase {
  std::filesystem::path file;
  int line = 0;
  int column = 0;
  std::string code;
};

/// Cases listed in corpus/malformed/expected.txt as "<file> <line> <column> <code>".
inline std::vector<MalformedCase> malformed_corpus() {
  const std::filesystem::path dir = std::filesystem::path(GAITFUZZ_CORPUS_DIR) / "malformed";
  std::istringstream idx(read_file(dir / "expected.txt"));
  std::vector<MalformedCase> out;
  for (std::string line; std::getline(idx, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    MalformedCase c;
    std::string name;
    ss >> name >> c.line >> c.column >> c.code;
    c.file = dir / name;
    out.push_back(c);
  }
  return out;
}

inline std::string default_controller_path() { return std::string(GAITFUZZ_DATA_DIR) + "/default.fzc"; }

/// Scratch directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

struct ProcessResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

#ifdef GAITFUZZ_CLI
/// Run the CLI with `args` (already quoted where needed), capturing output.
inline ProcessResult run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path();
  const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const auto out = dir / ("gaitfuzz_out_" + tag);
  const auto err = dir / ("gaitfuzz_err_" + tag);
  const std::string cmd = env + (env.empty() ? "" : " ") + shell_quote(GAITFUZZ_CLI) + " " + args + " >" +
                          shell_quote(out.string()) + " 2>" + shell_quote(err.string()) + " </dev/null";
  const int status = std::system(cmd.c_str());
  ProcessResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}
#endif

}  // namespace support
