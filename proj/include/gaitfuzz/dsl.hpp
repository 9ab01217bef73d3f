#pragma once

// Controller files (.fzc): a line-oriented, keyword-led text format.
//
//   # comment
//   controller hip_swing {
//     input delta range -1.2 .. 1.2 scalar {
//       start lshoulder(-1, 0)
//       center tri(-1, 0, 1)
//       end rshoulder(0, 1)
//     }
//     output velocity {
//       slow 12
//       fast 240
//       stay 0
//     }
//     rule if delta is start then velocity is slow
//   }
//   bind level hip_swing hip_swing metric delta_scaled
//
// Input ranges and breakpoints are in degrees unless the input is marked
// `scalar`; output values are in degrees per second. In memory everything
// is radians and radians per second.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaitfuzz/error.hpp"
#include "gaitfuzz/fuzzy.hpp"
#include "gaitfuzz/skeleton.hpp"

namespace gaitfuzz::dsl {

enum class Severity { error, warning };

constexpr std::string_view severity_name(Severity s) noexcept { return s == Severity::error ? "error" : "warning"; }

struct Diagnostic {
  Severity severity = Severity::error;
  int line = 1;    // 1-based
  int column = 1;  // 1-based
  std::string message;
  std::string code;
};

/// "<origin>:<line>:<col>: <severity>: <message> [<code>]"
inline std::string format(const Diagnostic& d, std::string_view origin) {
  std::ostringstream os;
  os << origin << ':' << d.line << ':' << d.column << ": " << severity_name(d.severity) << ": " << d.message << " ["
     << d.code << ']';
  return os.str();
}

struct SourceFile {
  std::string text;
  std::string origin = "<inline>";
};

enum class GaitMode { level, ascent };
enum class JointRole {
  hip_swing,
  knee_swing,
  ankle_swing,
  ball_swing,
  hip_stance,
  knee_stance,
  ankle_stance,
  ball_stance
};
enum class Metric { alpha, delta_scaled, sole_angle };

inline constexpr std::array<GaitMode, 2> kGaitModes{GaitMode::level, GaitMode::ascent};
inline constexpr std::array<JointRole, 8> kJointRoles{JointRole::hip_swing,    JointRole::knee_swing,
                                                      JointRole::ankle_swing,  JointRole::ball_swing,
                                                      JointRole::hip_stance,   JointRole::knee_stance,
                                                      JointRole::ankle_stance, JointRole::ball_stance};

constexpr std::string_view mode_name(GaitMode m) noexcept { return m == GaitMode::level ? "level" : "ascent"; }

constexpr std::string_view role_name(JointRole r) noexcept {
  switch (r) {
    case JointRole::hip_swing: return "hip_swing";
    case JointRole::knee_swing: return "knee_swing";
    case JointRole::ankle_swing: return "ankle_swing";
    case JointRole::ball_swing: return "ball_swing";
    case JointRole::hip_stance: return "hip_stance";
    case JointRole::knee_stance: return "knee_stance";
    case JointRole::ankle_stance: return "ankle_stance";
    case JointRole::ball_stance: return "ball_stance";
  }
  return "?";
}

constexpr std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::alpha: return "alpha";
    case Metric::delta_scaled: return "delta_scaled";
    case Metric::sole_angle: return "sole_angle";
  }
  return "?";
}

constexpr Joint role_joint(JointRole r) noexcept { return kJoints[static_cast<std::size_t>(r) % 4]; }
constexpr bool role_is_swing(JointRole r) noexcept { return static_cast<std::size_t>(r) < 4; }

/// Unit a metric is measured in; the bound controller's input must match.
constexpr fuzzy::Unit metric_unit(Metric m) noexcept {
  return m == Metric::delta_scaled ? fuzzy::Unit::scalar : fuzzy::Unit::angle;
}

inline std::optional<GaitMode> parse_mode(std::string_view s) noexcept {
  for (auto m : kGaitModes)
    if (mode_name(m) == s) return m;
  return std::nullopt;
}
inline std::optional<JointRole> parse_role(std::string_view s) noexcept {
  for (auto r : kJointRoles)
    if (role_name(r) == s) return r;
  return std::nullopt;
}
inline std::optional<Metric> parse_metric(std::string_view s) noexcept {
  for (auto m : {Metric::alpha, Metric::delta_scaled, Metric::sole_angle})
    if (metric_name(m) == s) return m;
  return std::nullopt;
}

struct Binding {
  GaitMode mode = GaitMode::level;
  JointRole role = JointRole::hip_swing;
  std::string controller;
  Metric metric = Metric::alpha;
  bool operator==(const Binding&) const = default;
};

struct ControllerSet {
  std::vector<fuzzy::Controller> controllers;  // declaration order
  std::vector<Binding> bindings;

  const fuzzy::Controller* find(std::string_view name) const noexcept {
    for (const auto& c : controllers)
      if (c.name == name) return &c;
    return nullptr;
  }
  fuzzy::Controller* find(std::string_view name) noexcept {
    for (auto& c : controllers)
      if (c.name == name) return &c;
    return nullptr;
  }
  const Binding* binding(GaitMode mode, JointRole role) const noexcept {
    for (const auto& b : bindings)
      if (b.mode == mode && b.role == role) return &b;
    return nullptr;
  }
  bool has_mode(GaitMode mode) const noexcept {
    return std::ranges::any_of(bindings, [&](const Binding& b) { return b.mode == mode; });
  }
  bool operator==(const ControllerSet&) const = default;
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

enum class Tok { ident, number, lbrace, rbrace, lparen, rparen, comma, dotdot, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

inline std::string_view tok_name(Tok t) noexcept {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::dotdot: return "'..'";
    case Tok::end: return "end of file";
  }
  return "?";
}

inline bool is_ident_start(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
inline bool is_ident_char(char c) noexcept { return is_ident_start(c) || is_digit(c); }

inline std::vector<Token> lex(std::string_view src, std::vector<Diagnostic>& diags) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto error = [&](int l, int c, std::string msg, std::string code) {
    diags.push_back({Severity::error, l, c, std::move(msg), std::move(code)});
  };
  while (i < src.size()) {
    const char ch = src[i];
    if (ch == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (ch == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    const std::size_t start = i;
    if (is_ident_start(ch)) {
      while (i < src.size() && is_ident_char(src[i])) ++i;
      t.kind = Tok::ident;
      t.text = std::string(src.substr(start, i - start));
    } else if (is_digit(ch) || ((ch == '-' || ch == '+' || ch == '.') && i + 1 < src.size() &&
                                (is_digit(src[i + 1]) || (ch != '.' && src[i + 1] == '.' && i + 2 < src.size() &&
                                                          is_digit(src[i + 2]))))) {
      if (ch == '-' || ch == '+') ++i;
      while (i < src.size() && is_digit(src[i])) ++i;
      if (i + 1 < src.size() && src[i] == '.' && is_digit(src[i + 1])) {
        ++i;
        while (i < src.size() && is_digit(src[i])) ++i;
      } else if (i < src.size() && src[i] == '.' && (i + 1 >= src.size() || src[i + 1] != '.')) {
        ++i;  // trailing dot, "1."
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && is_digit(src[j])) {
          i = j;
          while (i < src.size() && is_digit(src[i])) ++i;
        }
      }
      t.kind = Tok::number;
      t.text = std::string(src.substr(start, i - start));
      std::string_view digits = t.text;
      if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(v)) {
        error(t.line, t.column, "number '" + t.text + "' is out of range", "bad-number");
        v = 0.0;
      }
      t.number = v;
    } else if (ch == '.' && i + 1 < src.size() && src[i + 1] == '.') {
      i += 2;
      t.kind = Tok::dotdot;
      t.text = "..";
    } else {
      switch (ch) {
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case ',': t.kind = Tok::comma; break;
        default: {
          const auto byte = static_cast<unsigned char>(ch);
          std::ostringstream os;
          if (byte >= 0x20 && byte < 0x7f)
            os << "unexpected character '" << ch << "'";
          else
            os << "unexpected byte 0x" << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(byte);
          error(line, col, os.str(), "syntax");
          ++i;
          ++col;
          continue;
        }
      }
      t.text = std::string(1, ch);
      ++i;
    }
    col += static_cast<int>(i - start);
    out.push_back(std::move(t));
  }
  Token eof;
  eof.kind = Tok::end;
  eof.line = line;
  eof.column = col;
  out.push_back(eof);
  return out;
}

// Positions remembered for semantic diagnostics.
struct LabelSite {
  Token name;
  Token shape;
};
struct InputSite {
  Token name;
  Token range;
  std::vector<LabelSite> labels;
};
struct RuleSite {
  std::vector<std::pair<Token, Token>> clauses;
  Token out_var;
  Token out_label;
  Token keyword;
};
struct ControllerSite {
  Token name;
  std::vector<InputSite> inputs;
  std::optional<Token> output_name;
  std::vector<Token> singleton_names;
  std::vector<RuleSite> rules;
  bool had_syntax_error = false;
};
struct BindSite {
  Token keyword, mode, role, controller, metric;
};

struct SyntaxError {
  Token at;
  std::string message;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags) : toks_(std::move(toks)), diags_(diags) {}

  std::optional<ControllerSet> run() {
    while (peek().kind != Tok::end) {
      const Token& t = peek();
      if (t.kind == Tok::ident && t.text == "controller") {
        parse_controller();
      } else if (t.kind == Tok::ident && t.text == "bind") {
        try {
          parse_bind();
        } catch (const SyntaxError& e) {
          report(e);
          skip_line(e.at.line);
        }
      } else {
        report({t, "expected 'controller' or 'bind', found " + describe(t)});
        skip_line(t.line);
        if (peek().kind == Tok::rbrace) advance();
      }
    }
    resolve_bindings();
    if (std::ranges::any_of(diags_, [](const Diagnostic& d) { return d.severity == Severity::error; }))
      return std::nullopt;
    return std::move(set_);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic>& diags_;
  ControllerSet set_;
  std::vector<ControllerSite> controller_sites_;
  std::vector<BindSite> binds_;
  std::set<std::string> broken_;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::ident || t.kind == Tok::number) return "'" + t.text + "'";
    return std::string(tok_name(t.kind));
  }

  void error(const Token& at, std::string msg, std::string code) {
    diags_.push_back({Severity::error, at.line, at.column, std::move(msg), std::move(code)});
  }
  void report(const SyntaxError& e) { error(e.at, e.message, "syntax"); }

  // Skip the remainder of `line`, stopping before a closing brace.
  void skip_line(int line) {
    while (peek().kind != Tok::end && peek().line == line && peek().kind != Tok::rbrace) advance();
  }

  const Token& expect(Tok kind, std::string_view what) {
    if (peek().kind != kind) throw SyntaxError{peek(), "expected " + std::string(what) + ", found " + describe(peek())};
    return advance();
  }
  const Token& expect_keyword(std::string_view kw) {
    if (peek().kind != Tok::ident || peek().text != kw)
      throw SyntaxError{peek(), "expected '" + std::string(kw) + "', found " + describe(peek())};
    return advance();
  }
  const Token& expect_ident(std::string_view what) { return expect(Tok::ident, what); }
  const Token& expect_number() { return expect(Tok::number, "number"); }

  // Parse one brace-delimited block of line items. `item` parses one item
  // and may throw SyntaxError; recovery skips to the next line.
  template <class F>
  void parse_block(F&& item, ControllerSite* site) {
    expect(Tok::lbrace, "'{'");
    while (peek().kind != Tok::rbrace) {
      if (peek().kind == Tok::end) throw SyntaxError{peek(), "expected '}', found end of file"};
      const int line = peek().line;
      const std::size_t before = pos_;
      try {
        item();
      } catch (const SyntaxError& e) {
        report(e);
        if (site) site->had_syntax_error = true;
        if (e.at.kind == Tok::end) throw;
        skip_line(e.at.line);
      }
      if (pos_ == before) {
        // no progress: skip the offending line
        skip_line(line);
        if (pos_ == before) advance();
      }
    }
    advance();
  }

  void parse_controller() {
    advance();  // 'controller'
    ControllerSite site;
    fuzzy::Controller c;
    try {
      site.name = expect_ident("controller name");
      c.name = site.name.text;
      parse_block([&] { parse_controller_item(c, site); }, &site);
    } catch (const SyntaxError& e) {
      report(e);
      site.had_syntax_error = true;
      if (e.at.kind != Tok::end) {
        // unrecoverable header: drop to the end of this line and carry on
        skip_line(e.at.line);
        if (peek().kind == Tok::lbrace) {
          try {
            parse_block([&] { parse_controller_item(c, site); }, &site);
          } catch (const SyntaxError& e2) {
            report(e2);
          }
        }
      }
    }
    finish_controller(std::move(c), std::move(site));
  }

  void parse_controller_item(fuzzy::Controller& c, ControllerSite& site) {
    const Token& kw = peek();
    if (kw.kind != Tok::ident) throw SyntaxError{kw, "expected 'input', 'output' or 'rule', found " + describe(kw)};
    if (kw.text == "input") {
      advance();
      parse_input(c, site);
    } else if (kw.text == "output") {
      advance();
      parse_output(c, site);
    } else if (kw.text == "rule") {
      parse_rule(site);
    } else {
      throw SyntaxError{kw, "expected 'input', 'output' or 'rule', found " + describe(kw)};
    }
  }

  void parse_input(fuzzy::Controller& c, ControllerSite& site) {
    InputSite is;
    is.name = expect_ident("input name");
    is.range = expect_keyword("range");
    const Token& lo = expect_number();
    expect(Tok::dotdot, "'..'");
    const Token& hi = expect_number();
    fuzzy::FuzzyVariable v;
    v.name = is.name.text;
    v.unit = fuzzy::Unit::angle;
    if (peek().kind == Tok::ident && peek().text == "scalar") {
      advance();
      v.unit = fuzzy::Unit::scalar;
    }
    const double k = v.unit == fuzzy::Unit::angle ? deg_to_rad(1.0) : 1.0;
    v.lo = lo.number * k;
    v.hi = hi.number * k;
    if (!(lo.number < hi.number)) error(lo, "range lower bound must be below upper bound", "bad-range");
    auto label_item = [&] {
      LabelSite ls;
      ls.name = expect_ident("label name");
      ls.shape = expect_ident("membership shape");
      auto shape = fuzzy::shape_from_keyword(ls.shape.text);
      expect(Tok::lparen, "'('");
      std::vector<double> args;
      if (peek().kind != Tok::rparen) {
        args.push_back(expect_number().number);
        while (peek().kind == Tok::comma) {
          advance();
          args.push_back(expect_number().number);
        }
      }
      expect(Tok::rparen, "')'");
      if (!shape) {
        error(ls.shape, "unknown membership shape '" + ls.shape.text + "' (expected tri, trap, lshoulder or rshoulder)",
              "unknown-shape");
        site.had_syntax_error = true;
        return;
      }
      if (args.size() != fuzzy::arity(*shape)) {
        error(ls.shape,
              ls.shape.text + " takes " + std::to_string(fuzzy::arity(*shape)) + " arguments, got " +
                  std::to_string(args.size()),
              "bad-arity");
        site.had_syntax_error = true;
        return;
      }
      fuzzy::MembershipFunction mf;
      mf.shape = *shape;
      for (std::size_t i = 0; i < args.size(); ++i) mf.points[i] = args[i] * k;
      v.labels.push_back({ls.name.text, mf});
      is.labels.push_back(ls);
    };
    parse_block(label_item, &site);
    c.inputs.push_back(std::move(v));
    site.inputs.push_back(std::move(is));
  }

  void parse_output(fuzzy::Controller& c, ControllerSite& site) {
    const Token& name = expect_ident("output name");
    if (site.output_name) {
      error(name, "controller already has an output", "duplicate-name");
      site.had_syntax_error = true;
    }
    site.output_name = name;
    c.output.name = name.text;
    c.output.singletons.clear();
    site.singleton_names.clear();
    auto item = [&] {
      const Token& label = expect_ident("label name");
      const Token& value = expect_number();
      c.output.singletons.push_back({label.text, deg_to_rad(value.number)});
      site.singleton_names.push_back(label);
    };
    parse_block(item, &site);
  }

  void parse_rule(ControllerSite& site) {
    RuleSite r;
    r.keyword = advance();  // 'rule'
    expect_keyword("if");
    auto clause = [&] {
      Token var = expect_ident("variable name");
      if (var.text == "then" || var.text == "and")
        throw SyntaxError{var, "expected variable name, found '" + var.text + "'"};
      expect_keyword("is");
      Token label = expect_ident("label name");
      r.clauses.emplace_back(std::move(var), std::move(label));
    };
    clause();
    while (peek().kind == Tok::ident && peek().text == "and") {
      advance();
      clause();
    }
    expect_keyword("then");
    r.out_var = expect_ident("output name");
    expect_keyword("is");
    r.out_label = expect_ident("label name");
    if (peek().kind != Tok::end && peek().kind != Tok::rbrace && peek().line == r.out_label.line)
      throw SyntaxError{peek(), "unexpected " + describe(peek()) + " after rule"};
    site.rules.push_back(std::move(r));
  }

  void finish_controller(fuzzy::Controller c, ControllerSite site) {
    bool ok = !site.had_syntax_error;
    if (set_.find(c.name)) {
      error(site.name, "duplicate controller '" + c.name + "'", "duplicate-name");
      ok = false;
    }
    if (site.had_syntax_error) {
      // already reported; semantic checks on a partial controller only add noise
      broken_.insert(c.name);
      controller_sites_.push_back(std::move(site));
      set_.controllers.push_back(std::move(c));
      return;
    }
    if (c.inputs.empty()) {
      error(site.name, "controller '" + c.name + "' has no input", "bad-arity");
      ok = false;
    } else if (c.inputs.size() > 2) {
      error(site.inputs[2].name, "controller '" + c.name + "' has more than two inputs", "bad-arity");
      ok = false;
    }
    if (!site.output_name) {
      error(site.name, "controller '" + c.name + "' has no output", "missing-output");
      ok = false;
    }
    // names and shapes, with positions
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
      const auto& v = c.inputs[i];
      for (std::size_t j = 0; j < i; ++j)
        if (c.inputs[j].name == v.name) {
          error(site.inputs[i].name, "duplicate input '" + v.name + "'", "duplicate-name");
          ok = false;
        }
      if (v.labels.empty()) {
        error(site.inputs[i].name, "input '" + v.name + "' has no labels", "no-labels");
        ok = false;
      }
      for (std::size_t l = 0; l < v.labels.size(); ++l) {
        for (std::size_t m = 0; m < l; ++m)
          if (v.labels[m].name == v.labels[l].name) {
            error(site.inputs[i].labels[l].name, "duplicate label '" + v.labels[l].name + "'", "duplicate-name");
            ok = false;
          }
        if (!v.labels[l].mf.monotone()) {
          error(site.inputs[i].labels[l].shape, "non-monotone breakpoints", "non-monotone");
          ok = false;
        }
      }
      if (!(v.lo < v.hi)) ok = false;
    }
    for (std::size_t l = 0; l < c.output.singletons.size(); ++l)
      for (std::size_t m = 0; m < l; ++m)
        if (c.output.singletons[m].name == c.output.singletons[l].name) {
          error(site.singleton_names[l], "duplicate label '" + c.output.singletons[l].name + "'", "duplicate-name");
          ok = false;
        }
    if (site.output_name && c.output.singletons.empty()) {
      error(*site.output_name, "output '" + c.output.name + "' has no labels", "no-labels");
      ok = false;
    }
    // rules
    for (const auto& rs : site.rules) {
      fuzzy::Rule rule;
      bool rule_ok = true;
      for (const auto& [var, label] : rs.clauses) {
        auto vi = c.input_index(var.text);
        if (!vi) {
          error(var, "unknown variable '" + var.text + "'", "unknown-variable");
          rule_ok = false;
          continue;
        }
        auto li = c.inputs[*vi].label_index(label.text);
        if (!li) {
          error(label, "unknown label '" + label.text + "'", "unknown-label");
          rule_ok = false;
          continue;
        }
        rule.antecedent.push_back({*vi, *li});
      }
      if (site.output_name && rs.out_var.text != c.output.name) {
        error(rs.out_var, "unknown output '" + rs.out_var.text + "'", "unknown-variable");
        rule_ok = false;
      } else if (auto ci = c.output.label_index(rs.out_label.text)) {
        rule.consequent = *ci;
      } else {
        error(rs.out_label, "unknown label '" + rs.out_label.text + "'", "unknown-label");
        rule_ok = false;
      }
      if (rule_ok) c.rules.push_back(rule);
      ok = ok && rule_ok;
    }
    if (ok && site.rules.empty()) {
      error(site.name, "controller '" + c.name + "' has no rules", "rule-gap");
      ok = false;
    }
    if (ok) {
      // coverage and completeness on the validation grid
      for (const auto& issue : fuzzy::validate(c)) {
        const Token& at = issue.input >= 0 ? site.inputs[static_cast<std::size_t>(issue.input)].name : site.name;
        error(at, issue.message, std::string(fuzzy::issue_code(issue.kind)));
        ok = false;
      }
    }
    controller_sites_.push_back(std::move(site));
    set_.controllers.push_back(std::move(c));
  }

  void parse_bind() {
    BindSite b;
    b.keyword = advance();
    b.mode = expect_ident("gait mode");
    b.role = expect_ident("joint role");
    b.controller = expect_ident("controller name");
    expect_keyword("metric");
    b.metric = expect_ident("metric name");
    if (peek().kind != Tok::end && peek().line == b.metric.line)
      throw SyntaxError{peek(), "unexpected " + describe(peek()) + " after binding"};
    binds_.push_back(std::move(b));
  }

  void resolve_bindings() {
    std::map<GaitMode, const BindSite*> first_of_mode;
    for (const auto& b : binds_) {
      auto mode = parse_mode(b.mode.text);
      auto role = parse_role(b.role.text);
      auto metric = parse_metric(b.metric.text);
      bool ok = true;
      if (!mode) {
        error(b.mode, "unknown gait mode '" + b.mode.text + "' (expected level or ascent)", "unknown-mode");
        ok = false;
      }
      if (!role) {
        error(b.role, "unknown joint role '" + b.role.text + "'", "unknown-role");
        ok = false;
      }
      if (!metric) {
        error(b.metric, "unknown metric '" + b.metric.text + "' (expected alpha, delta_scaled or sole_angle)",
              "unknown-metric");
        ok = false;
      }
      const fuzzy::Controller* c = set_.find(b.controller.text);
      if (!c) {
        error(b.controller, "unknown controller '" + b.controller.text + "'", "unknown-controller");
        ok = false;
      }
      if (!ok || broken_.contains(c->name)) continue;
      if (set_.binding(*mode, *role)) {
        error(b.role, "joint role '" + b.role.text + "' is already bound in gait mode '" + b.mode.text + "'",
              "duplicate-binding");
        continue;
      }
      if (c->inputs.size() != 1) {
        error(b.controller, "controller '" + c->name + "' must have exactly one input to be bound to a metric",
              "bad-arity");
        continue;
      }
      if (c->inputs[0].unit != metric_unit(*metric)) {
        error(b.metric,
              std::string("metric '") + b.metric.text + "' needs " +
                  (metric_unit(*metric) == fuzzy::Unit::scalar ? "a scalar" : "an angle") + " input",
              "unit-mismatch");
        continue;
      }
      first_of_mode.emplace(*mode, &b);
      set_.bindings.push_back({*mode, *role, c->name, *metric});
    }
    for (const auto& [mode, site] : first_of_mode)
      for (auto role : kJointRoles)
        if (!set_.binding(mode, role))
          error(site->keyword,
                "unbound joint-role '" + std::string(role_name(role)) + "' in gait mode '" +
                    std::string(mode_name(mode)) + "'",
                "unbound-role");
  }
};

}  // namespace detail

struct ParseResult {
  std::optional<ControllerSet> set;
  std::vector<Diagnostic> diagnostics;
  bool ok() const noexcept { return set.has_value(); }
};

/// Parse and fully validate a controller file. On failure `set` is empty and
/// at least one error diagnostic is present.
inline ParseResult parse(const SourceFile& src) {
  ParseResult r;
  auto tokens = detail::lex(src.text, r.diagnostics);
  detail::Parser p(std::move(tokens), r.diagnostics);
  auto set = p.run();
  std::ranges::stable_sort(r.diagnostics, [](const Diagnostic& a, const Diagnostic& b) {
    return std::pair(a.line, a.column) < std::pair(b.line, b.column);
  });
  const bool has_error =
      std::ranges::any_of(r.diagnostics, [](const Diagnostic& d) { return d.severity == Severity::error; });
  if (!has_error) r.set = std::move(set);
  return r;
}

inline ParseResult parse(std::string_view text) { return parse(SourceFile{std::string(text), "<inline>"}); }

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

/// Shortest text of `shown` (at least 6 significant digits) that the
/// parser maps back to exactly `exact` through `back`.
template <class Back>
std::string num(double exact, double shown, Back back) {
  if (shown == 0.0) shown = 0.0;  // no "-0"
  std::string text;
  for (int digits = 6; digits <= 17; ++digits) {
    std::ostringstream os;
    os << std::setprecision(digits) << shown;
    text = os.str();
    double parsed = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), parsed);
    if (back(parsed) == exact) break;
  }
  return text;
}

}  // namespace detail

inline std::string serialize(const ControllerSet& set) {
  using detail::num;
  std::ostringstream os;
  os << "# gaitfuzz controller set\n";
  for (const auto& c : set.controllers) {
    os << "\ncontroller " << c.name << " {\n";
    for (const auto& v : c.inputs) {
      const bool angle = v.unit == fuzzy::Unit::angle;
      const double k = angle ? deg_to_rad(1.0) : 1.0;
      auto out = [&](double x) { return num(x, angle ? rad_to_deg(x) : x, [k](double t) { return t * k; }); };
      os << "  input " << v.name << " range " << out(v.lo) << " .. " << out(v.hi) << (angle ? "" : " scalar")
         << " {\n";
      for (const auto& l : v.labels) {
        os << "    " << l.name << ' ' << fuzzy::shape_keyword(l.mf.shape) << '(';
        auto bp = l.mf.breakpoints();
        for (std::size_t i = 0; i < bp.size(); ++i) os << (i ? ", " : "") << out(bp[i]);
        os << ")\n";
      }
      os << "  }\n";
    }
    os << "  output " << c.output.name << " {\n";
    for (const auto& s : c.output.singletons) os << "    " << s.name << ' ' << num(s.value, rad_to_deg(s.value), [](double t) { return deg_to_rad(t); }) << '\n';
    os << "  }\n";
    for (const auto& r : c.rules) {
      os << "  rule if ";
      for (std::size_t i = 0; i < r.antecedent.size(); ++i) {
        const auto& cl = r.antecedent[i];
        const auto& v = c.inputs[cl.input];
        os << (i ? " and " : "") << v.name << " is " << v.labels[cl.label].name;
      }
      os << " then " << c.output.name << " is " << c.output.singletons[r.consequent].name << '\n';
    }
    os << "}\n";
  }
  if (!set.bindings.empty()) os << '\n';
  for (const auto& b : set.bindings)
    os << "bind " << mode_name(b.mode) << ' ' << role_name(b.role) << ' ' << b.controller << " metric "
       << metric_name(b.metric) << '\n';
  return os.str();
}

/// Structural equality with a relative tolerance on every real value.
inline bool equivalent(const ControllerSet& a, const ControllerSet& b, double rel_tol = 1e-9) {
  auto close = [&](double x, double y) {
    return x == y || std::abs(x - y) <= rel_tol * std::max({1.0, std::abs(x), std::abs(y)});
  };
  if (a.bindings != b.bindings || a.controllers.size() != b.controllers.size()) return false;
  for (std::size_t i = 0; i < a.controllers.size(); ++i) {
    const auto& ca = a.controllers[i];
    const auto& cb = b.controllers[i];
    if (ca.name != cb.name || ca.rules != cb.rules || ca.inputs.size() != cb.inputs.size()) return false;
    if (ca.output.name != cb.output.name || ca.output.singletons.size() != cb.output.singletons.size()) return false;
    for (std::size_t s = 0; s < ca.output.singletons.size(); ++s) {
      if (ca.output.singletons[s].name != cb.output.singletons[s].name) return false;
      if (!close(ca.output.singletons[s].value, cb.output.singletons[s].value)) return false;
    }
    for (std::size_t v = 0; v < ca.inputs.size(); ++v) {
      const auto& va = ca.inputs[v];
      const auto& vb = cb.inputs[v];
      if (va.name != vb.name || va.unit != vb.unit || va.labels.size() != vb.labels.size()) return false;
      if (!close(va.lo, vb.lo) || !close(va.hi, vb.hi)) return false;
      for (std::size_t l = 0; l < va.labels.size(); ++l) {
        if (va.labels[l].name != vb.labels[l].name || va.labels[l].mf.shape != vb.labels[l].mf.shape) return false;
        for (std::size_t k = 0; k < 4; ++k)
          if (!close(va.labels[l].mf.points[k], vb.labels[l].mf.points[k])) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Validation of in-memory sets and live patches

/// Invariant violations of a whole set (controllers and bindings).
inline std::vector<std::string> check_set(const ControllerSet& set) {
  std::vector<std::string> out;
  std::set<std::string> names;
  for (const auto& c : set.controllers) {
    if (!names.insert(c.name).second) out.push_back("duplicate controller '" + c.name + "'");
    for (const auto& issue : fuzzy::validate(c)) out.push_back(c.name + ": " + issue.message);
  }
  for (const auto& b : set.bindings) {
    const auto* c = set.find(b.controller);
    if (!c) {
      out.push_back("binding references unknown controller '" + b.controller + "'");
      continue;
    }
    if (c->inputs.size() != 1 || c->inputs[0].unit != metric_unit(b.metric))
      out.push_back("controller '" + c->name + "' cannot be bound to metric '" + std::string(metric_name(b.metric)) +
                    "'");
    int count = 0;
    for (const auto& other : set.bindings) count += other.mode == b.mode && other.role == b.role;
    if (count > 1)
      out.push_back("joint role '" + std::string(role_name(b.role)) + "' bound twice in gait mode '" +
                    std::string(mode_name(b.mode)) + "'");
  }
  for (auto mode : kGaitModes)
    if (set.has_mode(mode))
      for (auto role : kJointRoles)
        if (!set.binding(mode, role))
          out.push_back("unbound joint-role '" + std::string(role_name(role)) + "' in gait mode '" +
                        std::string(mode_name(mode)) + "'");
  return out;
}

struct PatchEntry {
  std::string path;
  double value = 0.0;  // radians / radians per second / scalar
};

class PatchError : public ConfigError {
 public:
  explicit PatchError(std::vector<std::string> diagnostics)
      : ConfigError(diagnostics.empty() ? std::string("patch rejected") : diagnostics.front()),
        diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

namespace detail {

inline std::vector<std::string_view> split_path(std::string_view p) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto dot = p.find('.', start);
    parts.push_back(p.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

inline double* resolve_parameter(ControllerSet& set, std::string_view path) {
  auto parts = split_path(path);
  if (parts.size() < 4) return nullptr;
  auto* c = set.find(parts[0]);
  if (!c) return nullptr;
  if (parts[1] == "output" && parts.size() == 4) {
    if (c->output.name != parts[2]) return nullptr;
    auto i = c->output.label_index(parts[3]);
    return i ? &c->output.singletons[*i].value : nullptr;
  }
  if (parts[1] == "input" && parts.size() == 5) {
    auto vi = c->input_index(parts[2]);
    if (!vi) return nullptr;
    auto& v = c->inputs[*vi];
    auto li = v.label_index(parts[3]);
    if (!li) return nullptr;
    auto& mf = v.labels[*li].mf;
    if (parts[4].size() != 1) return nullptr;
    const auto k = static_cast<std::size_t>(parts[4][0] - 'a');
    if (parts[4][0] < 'a' || k >= fuzzy::arity(mf.shape)) return nullptr;
    return &mf.points[k];
  }
  return nullptr;
}

}  // namespace detail

/// Every tunable parameter as (path, value), in declaration order.
inline std::vector<PatchEntry> list_parameters(const ControllerSet& set) {
  std::vector<PatchEntry> out;
  for (const auto& c : set.controllers) {
    for (const auto& v : c.inputs)
      for (const auto& l : v.labels) {
        auto bp = l.mf.breakpoints();
        for (std::size_t k = 0; k < bp.size(); ++k)
          out.push_back({c.name + ".input." + v.name + "." + l.name + "." + std::string(1, static_cast<char>('a' + k)),
                         bp[k]});
      }
    for (const auto& s : c.output.singletons) out.push_back({c.name + ".output." + c.output.name + "." + s.name, s.value});
  }
  return out;
}

/// New set with the patched values. Rejects the whole patch (PatchError)
/// on an unknown path, a non-finite value, or any broken invariant.
inline ControllerSet apply_patch(const ControllerSet& set, std::span<const PatchEntry> patch) {
  ControllerSet out = set;
  std::vector<std::string> diags;
  for (const auto& p : patch) {
    double* slot = detail::resolve_parameter(out, p.path);
    if (!slot) {
      diags.push_back("unknown path '" + p.path + "'");
      continue;
    }
    if (!std::isfinite(p.value)) {
      diags.push_back("non-finite value for '" + p.path + "'");
      continue;
    }
    *slot = p.value;
  }
  if (diags.empty()) diags = check_set(out);
  if (!diags.empty()) throw PatchError(std::move(diags));
  return out;
}

inline ControllerSet apply_patch(const ControllerSet& set, std::initializer_list<PatchEntry> patch) {
  return apply_patch(set, std::span<const PatchEntry>(patch.begin(), patch.size()));
}

}  // namespace gaitfuzz::dsl
