#pragma once

#include <string>

#include "gaitfuzz/default_controllers.hpp"
#include "gaitfuzz/dsl.hpp"
#include "gaitfuzz/engine.hpp"
#include "gaitfuzz/error.hpp"

namespace gaitfuzz {

/// The shipped controller set, parsed once.
inline const dsl::ControllerSet& default_controller_set() {
  static const dsl::ControllerSet set = [] {
    auto r = dsl::parse(dsl::SourceFile{std::string(kDefaultControllerText), "<default>"});
    if (!r.ok()) throw ConfigError("built-in controller file is invalid: " + dsl::format(r.diagnostics.front(), "<default>"));
    return *r.set;
  }();
  return set;
}

inline GaitConfig default_config() {
  GaitConfig c;
  c.controllers = default_controller_set();
  return c;
}

}  // namespace gaitfuzz
