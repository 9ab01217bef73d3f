#pragma once

// Validator for the subset of JSON Schema used by protocol/wire.schema.json:
// $ref into #/definitions, oneOf, type, const, enum, required, properties,
// items, minItems, maxItems, minimum.

#include <string>
#include <vector>

#include <json.hpp>

#include "support.hpp"

namespace schema {

using nlohmann::json;

inline const json& wire_schema() {
  static const json s = json::parse(support::read_file(std::string(GAITFUZZ_PROTOCOL_DIR) + "/wire.schema.json"));
  return s;
}

inline bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

inline void check(const json& root, const json& s, const json& v, const std::string& at, std::vector<std::string>& errs) {
  if (s.contains("$ref")) {
    const std::string ref = s["$ref"];
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) {
      errs.push_back(at + ": unsupported $ref " + ref);
      return;
    }
    check(root, root["definitions"][ref.substr(prefix.size())], v, at, errs);
    return;
  }
  if (s.contains("oneOf")) {
    int matched = 0;
    for (const auto& option : s["oneOf"]) {
      std::vector<std::string> sub;
      check(root, option, v, at, sub);
      if (sub.empty()) ++matched;
    }
    if (matched != 1) errs.push_back(at + ": matches " + std::to_string(matched) + " oneOf branches");
    return;
  }
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || has_type(v, t);
    } else {
      ok = has_type(v, s["type"]);
    }
    if (!ok) {
      errs.push_back(at + ": expected " + s["type"].dump());
      return;
    }
  }
  if (s.contains("const") && v != s["const"]) errs.push_back(at + ": expected " + s["const"].dump());
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) errs.push_back(at + ": " + v.dump() + " not in " + s["enum"].dump());
  }
  if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>())
    errs.push_back(at + ": below minimum");
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>())) errs.push_back(at + ": missing '" + r.get<std::string>() + "'");
    if (s.contains("properties"))
      for (const auto& [key, sub] : s["properties"].items())
        if (v.contains(key)) check(root, sub, v[key], at + "." + key, errs);
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errs.push_back(at + ": too few items");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) errs.push_back(at + ": too many items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(root, s["items"], v[i], at + "[" + std::to_string(i) + "]", errs);
  }
}

/// Empty when `message` is a valid wire message.
inline std::vector<std::string> validate(const json& message) {
  std::vector<std::string> errs;
  check(wire_schema(), wire_schema(), message, "$", errs);
  return errs;
}

}  // namespace schema
