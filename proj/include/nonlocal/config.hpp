#pragma once

// JSON run configuration: per-command defaults, file loading and dotted overrides.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonlocal/errors.hpp"
#include "nonlocal/kernels.hpp"

namespace nonlocal {

using Json = nlohmann::json;

inline std::vector<std::string> command_names() {
  return {"grad-check", "hess-check", "sweep", "descend", "sgd", "newton", "pulse"};
}

/// Default configuration for a command. Its shape is the schema: every accepted key appears here.
inline Json command_defaults(const std::string& command) {
  const Json kernel = {{"family", "gaussian"}, {"base_scale", 0.1}};
  Json j = {{"seed", 1}, {"workers", 0}};
  if (command == "grad-check") {
    j.update({{"field", "quadratic"}, {"dim", 1}, {"n", 16}, {"kernel", kernel}, {"resolution", 256},
              {"probes", 50}, {"tolerance", 1e-6}, {"mc_samples", 0}});
  } else if (command == "hess-check") {
    j.update({{"field", "quadratic"}, {"dim", 1}, {"n", 16}, {"kernel", kernel}, {"resolution", 256},
              {"probes", 20}, {"tolerance", 1e-5}, {"variant", "H4"}, {"constant", "moment"},
              {"outer_n", 16}, {"fd_step", nullptr}});
  } else if (command == "sweep") {
    j.update({{"check", "gradient-localization"},
              {"field", ""},
              {"dim", 1},
              {"n_values", {4, 8, 16, 32}},
              {"kernel", kernel},
              {"resolution", 512},
              {"probes", 50},
              {"expect", "auto"},
              {"max_final_error", nullptr},
              {"tracking", {{"x0", 0.01}, {"alpha0", 0.3}, {"q", 0.6}, {"steps", 20}}},
              {"sgd", {{"seeds", 400}, {"K", 100}, {"B", 1.0}, {"M", 2.0}, {"epsilon", 0.02}}},
              {"newton", {{"steps", 12}, {"offset", 0.12}}}});
  } else if (command == "descend") {
    j.update({{"field", "quadratic"},
              {"dim", 1},
              {"x0", nullptr},
              {"n", 16},
              {"kernel", kernel},
              {"resolution", 256},
              {"method", "fixed"},
              {"schedule", {{"kind", "fixed"}, {"alpha", 0.4}, {"q", 0.6}}},
              {"cap", 1.0},
              {"max_iters", 200},
              {"grad_tol", 1e-8},
              {"compare_local", true}});
  } else if (command == "sgd") {
    j.update({{"field", "norm-squared"},
              {"dim", 2},
              {"domain", {{"lower", -1.0}, {"upper", 1.0}}},
              {"n", 32},
              {"kernel", kernel},
              {"B", 1.0},
              {"M", 2.0},
              {"K", 100},
              {"epsilon", 0.02},
              {"seeds", 1}});
  } else if (command == "newton") {
    j.update({{"field", "quartic-quadratic"},
              {"dim", 1},
              {"x0", nullptr},
              {"offset", 0.12},
              {"n", 32},
              {"kernel", kernel},
              {"resolution", 512},
              {"max_iters", 12},
              {"grad_tol", 0.0},
              {"beta0", 1.0},
              {"backtrack", true},
              {"compare_local", true}});
  } else if (command == "pulse") {
    j.update({{"families", {"gaussian", "bump"}},
              {"n_values", {1, 2, 3}},
              {"alpha", 0.03},
              {"threshold", 2.5},
              {"theta0", 0.1},
              {"theta_star", 0.5},
              {"max_iters", 200},
              {"resolution", 256},
              {"tolerance", 0.02},
              {"gaussian_base", 0.9},
              {"bump_base", 1.8},
              {"pulse_width", 0.125},
              {"signal_grid", 4096}});
  } else {
    throw ConfigError(command, "unknown command");
  }
  return j;
}

namespace detail {

inline void check_against(const Json& schema, const Json& value, const std::string& path) {
  const auto key = path.empty() ? std::string("<root>") : path;
  if (schema.is_object()) {
    if (!value.is_object()) throw ConfigError(key, "expected an object");
    for (auto it = value.begin(); it != value.end(); ++it) {
      const std::string sub = path.empty() ? it.key() : path + "." + it.key();
      if (!schema.contains(it.key())) throw ConfigError(sub, "unknown key");
      check_against(schema.at(it.key()), it.value(), sub);
    }
    return;
  }
  if (schema.is_null()) {
    if (!(value.is_null() || value.is_number() || value.is_array()))
      throw ConfigError(key, "expected null, a number or an array");
    if (value.is_array())
      for (const auto& v : value)
        if (!v.is_number()) throw ConfigError(key, "expected an array of numbers");
    return;
  }
  if (schema.is_array()) {
    if (!value.is_array()) throw ConfigError(key, "expected an array");
    if (!schema.empty())
      for (const auto& v : value) check_against(schema.front(), v, key);
    return;
  }
  if (schema.is_boolean() && !value.is_boolean()) throw ConfigError(key, "expected a boolean");
  if (schema.is_string() && !value.is_string()) throw ConfigError(key, "expected a string");
  if (schema.is_number_integer() && !value.is_number_integer()) throw ConfigError(key, "expected an integer");
  if (schema.is_number_float() && !value.is_number()) throw ConfigError(key, "expected a number");
}

inline void collect_leaves(const Json& j, const std::string& path, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      collect_leaves(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else {
    out.push_back(path);
  }
}

inline void deep_merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) {
    if (it.value().is_object() && into.contains(it.key()) && into[it.key()].is_object())
      deep_merge(into[it.key()], it.value());
    else
      into[it.key()] = it.value();
  }
}

inline Json::json_pointer to_pointer(const std::string& dotted) {
  std::string p;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    p += "/" + dotted.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return Json::json_pointer(p);
}

}  // namespace detail

/// Maps an override key to a full dotted path: exact paths win, otherwise the key must name a
/// unique leaf (or unique dotted suffix of one).
inline std::string resolve_key(const Json& schema, const std::string& key) {
  std::vector<std::string> leaves;
  detail::collect_leaves(schema, "", leaves);
  std::vector<std::string> hits;
  for (const auto& l : leaves) {
    if (l == key) return l;
    if (l.size() > key.size() && l.compare(l.size() - key.size(), key.size(), key) == 0 &&
        l[l.size() - key.size() - 1] == '.')
      hits.push_back(l);
  }
  if (hits.size() == 1) return hits.front();
  if (hits.empty()) throw ConfigError(key, "unknown key");
  throw ConfigError(key, "ambiguous key");
}

/// Values are parsed as JSON when possible, otherwise taken as strings.
inline Json parse_override_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

inline void apply_override(Json& config, const Json& schema, const std::string& key, const Json& value) {
  const std::string full = resolve_key(schema, key);
  detail::check_against(schema.at(detail::to_pointer(full)), value, full);
  config[detail::to_pointer(full)] = value;
}

/// "key=value" strings, applied in order.
inline void apply_overrides(Json& config, const Json& schema, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(o, "override must look like key=value");
    apply_override(config, schema, o.substr(0, eq), parse_override_value(o.substr(eq + 1)));
  }
}

/// Defaults, then the file (if any), then overrides. The result is schema-checked.
inline Json load_config(const std::string& command, const std::optional<std::string>& path,
                        const std::vector<std::string>& overrides = {}) {
  const Json schema = command_defaults(command);
  Json config = schema;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw IoError(*path, "cannot open config");
    Json file;
    try {
      file = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError(*path, std::string("invalid JSON: ") + e.what());
    }
    detail::check_against(schema, file, "");
    detail::deep_merge(config, file);
  }
  apply_overrides(config, schema, overrides);
  return config;
}

inline KernelFamily parse_family(const std::string& s) {
  if (s == "gaussian") return KernelFamily::Gaussian;
  if (s == "bump") return KernelFamily::Bump;
  throw ConfigError(s, "kernel family must be gaussian or bump");
}

}  // namespace nonlocal
