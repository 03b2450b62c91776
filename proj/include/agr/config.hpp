#pragma once

// INI-style run configuration. Parsing is strict: unknown sections or keys,
// malformed values, and trailing garbage are errors that name the offending
// line. Relative layout paths resolve against the config file's directory.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agr/agr_problem.hpp"
#include "agr/corridor.hpp"
#include "agr/errors.hpp"
#include "agr/harness.hpp"
#include "agr/map_domain.hpp"
#include "agr/pbvi.hpp"
#include "agr/variants.hpp"

namespace agr {

enum class DomainType { kCorridor, kMap };

struct RunConfig {
  DomainType domain = DomainType::kCorridor;
  std::size_t corridor_n = 10;
  CorridorRewards corridor_rewards;
  std::string map_layout = "builtin:default";
  MapRewards map_rewards;
  VisibilityRule visibility;
  CompileOptions pomdp;
  bool terminate_on_decision = false;
  std::vector<double> goal_weights;
  SolverParams solver;
  BatchOptions batch;
  double se_slack = 1.0;
  VariantParams variant;
  std::filesystem::path base_dir = ".";

  static RunConfig load(const std::string& path);
  static RunConfig parse(std::istream& in, const std::string& origin,
                         const std::filesystem::path& base_dir);
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigCursor {
  std::string origin;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
  }

  double number(const std::string& value) const {
    try {
      std::size_t used = 0;
      double v = std::stod(value, &used);
      if (used != value.size()) fail("trailing characters in '" + value + "'");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("expected a number, got '" + value + "'");
    }
  }

  std::size_t count(const std::string& value) const {
    double v = number(value);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      fail("expected a nonnegative integer, got '" + value + "'");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& value) const {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    fail("expected a boolean, got '" + value + "'");
  }
};

}  // namespace detail

inline RunConfig RunConfig::parse(std::istream& in, const std::string& origin,
                                  const std::filesystem::path& base_dir) {
  RunConfig config;
  config.base_dir = base_dir;
  detail::ConfigCursor cursor{origin, 0};
  std::string section;
  std::string line;
  while (std::getline(in, line)) {
    ++cursor.line;
    std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') cursor.fail("unterminated section header");
      section = detail::trim(text.substr(1, text.size() - 2));
      if (section != "domain" && section != "rewards" &&
          section != "map_rewards" && section != "visibility" &&
          section != "pomdp" && section != "goals" && section != "solver" &&
          section != "simulate" && section != "variant")
        cursor.fail("unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = text.find('=');
    if (eq == std::string::npos) cursor.fail("expected key = value");
    std::string key = detail::trim(text.substr(0, eq));
    std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) cursor.fail("empty key");
    if (section.empty()) cursor.fail("key outside any section");

    if (section == "domain") {
      if (key == "type") {
        if (value == "corridor")
          config.domain = DomainType::kCorridor;
        else if (value == "map")
          config.domain = DomainType::kMap;
        else
          cursor.fail("unknown domain type '" + value + "'");
      } else if (key == "n") {
        config.corridor_n = cursor.count(value);
      } else if (key == "layout") {
        config.map_layout = value;
      } else {
        cursor.fail("unknown key '" + key + "' in [domain]");
      }
    } else if (section == "rewards") {
      if (key == "idle") config.corridor_rewards.idle = cursor.number(value);
      else if (key == "work") config.corridor_rewards.work = cursor.number(value);
      else if (key == "observe") config.corridor_rewards.observe_cost = cursor.number(value);
      else if (key == "decide_correct") config.corridor_rewards.decide_correct = cursor.number(value);
      else if (key == "decide_wrong") config.corridor_rewards.decide_wrong = cursor.number(value);
      else cursor.fail("unknown key '" + key + "' in [rewards]");
    } else if (section == "map_rewards") {
      if (key == "idle") config.map_rewards.idle = cursor.number(value);
      else if (key == "work") config.map_rewards.work = cursor.number(value);
      else if (key == "work_miss") config.map_rewards.work_miss = cursor.number(value);
      else if (key == "move") config.map_rewards.move = cursor.number(value);
      else if (key == "help_correct") config.map_rewards.help_correct = cursor.number(value);
      else if (key == "help_wrong") config.map_rewards.help_wrong = cursor.number(value);
      else cursor.fail("unknown key '" + key + "' in [map_rewards]");
    } else if (section == "visibility") {
      if (key == "kind") {
        if (value == "raycast") config.visibility.kind = VisibilityKind::kRaycast;
        else if (value == "axis") config.visibility.kind = VisibilityKind::kAxisAligned;
        else if (value == "radius") config.visibility.kind = VisibilityKind::kRadiusLimited;
        else cursor.fail("unknown visibility kind '" + value + "'");
      } else if (key == "radius") {
        config.visibility.radius = cursor.number(value);
      } else {
        cursor.fail("unknown key '" + key + "' in [visibility]");
      }
    } else if (section == "pomdp") {
      if (key == "horizon") {
        config.pomdp.horizon = cursor.count(value);
        if (config.pomdp.horizon == 0) cursor.fail("horizon must be >= 1");
      } else if (key == "discount") {
        config.pomdp.discount = cursor.number(value);
      } else if (key == "terminate_on_decision") {
        config.terminate_on_decision = cursor.flag(value);
      } else {
        cursor.fail("unknown key '" + key + "' in [pomdp]");
      }
    } else if (section == "goals") {
      if (key == "weights") {
        config.goal_weights.clear();
        std::istringstream parts(value);
        std::string token;
        while (parts >> token)
          config.goal_weights.push_back(cursor.number(token));
        if (config.goal_weights.empty())
          cursor.fail("weights needs at least one value");
      } else {
        cursor.fail("unknown key '" + key + "' in [goals]");
      }
    } else if (section == "solver") {
      if (key == "belief_points") config.solver.belief_points = cursor.count(value);
      else if (key == "epochs") config.solver.epochs = cursor.count(value);
      else if (key == "residual") config.solver.residual = cursor.number(value);
      else if (key == "seed") config.solver.seed = cursor.count(value);
      else if (key == "guided_expansion") config.solver.guided_expansion = cursor.flag(value);
      else if (key == "trace_count") config.solver.trace_count = cursor.count(value);
      else cursor.fail("unknown key '" + key + "' in [solver]");
    } else if (section == "simulate") {
      if (key == "episodes") config.batch.episodes = cursor.count(value);
      else if (key == "seed") config.batch.seed = cursor.count(value);
      else if (key == "se_slack") config.se_slack = cursor.number(value);
      else cursor.fail("unknown key '" + key + "' in [simulate]");
    } else {  // variant
      if (key == "kind") {
        try {
          config.variant.kind = parse_variant(value);
        } catch (const InvalidParams& e) {
          cursor.fail(e.what());
        }
      } else if (key == "penalty") {
        config.variant.penalty = cursor.number(value);
      } else {
        cursor.fail("unknown key '" + key + "' in [variant]");
      }
    }
  }
  return config;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::filesystem::path p(path);
  return parse(in, path, p.has_parent_path() ? p.parent_path()
                                             : std::filesystem::path("."));
}

// Builds the configured domain and compiles it; the variant transform is not
// applied here so callers can derive all four variants from one model.
inline CompiledAgr build_from_config(const RunConfig& config) {
  AgrSpec spec;
  if (config.domain == DomainType::kCorridor) {
    CorridorParams params;
    params.n = config.corridor_n;
    params.rewards = config.corridor_rewards;
    params.goal_weights = config.goal_weights;
    params.terminate_on_decision = config.terminate_on_decision;
    spec = build_corridor(params);
  } else {
    MapLayout layout;
    if (config.map_layout == "builtin:default") {
      layout = default_map_layout();
    } else {
      std::filesystem::path path(config.map_layout);
      if (path.is_relative()) path = config.base_dir / path;
      std::ifstream in(path);
      if (!in)
        throw ConfigError("cannot open layout '" + path.string() + "'");
      layout = parse_map_layout(in);
    }
    layout.rewards = config.map_rewards;
    layout.visibility = config.visibility;
    layout.terminate_on_decision = config.terminate_on_decision;
    spec = build_map(layout);
    spec.goal_weights = config.goal_weights;
  }
  return compile(spec, config.pomdp);
}

}  // namespace agr
