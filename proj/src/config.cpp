// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kdmc/errors.hpp"

namespace kdmc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + value);
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: bad boolean value for '" + key + "': " + value);
}

const std::vector<std::string> kKnownKinds = {
    "run",          "local-sim-error",     "global-sim-error",
    "kinetic-part", "time-evolution-error", "diffusive-part",
    "total-estimation", "fusion-case",     "cost-study",
    "appendix-a-modes"};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  bool saw_t_final = false;
  bool saw_mean_velocity = false;

  std::stringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) {
      throw ConfigError("config: empty value for '" + key + "'");
    }

    if (key == "kind") {
      cfg.kind = value;
    } else if (key == "background") {
      cfg.background = value;
    } else if (key == "u_p" || key == "mean_velocity") {
      cfg.mean_velocity = parse_double(key, value);
      saw_mean_velocity = true;
    } else if (key == "epsilon") {
      cfg.epsilons.clear();
      for (const auto& item : split_list(value)) {
        const double eps = parse_double(key, item);
        if (!(eps > 0.0)) throw ConfigError("config: epsilon must be positive");
        cfg.epsilons.push_back(eps);
      }
    } else if (key == "K") {
      cfg.step_counts.clear();
      for (const auto& item : split_list(value)) {
        const std::int64_t k = parse_int(key, item);
        if (k < 1) throw ConfigError("config: K values must be >= 1");
        cfg.step_counts.push_back(static_cast<int>(k));
      }
    } else if (key == "I") {
      const std::int64_t i = parse_int(key, value);
      if (i < 1) throw ConfigError("config: I must be positive");
      cfg.particles = static_cast<std::uint64_t>(i);
    } else if (key == "I_sweep") {
      cfg.particle_sweep.clear();
      for (const auto& item : split_list(value)) {
        const std::int64_t i = parse_int(key, item);
        if (i < 1) throw ConfigError("config: I_sweep values must be positive");
        cfg.particle_sweep.push_back(static_cast<std::uint64_t>(i));
      }
    } else if (key == "J") {
      const std::int64_t j = parse_int(key, value);
      if (j < 1) throw ConfigError("config: J must be positive");
      cfg.cells = static_cast<int>(j);
    } else if (key == "t_final" || key == "t_bar") {
      cfg.t_final = parse_double(key, value);
      if (!(cfg.t_final > 0.0)) {
        throw ConfigError("config: t_final must be positive");
      }
      saw_t_final = true;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "replicates") {
      const std::int64_t r = parse_int(key, value);
      if (r < 2) throw ConfigError("config: replicates must be >= 2");
      cfg.replicates = static_cast<int>(r);
    } else if (key == "scoring") {
      cfg.scoring = value;
    } else if (key == "method") {
      cfg.method = value;
    } else if (key == "estimator") {
      if (value != "track-length" && value != "start-cell") {
        throw ConfigError("config: estimator must be track-length|start-cell");
      }
      cfg.estimator = value;
    } else if (key == "deposition") {
      cfg.deposition = value;
    } else if (key == "theta_average") {
      cfg.theta_average = value;
    } else if (key == "cfl_safety") {
      cfg.cfl_safety = parse_double(key, value);
      if (!(cfg.cfl_safety > 0.0) || cfg.cfl_safety > 1.0) {
        throw ConfigError("config: cfl_safety must be in (0, 1]");
      }
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "dump_events") {
      cfg.dump_events = parse_bool(key, value);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  if (cfg.kind.empty()) {
    throw ConfigError("config: missing 'kind'");
  }
  if (std::find(kKnownKinds.begin(), kKnownKinds.end(), cfg.kind) ==
      kKnownKinds.end()) {
    throw ConfigError("config: unknown kind '" + cfg.kind + "'");
  }
  if (!saw_t_final && cfg.kind == "fusion-case") {
    cfg.t_final = 0.001;
  }
  if (!saw_mean_velocity &&
      (cfg.kind == "local-sim-error" || cfg.kind == "global-sim-error")) {
    cfg.mean_velocity = 2.0;
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ConfigError("config: cannot open " + file.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.epsilons.empty()) {
    throw ConfigError("config: at least one epsilon is required");
  }
  if (cfg.step_counts.empty()) {
    throw ConfigError("config: at least one K is required");
  }
  if (cfg.scoring != "terminal-time" && cfg.scoring != "time-integrated") {
    throw ConfigError("config: scoring must be terminal-time|time-integrated");
  }
  if (cfg.background != "homogeneous" && cfg.background != "fusion") {
    throw ConfigError("config: background must be homogeneous|fusion");
  }
  to_deposition(cfg.deposition);
  to_theta_average(cfg.theta_average);
  if (cfg.kind == "run") {
    to_method(cfg.method);
  }
  if (cfg.kind == "fusion-case" && cfg.background != "fusion") {
    throw ConfigError("config: fusion-case requires background = fusion");
  }
}

Method to_method(const std::string& name) {
  if (name == "kinetic") return Method::kKinetic;
  if (name == "diffusive") return Method::kDiffusive;
  if (name == "kdmc") return Method::kKdmc;
  if (name == "kdmc-mimicked") return Method::kKdmcMimicked;
  throw ConfigError("unknown method '" + name +
                    "' (kinetic|diffusive|kdmc|kdmc-mimicked|fluid-only)");
}

ScoringMode to_scoring(const std::string& name) {
  if (name == "terminal-time") return ScoringMode::kTerminalTime;
  if (name == "time-integrated") return ScoringMode::kTimeIntegrated;
  throw ConfigError("unknown scoring mode '" + name + "'");
}

DepositionKernel to_deposition(const std::string& name) {
  if (name == "nearest") return DepositionKernel::kNearest;
  if (name == "linear") return DepositionKernel::kLinear;
  throw ConfigError("unknown deposition kernel '" + name + "'");
}

ThetaAverage to_theta_average(const std::string& name) {
  if (name == "per-particle") return ThetaAverage::kPerParticle;
  if (name == "flat") return ThetaAverage::kFlat;
  throw ConfigError("unknown theta average '" + name + "'");
}

}  // namespace kdmc
