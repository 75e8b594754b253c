// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "kdmc/experiments.hpp"
#include "kdmc/simulation.hpp"

namespace kdmc {

/// Parses a key = value experiment manifest. Lines starting with '#' and
/// blank lines are ignored; list values are comma-separated. Unknown keys
/// and malformed values raise ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& file);

/// Validates cross-field constraints (non-empty sweeps, positive sizes).
void validate_config(const ExperimentConfig& cfg);

Method to_method(const std::string& name);
ScoringMode to_scoring(const std::string& name);
DepositionKernel to_deposition(const std::string& name);
ThetaAverage to_theta_average(const std::string& name);

}  // namespace kdmc
