// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kdmc/experiments.hpp"
#include "kdmc/moments.hpp"
#include "kdmc/simulation.hpp"

namespace kdmc {

/// Full-precision decimal rendering that round-trips doubles, so outputs
/// are byte-identical for identical configs and seeds.
std::string format_double(double value);

void write_curve_csv(const std::filesystem::path& file, const ErrorCurve& curve);
void write_moments_csv(const std::filesystem::path& file, const MomentTable& table);
void write_density_csv(const std::filesystem::path& file,
                       const Eigen::ArrayXd& x_center,
                       const Eigen::ArrayXd& value);
void write_cost_csv(const std::filesystem::path& file,
                    const std::vector<CostRow>& rows);
void write_slopes_csv(const std::filesystem::path& file,
                      const std::vector<SlopeRow>& slopes);
void write_events_csv(const std::filesystem::path& file,
                      const std::vector<EventRow>& events);

/// Self-contained gnuplot script regenerating the figure for one curve
/// file written by write_curve_csv.
void write_gnuplot_script(const std::filesystem::path& file,
                          const ErrorCurve& curve,
                          const std::string& csv_name);

/// Persists every part of an experiment result under out_dir: one CSV and
/// one gnuplot script per curve, slopes, cost table and a plain-text
/// summary.
void write_experiment_output(const std::filesystem::path& out_dir,
                             const ExperimentConfig& cfg,
                             const ExperimentResult& result);

/// Content-addressed store for kinetic reference runs, keyed by a
/// canonical (config, seed) string. Entries live in memory and, when a
/// directory is configured, as binary files reused across invocations.
class ReferenceCache {
 public:
  ReferenceCache() = default;
  explicit ReferenceCache(std::filesystem::path dir);

  std::optional<MomentTable> get_moments(const std::string& key);
  void put_moments(const std::string& key, const MomentTable& table);

  std::optional<Eigen::ArrayXd> get_positions(const std::string& key);
  void put_positions(const std::string& key, const Eigen::ArrayXd& positions);

 private:
  std::filesystem::path file_for(const std::string& key,
                                 const char* suffix) const;

  std::filesystem::path dir_;
  std::map<std::string, MomentTable> moments_;
  std::map<std::string, Eigen::ArrayXd> positions_;
};

}  // namespace kdmc
