// Copyright (c) 2026 the kdmc developers.
// SPDX-License-Identifier: Apache-2.0

#include "kdmc/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace kdmc {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) {
    std::filesystem::create_directories(file.parent_path());
  }
  std::ofstream out(file);
  if (!out) {
    throw std::runtime_error("cannot open " + file.string());
  }
  return out;
}

const char* kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kKineticFlight:
      return "kinetic-flight";
    case EventKind::kDiffusiveJump:
      return "diffusive-jump";
    case EventKind::kCollision:
      return "collision";
  }
  return "unknown";
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, buf + n);
}

void write_curve_csv(const std::filesystem::path& file,
                     const ErrorCurve& curve) {
  auto out = open_out(file);
  out << "sweep_value,moment,error,noise_floor\n";
  for (Eigen::Index i = 0; i < curve.sweep.size(); ++i) {
    for (const Series& s : curve.series) {
      out << format_double(curve.sweep[i]) << ',' << s.name << ','
          << format_double(s.error[i]) << ','
          << format_double(s.noise_floor[i]) << '\n';
    }
  }
}

void write_moments_csv(const std::filesystem::path& file,
                       const MomentTable& table) {
  auto out = open_out(file);
  out << "cell_index,x_center,m0,m1,m2\n";
  for (Eigen::Index j = 0; j < table.x_center.size(); ++j) {
    out << j << ',' << format_double(table.x_center[j]) << ','
        << format_double(table.m0[j]) << ',' << format_double(table.m1[j])
        << ',' << format_double(table.m2[j]) << '\n';
  }
}

void write_density_csv(const std::filesystem::path& file,
                       const Eigen::ArrayXd& x_center,
                       const Eigen::ArrayXd& value) {
  auto out = open_out(file);
  out << "cell_index,x_center,value\n";
  for (Eigen::Index j = 0; j < x_center.size(); ++j) {
    out << j << ',' << format_double(x_center[j]) << ','
        << format_double(value[j]) << '\n';
  }
}

void write_cost_csv(const std::filesystem::path& file,
                    const std::vector<CostRow>& rows) {
  auto out = open_out(file);
  out << "K,sim_seconds,est_seconds,speedup,predicted_ratio\n";
  for (const CostRow& r : rows) {
    out << r.step_count << ',' << format_double(r.sim_seconds) << ','
        << format_double(r.est_seconds) << ',' << format_double(r.speedup)
        << ',' << format_double(r.predicted_ratio) << '\n';
  }
}

void write_slopes_csv(const std::filesystem::path& file,
                      const std::vector<SlopeRow>& slopes) {
  auto out = open_out(file);
  out << "curve,series,slope,std_error,points,window_lo,window_hi,valid\n";
  for (const SlopeRow& row : slopes) {
    out << row.curve << ',' << row.series << ','
        << format_double(row.fit.slope) << ','
        << format_double(row.fit.std_error) << ',' << row.fit.points << ','
        << format_double(row.fit.window_lo) << ','
        << format_double(row.fit.window_hi) << ','
        << (row.fit.valid ? 1 : 0) << '\n';
  }
}

void write_events_csv(const std::filesystem::path& file,
                      const std::vector<EventRow>& events) {
  auto out = open_out(file);
  out << "particle,step,kind,x_start,v_start,x_end,v_end,duration\n";
  for (const EventRow& e : events) {
    out << e.particle << ',' << e.step << ',' << kind_name(e.kind) << ','
        << format_double(e.x_start) << ',' << format_double(e.v_start) << ','
        << format_double(e.x_end) << ',' << format_double(e.v_end) << ','
        << format_double(e.duration) << '\n';
  }
}

void write_gnuplot_script(const std::filesystem::path& file,
                          const ErrorCurve& curve,
                          const std::string& csv_name) {
  auto out = open_out(file);
  out << "# gnuplot script for " << curve.name << "\n"
      << "set datafile separator ','\n"
      << "set logscale xy\n"
      << "set xlabel '" << curve.sweep_name << "'\n"
      << "set ylabel 'error'\n"
      << "set key outside\n"
      << "set terminal pngcairo size 900,650\n"
      << "set output '" << curve.name << ".png'\n";
  out << "plot ";
  bool first = true;
  for (const Series& s : curve.series) {
    if (!first) out << ", \\\n     ";
    first = false;
    out << "'" << csv_name << "' using 1:(strcol(2) eq '" << s.name
        << "' ? $3 : 1/0) with linespoints title '" << s.name << "'"
        << ", \\\n     '" << csv_name << "' using 1:(strcol(2) eq '" << s.name
        << "' ? $4 : 1/0) with lines dashtype 2 notitle";
  }
  out << "\n";
}

void write_experiment_output(const std::filesystem::path& out_dir,
                             const ExperimentConfig& cfg,
                             const ExperimentResult& result) {
  std::filesystem::create_directories(out_dir);
  for (const ErrorCurve& curve : result.curves) {
    const std::string csv_name = curve.name + ".csv";
    write_curve_csv(out_dir / csv_name, curve);
    write_gnuplot_script(out_dir / (curve.name + ".gp"), curve, csv_name);
  }
  if (!result.slopes.empty()) {
    write_slopes_csv(out_dir / "slopes.csv", result.slopes);
  }
  if (!result.cost.empty()) {
    write_cost_csv(out_dir / "cost.csv", result.cost);
  }

  auto out = open_out(out_dir / "summary.txt");
  out << "kind: " << cfg.kind << "\nseed: " << cfg.seed << "\n";
  for (const auto& [name, value] : result.markers) {
    out << "marker " << name << " = " << format_double(value) << "\n";
  }
  for (const SlopeRow& row : result.slopes) {
    out << "slope " << row.curve << " " << row.series << " = ";
    if (row.fit.valid) {
      out << format_double(row.fit.slope) << " +- "
          << format_double(row.fit.std_error) << " (" << row.fit.points
          << " pts in [" << format_double(row.fit.window_lo) << ", "
          << format_double(row.fit.window_hi) << "])";
    } else {
      out << "invalid (fewer than 3 admissible points)";
    }
    out << "\n";
  }
  if (result.appendix_a) {
    const auto& a = *result.appendix_a;
    out << "fraction_lower_variance = "
        << format_double(a.fraction_lower_variance) << "\n"
        << "fraction_means_within_3se = "
        << format_double(a.fraction_means_within_3se) << "\n"
        << "terminal_scoring_seconds = "
        << format_double(a.terminal_scoring_seconds) << "\n"
        << "integrated_scoring_seconds = "
        << format_double(a.integrated_scoring_seconds) << "\n";
  }
  for (const std::string& note : result.notes) {
    out << "note: " << note << "\n";
  }
}

ReferenceCache::ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) {
    std::filesystem::create_directories(dir_);
  }
}

std::filesystem::path ReferenceCache::file_for(const std::string& key,
                                               const char* suffix) const {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(key)));
  return dir_ / (std::string(buf) + suffix);
}

namespace {

bool read_doubles(const std::filesystem::path& file,
                  std::vector<double>& values) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) return false;
  values.resize(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  return static_cast<bool>(in);
}

void write_doubles(const std::filesystem::path& file,
                   const std::vector<double>& values) {
  std::ofstream out(file, std::ios::binary);
  const std::uint64_t count = values.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace

std::optional<MomentTable> ReferenceCache::get_moments(const std::string& key) {
  if (auto it = moments_.find(key); it != moments_.end()) {
    return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  std::vector<double> values;
  if (!read_doubles(file_for(key, ".moments"), values) ||
      values.size() % 4 != 0) {
    return std::nullopt;
  }
  const Eigen::Index cells = static_cast<Eigen::Index>(values.size() / 4);
  MomentTable table;
  table.x_center.resize(cells);
  table.m0.resize(cells);
  table.m1.resize(cells);
  table.m2.resize(cells);
  for (Eigen::Index j = 0; j < cells; ++j) {
    table.x_center[j] = values[4 * j];
    table.m0[j] = values[4 * j + 1];
    table.m1[j] = values[4 * j + 2];
    table.m2[j] = values[4 * j + 3];
  }
  moments_.emplace(key, table);
  return table;
}

void ReferenceCache::put_moments(const std::string& key,
                                 const MomentTable& table) {
  moments_[key] = table;
  if (dir_.empty()) return;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(table.x_center.size()) * 4);
  for (Eigen::Index j = 0; j < table.x_center.size(); ++j) {
    values.push_back(table.x_center[j]);
    values.push_back(table.m0[j]);
    values.push_back(table.m1[j]);
    values.push_back(table.m2[j]);
  }
  write_doubles(file_for(key, ".moments"), values);
}

std::optional<Eigen::ArrayXd> ReferenceCache::get_positions(
    const std::string& key) {
  if (auto it = positions_.find(key); it != positions_.end()) {
    return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  std::vector<double> values;
  if (!read_doubles(file_for(key, ".positions"), values)) {
    return std::nullopt;
  }
  Eigen::ArrayXd arr =
      Eigen::Map<Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  positions_.emplace(key, arr);
  return arr;
}

void ReferenceCache::put_positions(const std::string& key,
                                   const Eigen::ArrayXd& positions) {
  positions_[key] = positions;
  if (dir_.empty()) return;
  std::vector<double> values(positions.data(),
                             positions.data() + positions.size());
  write_doubles(file_for(key, ".positions"), values);
}

}  // namespace kdmc
