#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "conveyor/conveyor_operators.hpp"
#include "conveyor/density_evolution.hpp"
#include "conveyor/motion_profiles.hpp"
#include "conveyor/physical_params.hpp"

namespace conveyor {

inline constexpr const char* version_string = "0.1.0";
inline constexpr int csv_format_version = 1;

enum class ScenarioKind { fdds_sweep, trip_time_sweep, ground_state_sweep };

std::string to_string(ScenarioKind kind);

struct OutputSelection {
  bool retention = true;
  bool temperature = true;
  bool ground_population = true;
  bool populations = false;  // extra per-level file
};

/// Validated sweep description. All quantities are SI; `axis` holds f_DDS in
/// Hz for fdds_sweep and the one-way trip time in s otherwise.
struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::fdds_sweep;
  PhysicalParams params = PhysicalParams::rb87_1064nm(254.0);
  std::size_t grid_points = 2001;
  double grid_width_factor = 1.5;
  SimulationConfig simulation;
  std::vector<ProfileKind> profiles;
  double distance = 0.2e-3;
  TripPlan plan;
  double trip_time = 1e-3;                      // fdds_sweep only
  Stepping stepping = StepsPerTraversal{200};   // trip-time sweeps only
  std::vector<double> axis;
  OutputSelection outputs;
  double table_tolerance = 1e-6;
  std::optional<std::filesystem::path> table_cache_dir;

  std::string canonical_config;  // normalized key = value text, defaults applied
  std::vector<std::string> warnings;

  /// Config-unit label and scale of the axis ("kHz", 1e3 or "ms", 1e-3).
  const char* axis_unit() const;
  double axis_scale() const;
  std::string config_hash() const;

  /// Boost schedule of one sweep point.
  BoostSchedule schedule(ProfileKind profile, double axis_value) const;
  BoundSpectrum spectrum() const;
};

/// Parses flat `key = value` text. Units are part of the key names
/// (trap_depth_uK, trip_time_ms, gamma0_over_2pi_kHz, ...). Every problem is
/// collected and reported together through ConfigError.
Scenario validate_config(const std::string& text);
Scenario load_config(const std::filesystem::path& path);

/// Config text of a figure preset: fig3a, fig3b, fig5 or fig6.
std::string preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct SweepRow {
  double axis_value = 0.0;  // config units
  double retention = 0.0;
  double t_eff_uK = 0.0;
  double ground_pop = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";
  Eigen::VectorXd populations;
};

struct ProfileSweep {
  ProfileKind profile;
  std::vector<SweepRow> rows;  // axis order
};

struct TableReport {
  std::size_t n_eff = 0;
  double boost_range = 0.0;  // m/s
  double frame_range = 0.0;  // m/s^2
  std::size_t boost_samples = 0;
  std::size_t frame_samples = 0;
  double boost_error = 0.0;
  double frame_error = 0.0;
  bool from_cache = false;
};

struct SweepResult {
  std::string scenario_name;
  std::string config_echo;
  std::string config_hash;
  std::string code_version = version_string;
  TableReport tables;
  std::vector<std::string> warnings;
  std::vector<ProfileSweep> sweeps;
};

struct RunOptions {
  std::size_t workers = 0;  // 0: hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Operator tables covering every within-limit boost and acceleration of the
/// given schedules, loaded from or stored to `cache` when provided.
OperatorTables build_operator_tables(const BoundSpectrum& spectrum, std::size_t n_eff,
                                     const std::vector<BoostSchedule>& schedules,
                                     double tolerance, const TableCache* cache,
                                     TableReport* report = nullptr);

/// Builds spectrum and tables once, then evolves every (profile, axis) point
/// on a worker pool. Per-point failures are recorded in the row status.
SweepResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// CSV with columns axis_value,retention,t_eff_uK,ground_pop,wall_ms,status
/// preceded by '#' metadata lines.
void write_sweep_csv(std::ostream& out, const SweepResult& result, std::size_t sweep_index);
/// One file per profile: `path` itself for single-profile scenarios,
/// otherwise <stem>_<profile><ext>. Returns the files written.
std::vector<std::filesystem::path> write_sweep_files(const std::filesystem::path& path,
                                                     const SweepResult& result,
                                                     bool populations);

struct OracleComparison {
  std::string label;
  double engine_retention = 0.0;
  double oracle_retention = 0.0;
  double engine_ground = 0.0;
  double oracle_ground = 0.0;
  double max_difference() const;
};

struct OracleReport {
  double tolerance = 0.02;
  std::vector<OracleComparison> points;
  bool passed() const;
};

void write_oracle_report(std::ostream& out, const OracleReport& report);

/// Engine (gamma0 = 0, n_eff = all bound states, ground-state start) against
/// the grid oracle for single sine traversals at trip times `multiples` x the
/// minimum transport time, with `steps` boosts per traversal.
OracleReport standard_oracle_check(const PhysicalParams& params, double distance,
                                   const std::vector<double>& multiples = {3.0, 5.0, 10.0},
                                   std::size_t steps = 200, std::size_t workers = 0);

/// The same comparison on up to `n_points` evenly spaced within-limit points
/// of a scenario, each reduced to a single traversal from the ground state
/// with gamma0 = 0 and n_eff = all bound states.
OracleReport scenario_oracle_check(const Scenario& scenario, std::size_t n_points = 5,
                                   std::size_t workers = 0);

}  // namespace conveyor
