#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "conveyor/errors.hpp"
#include "conveyor/scenario.hpp"
#include "support.hpp"

using namespace conveyor;

namespace {

const char* small_config =
    "name = small\n"
    "scenario = trip_time_sweep\n"
    "profiles = sine, triangle\n"
    "trap_depth_uK = 254\n"
    "n_eff = 12\n"
    "gamma0_over_2pi_kHz = 1.67\n"
    "temperature_uK = 20\n"
    "distance_mm = 0.2\n"
    "traversals = 2\n"
    "steps_per_traversal = 60\n"
    "axis_ms = 0.07, 0.3, 0.8\n"
    "table_tolerance = 1e-4\n";

std::vector<std::string> problems_of(const std::string& text) {
  try {
    validate_config(text);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string csv_of(const SweepResult& r, std::size_t i) {
  std::ostringstream out;
  write_sweep_csv(out, r, i);
  return out.str();
}

// wall_ms is the only column that may differ between runs
std::string without_wall_time(const std::string& csv) {
  static const std::regex wall(R"(^([^#][^,]*,[^,]*,[^,]*,[^,]*,)[^,]*,)", std::regex::multiline);
  return std::regex_replace(csv, wall, "$1X,");
}

std::filesystem::path repo_config(const std::string& name) {
  return std::filesystem::path(CONVEYOR_SOURCE_DIR) / "configs" / name;
}

}  // namespace

TEST_CASE("an empty config lists every missing key") {
  const auto problems = problems_of("");
  for (const char* key : {"scenario", "profiles", "trap_depth_uK", "n_eff",
                          "gamma0_over_2pi_kHz", "distance_mm", "traversals"}) {
    CHECK(mentions(problems, std::string("missing required key ") + key));
  }
  CHECK(problems.size() >= 7);
}

TEST_CASE("bundled configs validate") {
  const auto s = load_config(repo_config("fitted_defaults.conf"));
  CHECK(s.kind == ScenarioKind::fdds_sweep);
  CHECK(s.params == PhysicalParams::rb87_1064nm(254.0));
  CHECK(s.simulation.n_eff == 28);
  CHECK(s.simulation.gamma0 == doctest::Approx(constants::two_pi * 1670.0));
  CHECK(s.simulation.initial.temperature == doctest::Approx(40e-6));
  CHECK(s.plan.n_traversals == 20);
  CHECK(s.axis.size() == 151);
  CHECK(s.axis.front() == doctest::Approx(50e3));
  CHECK(s.axis.back() == doctest::Approx(650e3));
  CHECK(s.trip_time == doctest::Approx(1e-3));
  CHECK(s.warnings.empty());
  CHECK(load_config(repo_config("quick_trip_time.conf")).profiles.size() == 2);
  CHECK_THROWS_AS(load_config(repo_config("missing.conf")), ConfigError);
}

TEST_CASE("presets validate") {
  for (const auto& name : preset_names()) {
    const auto s = validate_config(preset_config(name));
    CHECK(s.name == name);
    CHECK(s.simulation.n_eff == 28);
  }
  CHECK(validate_config(preset_config("fig5")).simulation.initial.kind ==
        InitialCondition::Kind::ground);
  // the shortest trip times exceed a_max and are flagged, not rejected
  CHECK_FALSE(validate_config(preset_config("fig3b")).warnings.empty());
  CHECK_THROWS_AS(preset_config("fig4"), ConfigError);
}

TEST_CASE("config errors are specific") {
  const std::string base = small_config;
  CHECK(mentions(problems_of(base + "trap_depth_mK = 0.254\n"),
                 "unit mismatch for 'trap_depth_mK': expected 'trap_depth_uK'"));
  CHECK(mentions(problems_of(base + "bogus = 1\n"), "unknown key 'bogus'"));
  CHECK(mentions(problems_of(base + "traversals = 3\n"), "duplicate key traversals"));
  CHECK(mentions(problems_of(base + "axis_kHz = 100\n"), "unit mismatch"));
  CHECK(mentions(problems_of(base + "no equals sign\n"), "expected 'key = value'"));

  auto replace = [&](const std::string& from, const std::string& to) {
    std::string t = base;
    t.replace(t.find(from), from.size(), to);
    return problems_of(t);
  };
  CHECK(mentions(replace("n_eff = 12", "n_eff = 40"), "exceeds the 33 bound states"));
  CHECK(mentions(replace("n_eff = 12", "n_eff = 2.5"), "non-negative integer"));
  CHECK(mentions(replace("axis_ms = 0.07, 0.3, 0.8", "axis_ms = 0.3, 0.07"),
                 "strictly increasing"));
  CHECK(mentions(replace("axis_ms = 0.07, 0.3, 0.8", "axis_ms = range(1, 2)"), "linspace"));
  CHECK(mentions(replace("axis_ms = 0.07, 0.3, 0.8", "axis_ms = logspace(0, 1, 5)"), "0 < a < b"));
  CHECK(mentions(replace("profiles = sine, triangle", "profiles = square"), "square"));
  CHECK(mentions(replace("steps_per_traversal = 60", "steps_per_traversal = 3"), "at least 4"));
  CHECK(mentions(replace("steps_per_traversal = 60", "dds_rate_kHz = 200\nsteps_per_traversal = 60"),
                 "exactly one of"));
  CHECK(mentions(replace("temperature_uK = 20", "temperature_uK = -1"), "must be > 0"));
  CHECK(mentions(replace("trap_depth_uK = 254", "trap_depth_uK = abc"), "not a finite number"));
  CHECK(mentions(replace("scenario = trip_time_sweep", "scenario = ground_state_sweep"),
                 "only valid for thermal starts"));
}

TEST_CASE("axis helpers") {
  std::string t = small_config;
  t.replace(t.find("axis_ms = 0.07, 0.3, 0.8"), 24, "axis_ms = logspace(0.1, 1, 3)");
  const auto s = validate_config(t);
  REQUIRE(s.axis.size() == 3);
  CHECK(s.axis[1] == doctest::Approx(std::sqrt(0.1) * 1e-3));
  CHECK(std::string(s.axis_unit()) == "ms");
  CHECK(s.axis_scale() == 1e-3);
}

TEST_CASE("config hash follows the content, not the formatting") {
  const auto a = validate_config(small_config);
  const auto b = validate_config(std::string("# comment\n") + small_config + "\n\n");
  CHECK(a.config_hash() == b.config_hash());
  std::string t = small_config;
  t.replace(t.find("n_eff = 12"), 10, "n_eff = 13");
  CHECK(validate_config(t).config_hash() != a.config_hash());
  CHECK(a.config_hash().size() == 16);
}

TEST_CASE("sweeps are deterministic and the warm cache changes nothing") {
  auto s = validate_config(small_config);
  const auto dir = std::filesystem::temp_directory_path() / "conveyor_scenario_cache";
  std::filesystem::remove_all(dir);
  s.table_cache_dir = dir;

  const auto cold = run_scenario(s, {1, {}});
  CHECK_FALSE(cold.tables.from_cache);
  const auto warm = run_scenario(s, {2, {}});
  CHECK(warm.tables.from_cache);
  REQUIRE(cold.sweeps.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(without_wall_time(csv_of(cold, i)) == without_wall_time(csv_of(warm, i)));
    for (std::size_t k = 0; k < s.axis.size(); ++k) {
      CHECK(cold.sweeps[i].rows[k].retention == warm.sweeps[i].rows[k].retention);
    }
  }

  // the 0.07 ms point is too fast for both profiles
  CHECK(cold.sweeps[0].rows[0].status == "over_a_max");
  CHECK(cold.sweeps[0].rows[0].retention == 0.0);
  CHECK(cold.sweeps[0].rows[2].status == "ok");
  CHECK(cold.sweeps[0].rows[2].retention > 0.5);

  const std::string csv = csv_of(cold, 1);
  CHECK(csv.rfind("# conveyor sweep csv v1\n", 0) == 0);
  CHECK(csv.find("# profile: triangle\n") != std::string::npos);
  CHECK(csv.find("# config_hash: " + s.config_hash()) != std::string::npos);
  CHECK(csv.find("\naxis_value,retention,t_eff_uK,ground_pop,wall_ms,status\n") !=
        std::string::npos);

  const auto out = dir / "sweep.csv";
  const auto files = write_sweep_files(out, cold, true);
  REQUIRE(files.size() == 4);
  CHECK(files[0].filename() == "sweep_sine.csv");
  CHECK(files[1].filename() == "sweep_sine_populations.csv");
  CHECK(files[2].filename() == "sweep_triangle.csv");
  for (const auto& f : files) CHECK(std::filesystem::file_size(f) > 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("oracle report formatting") {
  OracleReport report;
  report.points.push_back({"sine 3x", 0.99, 1.0, 0.90, 0.905});
  CHECK(report.points[0].max_difference() == doctest::Approx(0.01));
  CHECK(report.passed());
  report.points.push_back({"sine 5x", 0.9, 1.0, 0.9, 0.9});
  CHECK_FALSE(report.passed());
  std::ostringstream out;
  write_oracle_report(out, report);
  CHECK(out.str().find("sine 5x") != std::string::npos);
}
