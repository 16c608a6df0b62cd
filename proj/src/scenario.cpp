#include "conveyor/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "conveyor/errors.hpp"
#include "conveyor/grid_oracle.hpp"
#include "parallel.hpp"

namespace conveyor {

namespace {

std::string format_number(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.12g", x);
  return buffer;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

enum class KeyType { text, number, count, list };

struct KeySpec {
  KeyType type;
  const char* fallback;  // nullptr: no default
};

const std::map<std::string, KeySpec>& key_specs() {
  static const std::map<std::string, KeySpec> specs = {
      {"name", {KeyType::text, "unnamed"}},
      {"scenario", {KeyType::text, nullptr}},
      {"profiles", {KeyType::list, nullptr}},
      {"wavelength_nm", {KeyType::number, "1064"}},
      {"atom_mass_u", {KeyType::number, "86.909180527"}},
      {"trap_depth_uK", {KeyType::number, nullptr}},
      {"n_eff", {KeyType::count, nullptr}},
      {"gamma0_over_2pi_kHz", {KeyType::number, nullptr}},
      {"initial_state", {KeyType::text, nullptr}},
      {"temperature_uK", {KeyType::number, nullptr}},
      {"distance_mm", {KeyType::number, nullptr}},
      {"traversals", {KeyType::count, nullptr}},
      {"pause_ms", {KeyType::number, "0"}},
      {"trip_time_ms", {KeyType::number, nullptr}},
      {"steps_per_traversal", {KeyType::count, nullptr}},
      {"dds_rate_kHz", {KeyType::number, nullptr}},
      {"axis_kHz", {KeyType::list, nullptr}},
      {"axis_ms", {KeyType::list, nullptr}},
      {"grid_points", {KeyType::count, "2001"}},
      {"grid_width_factor", {KeyType::number, "1.5"}},
      {"table_tolerance", {KeyType::number, "1e-6"}},
      {"table_cache_dir", {KeyType::text, nullptr}},
      {"outputs", {KeyType::list, "retention, temperature, ground_population"}},
  };
  return specs;
}

const std::vector<std::string> always_required = {
    "scenario", "profiles", "trap_depth_uK", "n_eff", "gamma0_over_2pi_kHz", "distance_mm",
    "traversals"};

std::string key_base(const std::string& key) {
  const auto cut = key.rfind('_');
  return cut == std::string::npos ? key : key.substr(0, cut);
}

class Parser {
 public:
  explicit Parser(const std::string& text) { read(text); }

  std::vector<std::string> errors;

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string text(const std::string& key) const {
    if (const auto it = values_.find(key); it != values_.end()) return it->second;
    const char* fallback = key_specs().at(key).fallback;
    return fallback ? fallback : "";
  }

  std::optional<double> number(const std::string& key) {
    if (!has(key) && !key_specs().at(key).fallback) return std::nullopt;
    const std::string raw = text(key);
    try {
      std::size_t used = 0;
      const double value = std::stod(raw, &used);
      if (trim(raw.substr(used)).empty() && std::isfinite(value)) return value;
    } catch (const std::exception&) {
    }
    errors.push_back(key + ": '" + raw + "' is not a finite number");
    return std::nullopt;
  }

  std::optional<std::size_t> count(const std::string& key) {
    const auto value = number(key);
    if (!value) return std::nullopt;
    if (*value < 0.0 || std::floor(*value) != *value) {
      errors.push_back(key + ": expected a non-negative integer, got '" + text(key) + "'");
      return std::nullopt;
    }
    return static_cast<std::size_t>(*value);
  }

 private:
  void read(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = "line " + std::to_string(line_no) + ": ";
      if (eq == std::string::npos) {
        errors.push_back(where + "expected 'key = value'");
        continue;
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!key_specs().count(key)) {
        errors.push_back(where + unknown_key_message(key));
        continue;
      }
      if (value.empty()) {
        errors.push_back(where + key + " has an empty value");
        continue;
      }
      if (!values_.emplace(key, value).second) {
        errors.push_back(where + "duplicate key " + key);
      }
    }
  }

  static std::string unknown_key_message(const std::string& key) {
    const std::string base = key_base(key);
    for (const auto& [known, spec] : key_specs()) {
      if (known != base && key_base(known) == base) {
        return "unit mismatch for '" + key + "': expected '" + known + "'";
      }
    }
    return "unknown key '" + key + "'";
  }

  std::map<std::string, std::string> values_;
};

std::optional<std::vector<double>> parse_axis(const std::string& key, const std::string& raw,
                                              std::vector<std::string>& errors) {
  std::vector<double> values;
  const auto open = raw.find('(');
  if (open != std::string::npos) {
    const std::string fn = trim(raw.substr(0, open));
    const auto close = raw.rfind(')');
    if ((fn != "linspace" && fn != "logspace") || close == std::string::npos ||
        !trim(raw.substr(close + 1)).empty()) {
      errors.push_back(key + ": expected linspace(a, b, n), logspace(a, b, n) or a list");
      return std::nullopt;
    }
    const auto args = split_list(raw.substr(open + 1, close - open - 1));
    double a = 0, b = 0, n = 0;
    try {
      if (args.size() != 3) throw std::invalid_argument("arity");
      a = std::stod(args[0]);
      b = std::stod(args[1]);
      n = std::stod(args[2]);
    } catch (const std::exception&) {
      errors.push_back(key + ": " + fn + " needs three numeric arguments");
      return std::nullopt;
    }
    if (n < 1 || std::floor(n) != n || (n > 1 && !(b > a)) || !(a > 0)) {
      errors.push_back(key + ": " + fn + " needs 0 < a < b and an integer n >= 1");
      return std::nullopt;
    }
    const auto count = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < count; ++i) {
      const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
      values.push_back(fn == "linspace" ? a + f * (b - a) : a * std::pow(b / a, f));
    }
  } else {
    for (const auto& item : split_list(raw)) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        errors.push_back(key + ": '" + item + "' is not a number");
        return std::nullopt;
      }
    }
  }
  if (values.empty()) {
    errors.push_back(key + ": axis is empty");
    return std::nullopt;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      errors.push_back(key + ": axis values must be finite and positive");
      return std::nullopt;
    }
    if (i > 0 && !(values[i] > values[i - 1])) {
      errors.push_back(key + ": axis must be strictly increasing");
      return std::nullopt;
    }
  }
  return values;
}

double nice_ceiling(double x) {
  if (!(x > 0.0)) return 0.0;
  const double unit = std::pow(10.0, std::floor(std::log10(x)) - 1.0);
  const double up = std::ceil(x / unit * (1.0 - 1e-12)) * unit;
  return up >= x ? up : up + unit;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::fdds_sweep:
      return "fdds_sweep";
    case ScenarioKind::trip_time_sweep:
      return "trip_time_sweep";
    case ScenarioKind::ground_state_sweep:
      return "ground_state_sweep";
  }
  return "unknown";
}

const char* Scenario::axis_unit() const {
  return kind == ScenarioKind::fdds_sweep ? "kHz" : "ms";
}

double Scenario::axis_scale() const { return kind == ScenarioKind::fdds_sweep ? 1e3 : 1e-3; }

std::string Scenario::config_hash() const {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_config)));
  return buffer;
}

BoostSchedule Scenario::schedule(ProfileKind profile, double axis_value) const {
  auto make = [&](double trip) {
    return profile == ProfileKind::triangle ? VelocityProfile::triangle(distance, trip)
                                            : VelocityProfile::sine(distance, trip);
  };
  if (kind == ScenarioKind::fdds_sweep) {
    return discretize(make(trip_time), plan, DdsRate{axis_value});
  }
  return discretize(make(axis_value), plan, stepping);
}

BoundSpectrum Scenario::spectrum() const {
  return solve_bound_spectrum(params,
                              SpatialGrid::for_site(params, grid_points, grid_width_factor));
}

Scenario validate_config(const std::string& text) {
  Parser p(text);
  auto& errors = p.errors;
  for (const auto& key : always_required) {
    if (!p.has(key)) errors.push_back("missing required key " + key);
  }

  Scenario s;
  s.name = p.text("name");

  if (p.has("scenario")) {
    const std::string kind = p.text("scenario");
    if (kind == "fdds_sweep") {
      s.kind = ScenarioKind::fdds_sweep;
    } else if (kind == "trip_time_sweep") {
      s.kind = ScenarioKind::trip_time_sweep;
    } else if (kind == "ground_state_sweep") {
      s.kind = ScenarioKind::ground_state_sweep;
    } else {
      errors.push_back("scenario: expected fdds_sweep, trip_time_sweep or ground_state_sweep");
    }
  }

  for (const auto& item : split_list(p.text("profiles"))) {
    if (item == "sine") {
      s.profiles.push_back(ProfileKind::sine);
    } else if (item == "triangle") {
      s.profiles.push_back(ProfileKind::triangle);
    } else {
      errors.push_back("profiles: '" + item + "' is not one of sine, triangle");
    }
  }
  if (p.has("profiles") && s.profiles.empty()) errors.push_back("profiles: list is empty");
  if (std::set<ProfileKind>(s.profiles.begin(), s.profiles.end()).size() != s.profiles.size()) {
    errors.push_back("profiles: duplicate entries");
  }

  const auto wavelength = p.number("wavelength_nm");
  const auto mass = p.number("atom_mass_u");
  const auto depth = p.number("trap_depth_uK");
  bool params_ok = false;
  if (wavelength && mass && depth) {
    try {
      s.params = PhysicalParams(*wavelength * 1e-9, *mass * constants::atomic_mass_unit,
                                *depth * 1e-6 * constants::boltzmann);
      params_ok = true;
    } catch (const ParameterError& e) {
      errors.push_back(std::string("physical parameters: ") + e.what());
    }
  }

  if (const auto n = p.count("grid_points")) {
    if (*n < 5 || *n % 2 == 0) {
      errors.push_back("grid_points: must be odd and >= 5");
      params_ok = false;
    } else {
      s.grid_points = *n;
    }
  }
  if (const auto f = p.number("grid_width_factor")) {
    if (!(*f >= 1.0)) {
      errors.push_back("grid_width_factor: must be >= 1");
      params_ok = false;
    } else {
      s.grid_width_factor = *f;
    }
  }

  if (const auto n = p.count("n_eff")) {
    if (*n < 2) errors.push_back("n_eff: must be >= 2");
    s.simulation.n_eff = *n;
    if (params_ok && *n >= 2) {
      const std::size_t bound = s.spectrum().n_bound();
      if (*n > bound) {
        errors.push_back("n_eff: " + std::to_string(*n) + " exceeds the " +
                         std::to_string(bound) + " bound states of this trap");
      }
    }
  }
  if (const auto g = p.number("gamma0_over_2pi_kHz")) {
    if (!(*g >= 0.0)) errors.push_back("gamma0_over_2pi_kHz: must be >= 0");
    s.simulation.gamma0 = constants::two_pi * *g * 1e3;
  }

  const std::string initial = p.has("initial_state")
                                  ? p.text("initial_state")
                                  : (s.kind == ScenarioKind::ground_state_sweep ? "ground"
                                                                                : "thermal");
  if (initial == "ground") {
    s.simulation.initial = InitialCondition::ground();
    if (p.has("temperature_uK")) errors.push_back("temperature_uK: only valid for thermal starts");
  } else if (initial == "thermal") {
    if (s.kind == ScenarioKind::ground_state_sweep) {
      errors.push_back("initial_state: ground_state_sweep requires initial_state = ground");
    }
    if (!p.has("temperature_uK")) {
      errors.push_back("missing required key temperature_uK (thermal initial state)");
    } else if (const auto t = p.number("temperature_uK")) {
      if (!(*t > 0.0)) errors.push_back("temperature_uK: must be > 0");
      s.simulation.initial = InitialCondition::thermal(*t * 1e-6);
    }
  } else {
    errors.push_back("initial_state: expected thermal or ground");
  }

  if (const auto d = p.number("distance_mm")) {
    if (!(*d > 0.0)) errors.push_back("distance_mm: must be > 0");
    s.distance = *d * 1e-3;
  }
  if (const auto n = p.count("traversals")) {
    if (*n < 1) errors.push_back("traversals: must be >= 1");
    s.plan.n_traversals = *n;
  }
  if (const auto pause = p.number("pause_ms")) {
    if (!(*pause >= 0.0)) errors.push_back("pause_ms: must be >= 0");
    s.plan.pause = *pause * 1e-3;
  }

  const bool fdds = s.kind == ScenarioKind::fdds_sweep;
  const std::string axis_key = fdds ? "axis_kHz" : "axis_ms";
  const std::string wrong_axis = fdds ? "axis_ms" : "axis_kHz";
  if (p.has(wrong_axis)) {
    errors.push_back("unit mismatch: " + wrong_axis + " does not fit scenario " +
                     to_string(s.kind) + " (expected " + axis_key + ")");
  }
  if (!p.has(axis_key)) {
    errors.push_back("missing required key " + axis_key);
  } else if (auto axis = parse_axis(axis_key, p.text(axis_key), errors)) {
    s.axis = std::move(*axis);
    for (double& x : s.axis) x *= s.axis_scale();
  }

  if (fdds) {
    if (p.has("steps_per_traversal") || p.has("dds_rate_kHz")) {
      errors.push_back("fdds_sweep takes its step rate from axis_kHz; remove "
                       "steps_per_traversal / dds_rate_kHz");
    }
    if (!p.has("trip_time_ms")) {
      errors.push_back("missing required key trip_time_ms (fdds_sweep)");
    } else if (const auto t = p.number("trip_time_ms")) {
      if (!(*t > 0.0)) errors.push_back("trip_time_ms: must be > 0");
      s.trip_time = *t * 1e-3;
    }
  } else {
    if (p.has("trip_time_ms")) errors.push_back("trip_time_ms: only valid for fdds_sweep");
    if (p.has("steps_per_traversal") == p.has("dds_rate_kHz")) {
      errors.push_back("trip-time sweeps need exactly one of steps_per_traversal, dds_rate_kHz");
    } else if (p.has("steps_per_traversal")) {
      if (const auto n = p.count("steps_per_traversal")) s.stepping = StepsPerTraversal{*n};
    } else if (const auto f = p.number("dds_rate_kHz")) {
      if (!(*f > 0.0)) errors.push_back("dds_rate_kHz: must be > 0");
      s.stepping = DdsRate{*f * 1e3};
    }
  }

  s.outputs = {false, false, false, false};
  for (const auto& item : split_list(p.text("outputs"))) {
    if (item == "retention") {
      s.outputs.retention = true;
    } else if (item == "temperature") {
      s.outputs.temperature = true;
    } else if (item == "ground_population") {
      s.outputs.ground_population = true;
    } else if (item == "populations") {
      s.outputs.populations = true;
    } else {
      errors.push_back("outputs: '" + item +
                       "' is not one of retention, temperature, ground_population, populations");
    }
  }

  if (const auto tol = p.number("table_tolerance")) {
    if (!(*tol > 0.0 && *tol < 1.0)) errors.push_back("table_tolerance: must lie in (0, 1)");
    s.table_tolerance = *tol;
  }
  if (p.has("table_cache_dir")) s.table_cache_dir = p.text("table_cache_dir");

  // Per-point checks need a consistent scenario.
  if (errors.empty()) {
    const double a_max = s.params.max_acceleration();
    for (ProfileKind profile : s.profiles) {
      for (double x : s.axis) {
        const std::string where = to_string(profile) + " at " +
                                  format_number(x / s.axis_scale()) + " " + s.axis_unit();
        try {
          const BoostSchedule sch = s.schedule(profile, x);
          if (sch.max_abs_acceleration() > a_max) {
            s.warnings.push_back(where + ": peak acceleration " +
                                 format_number(sch.max_abs_acceleration()) +
                                 " m/s^2 exceeds a_max " + format_number(a_max) +
                                 " m/s^2; retention will be 0");
          }
        } catch (const ParameterError& e) {
          errors.push_back(where + ": " + e.what());
        }
      }
    }
  }
  if (!errors.empty()) throw ConfigError(errors);

  std::ostringstream canon;
  for (const auto& [key, spec] : key_specs()) {
    if (!p.has(key) && !spec.fallback) continue;
    if (key == "name" || key == "table_cache_dir") continue;
    canon << key << " = ";
    if (key == axis_key) {
      for (std::size_t i = 0; i < s.axis.size(); ++i) {
        canon << (i ? ", " : "") << format_number(s.axis[i] / s.axis_scale());
      }
    } else if (spec.type == KeyType::number || spec.type == KeyType::count) {
      canon << format_number(std::stod(p.text(key)));
    } else {
      canon << p.text(key);
    }
    canon << '\n';
  }
  if (!p.has("initial_state")) canon << "initial_state = " << initial << '\n';
  s.canonical_config = canon.str();
  return s;
}

Scenario load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::ostringstream text;
  text << in.rdbuf();
  return validate_config(text.str());
}

std::vector<std::string> preset_names() { return {"fig3a", "fig3b", "fig5", "fig6"}; }

std::string preset_config(const std::string& name) {
  const std::string common =
      "trap_depth_uK = 254\n"
      "n_eff = 28\n"
      "gamma0_over_2pi_kHz = 1.67\n"
      "distance_mm = 0.2\n";
  if (name == "fig3a") {
    return "name = fig3a\n"
           "scenario = fdds_sweep\n"
           "profiles = sine\n" +
           common +
           "temperature_uK = 40\n"
           "traversals = 20\n"
           "trip_time_ms = 1\n"
           "axis_kHz = linspace(50, 650, 151)\n"
           "outputs = retention, temperature\n";
  }
  if (name == "fig3b") {
    return "name = fig3b\n"
           "scenario = trip_time_sweep\n"
           "profiles = sine, triangle\n" +
           common +
           "temperature_uK = 40\n"
           "traversals = 20\n"
           "steps_per_traversal = 200\n"
           "axis_ms = logspace(0.08, 1.0, 120)\n"
           "outputs = retention, temperature\n";
  }
  if (name == "fig5" || name == "fig6") {
    return "name = " + name +
           "\n"
           "scenario = ground_state_sweep\n"
           "profiles = sine, triangle\n" +
           common +
           "traversals = 1\n"
           "steps_per_traversal = 200\n"
           "axis_ms = logspace(0.08, 1.0, 120)\n" +
           (name == "fig5" ? "outputs = ground_population\n" : "outputs = temperature\n");
  }
  throw ConfigError({"unknown preset '" + name + "' (expected fig3a, fig3b, fig5 or fig6)"});
}

// ---------------------------------------------------------------------------

OperatorTables build_operator_tables(const BoundSpectrum& spectrum, std::size_t n_eff,
                                     const std::vector<BoostSchedule>& schedules,
                                     double tolerance, const TableCache* cache,
                                     TableReport* report) {
  const double a_max = spectrum.params.max_acceleration();
  double max_dv = 0.0;
  double max_a = 0.0;
  for (const auto& sch : schedules) {
    for (double dv : sch.boosts) {
      const double a = std::abs(dv) / sch.dt;
      if (a > a_max) continue;
      max_dv = std::max(max_dv, std::abs(dv));
      max_a = std::max(max_a, a);
    }
  }
  // Rounded up so that related sweeps share cache entries.
  max_dv = max_dv > 0.0 ? nice_ceiling(max_dv) : 1e-6;
  max_a = max_a > 0.0 ? std::min(nice_ceiling(max_a), a_max) : 1e-6 * a_max;

  TableOptions options;
  options.tolerance = tolerance;
  bool cached = cache != nullptr;

  auto boost = [&]() -> BoostTable {
    if (cache) {
      const auto key = cache->key(spectrum, n_eff, OperatorKind::boost, max_dv, tolerance);
      if (auto hit = cache->load_boost(key)) return std::move(*hit);
      cached = false;
      BoostTable t = build_boost_table_refined(spectrum, n_eff, max_dv, options);
      cache->store(key, t);
      return t;
    }
    return build_boost_table_refined(spectrum, n_eff, max_dv, options);
  }();
  auto frame = [&]() -> FrameTable {
    if (cache) {
      const auto key = cache->key(spectrum, n_eff, OperatorKind::frame, max_a, tolerance);
      if (auto hit = cache->load_frame(key)) return std::move(*hit);
      cached = false;
      FrameTable t = build_frame_table_refined(spectrum, n_eff, max_a, options);
      cache->store(key, t);
      return t;
    }
    return build_frame_table_refined(spectrum, n_eff, max_a, options);
  }();

  if (report) {
    report->n_eff = n_eff;
    report->boost_range = max_dv;
    report->frame_range = max_a;
    report->boost_samples = boost.n_samples();
    report->frame_samples = frame.n_samples();
    report->boost_error = boost.accuracy().worst_error;
    report->frame_error = frame.accuracy().worst_error;
    report->from_cache = cached;
  }
  return {std::move(boost), std::move(frame)};
}

SweepResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  SweepResult result;
  result.scenario_name = scenario.name;
  result.config_echo = scenario.canonical_config;
  result.config_hash = scenario.config_hash();
  result.warnings = scenario.warnings;

  const BoundSpectrum spectrum = scenario.spectrum();
  const std::size_t n_axis = scenario.axis.size();
  const std::size_t total = scenario.profiles.size() * n_axis;

  std::vector<BoostSchedule> schedules(total);
  for (std::size_t i = 0; i < total; ++i) {
    schedules[i] = scenario.schedule(scenario.profiles[i / n_axis], scenario.axis[i % n_axis]);
  }

  std::optional<TableCache> cache;
  if (scenario.table_cache_dir) cache.emplace(*scenario.table_cache_dir);
  const OperatorTables tables =
      build_operator_tables(spectrum, scenario.simulation.n_eff, schedules,
                            scenario.table_tolerance, cache ? &*cache : nullptr, &result.tables);

  for (ProfileKind profile : scenario.profiles) {
    result.sweeps.push_back({profile, std::vector<SweepRow>(n_axis)});
  }

  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  detail::parallel_for(total, options.workers, [&](std::size_t i) {
    SweepRow& row = result.sweeps[i / n_axis].rows[i % n_axis];
    row.axis_value = scenario.axis[i % n_axis] / scenario.axis_scale();
    const auto start = std::chrono::steady_clock::now();
    try {
      const EvolutionResult r = evolve(scenario.simulation, spectrum, schedules[i], tables);
      row.retention = r.retention;
      row.t_eff_uK = r.temperature.kelvin * 1e6;
      row.ground_pop = r.ground_population;
      row.populations = r.populations;
      if (r.exceeded_at_step) {
        row.status = "over_a_max";
      } else if (r.temperature.saturated) {
        row.status = "t_eff_saturated";
      }
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.retention = row.t_eff_uK = row.ground_pop = nan;
      row.status = std::string("error: ") + e.what();
      std::replace(row.status.begin(), row.status.end(), ',', ';');
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    schedules[i] = {};
    const std::size_t finished = ++done;
    if (options.progress) {
      std::lock_guard lock(progress_mutex);
      options.progress(finished, total);
    }
  });
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, std::size_t sweep_index) {
  const ProfileSweep& sweep = result.sweeps.at(sweep_index);
  const TableReport& t = result.tables;
  out << "# conveyor sweep csv v" << csv_format_version << '\n';
  out << "# scenario: " << result.scenario_name << '\n';
  out << "# profile: " << to_string(sweep.profile) << '\n';
  out << "# config_hash: " << result.config_hash << '\n';
  out << "# code_version: " << result.code_version << '\n';
  out << "# tables: n_eff=" << t.n_eff << " boost_range_m_s=" << format_number(t.boost_range)
      << " boost_samples=" << t.boost_samples << " boost_error=" << format_number(t.boost_error)
      << " frame_range_m_s2=" << format_number(t.frame_range)
      << " frame_samples=" << t.frame_samples << " frame_error=" << format_number(t.frame_error)
      << '\n';
  std::istringstream echo(result.config_echo);
  for (std::string line; std::getline(echo, line);) out << "# config: " << line << '\n';
  for (const auto& w : result.warnings) {
    if (w.rfind(to_string(sweep.profile) + " ", 0) == 0) out << "# warning: " << w << '\n';
  }
  out << "axis_value,retention,t_eff_uK,ground_pop,wall_ms,status\n";
  for (const auto& row : sweep.rows) {
    out << format_number(row.axis_value) << ',' << format_number(row.retention) << ','
        << format_number(row.t_eff_uK) << ',' << format_number(row.ground_pop) << ','
        << format_number(std::round(row.wall_ms * 1000.0) / 1000.0) << ',' << row.status << '\n';
  }
}

namespace {

void write_populations_csv(std::ostream& out, const ProfileSweep& sweep) {
  std::size_t levels = 0;
  for (const auto& row : sweep.rows) {
    levels = std::max(levels, static_cast<std::size_t>(row.populations.size()));
  }
  out << "axis_value";
  for (std::size_t i = 1; i <= levels; ++i) out << ",p" << i;
  out << '\n';
  for (const auto& row : sweep.rows) {
    out << format_number(row.axis_value);
    for (std::size_t i = 0; i < levels; ++i) {
      out << ','
          << (i < static_cast<std::size_t>(row.populations.size())
                  ? format_number(row.populations(static_cast<Eigen::Index>(i)))
                  : "nan");
    }
    out << '\n';
  }
}

}  // namespace

std::vector<std::filesystem::path> write_sweep_files(const std::filesystem::path& path,
                                                     const SweepResult& result,
                                                     bool populations) {
  std::vector<std::filesystem::path> written;
  const bool single = result.sweeps.size() == 1;
  for (std::size_t i = 0; i < result.sweeps.size(); ++i) {
    std::filesystem::path target = path;
    const std::string suffix = single ? "" : "_" + to_string(result.sweeps[i].profile);
    target.replace_filename(path.stem().string() + suffix + path.extension().string());
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    {
      std::ofstream out(target);
      if (!out) throw Error("cannot write " + target.string());
      write_sweep_csv(out, result, i);
    }
    written.push_back(target);
    if (populations) {
      std::filesystem::path pop = target;
      pop.replace_filename(target.stem().string() + "_populations" + target.extension().string());
      std::ofstream out(pop);
      if (!out) throw Error("cannot write " + pop.string());
      write_populations_csv(out, result.sweeps[i]);
      written.push_back(pop);
    }
  }
  return written;
}

// ---------------------------------------------------------------------------

double OracleComparison::max_difference() const {
  return std::max(std::abs(engine_retention - oracle_retention),
                  std::abs(engine_ground - oracle_ground));
}

bool OracleReport::passed() const {
  if (points.empty()) return false;
  return std::all_of(points.begin(), points.end(),
                     [&](const OracleComparison& c) { return c.max_difference() <= tolerance; });
}

void write_oracle_report(std::ostream& out, const OracleReport& report) {
  out << "# oracle cross-check (gamma0 = 0, all bound states, ground-state start)\n";
  out << "point,engine_retention,oracle_retention,engine_ground,oracle_ground,max_diff,verdict\n";
  for (const auto& c : report.points) {
    out << c.label << ',' << format_number(c.engine_retention) << ','
        << format_number(c.oracle_retention) << ',' << format_number(c.engine_ground) << ','
        << format_number(c.oracle_ground) << ',' << format_number(c.max_difference()) << ','
        << (c.max_difference() <= report.tolerance ? "PASS" : "FAIL") << '\n';
  }
  out << "# tolerance " << report.tolerance << ": " << (report.passed() ? "PASS" : "FAIL")
      << '\n';
}

namespace {

OracleReport compare_with_oracle(const PhysicalParams& params, const BoundSpectrum& spectrum,
                                 const std::vector<std::string>& labels,
                                 const std::vector<BoostSchedule>& schedules,
                                 std::size_t workers) {
  const std::size_t n = spectrum.n_bound();
  const OperatorTables tables = build_operator_tables(spectrum, n, schedules, 1e-6, nullptr);
  const GridOracle oracle(params);

  SimulationConfig config;
  config.n_eff = n;
  config.gamma0 = 0.0;
  config.initial = InitialCondition::ground();

  OracleReport report;
  report.points.resize(schedules.size());
  detail::parallel_for(schedules.size(), workers, [&](std::size_t i) {
    const EvolutionResult engine = evolve(config, spectrum, schedules[i], tables);
    const OracleResult grid = oracle.propagate(OracleInitial::eigenstate(0), schedules[i]);
    report.points[i] = {labels[i], engine.retention, grid.retention, engine.ground_population,
                        grid.populations(0)};
  });
  return report;
}

}  // namespace

OracleReport standard_oracle_check(const PhysicalParams& params, double distance,
                                   const std::vector<double>& multiples, std::size_t steps,
                                   std::size_t workers) {
  const BoundSpectrum spectrum = solve_bound_spectrum(params, SpatialGrid::for_site(params));
  const double t_min = min_transport_time(ProfileKind::sine, distance, params.max_acceleration());
  std::vector<std::string> labels;
  std::vector<BoostSchedule> schedules;
  for (double m : multiples) {
    const double trip = m * t_min;
    labels.push_back("sine dt=" + format_number(m) + "x_dt_min (" + format_number(trip * 1e3) +
                     " ms)");
    schedules.push_back(
        discretize(VelocityProfile::sine(distance, trip), TripPlan{1, 0.0}, StepsPerTraversal{steps}));
  }
  return compare_with_oracle(params, spectrum, labels, schedules, workers);
}

OracleReport scenario_oracle_check(const Scenario& scenario, std::size_t n_points,
                                   std::size_t workers) {
  Scenario reduced = scenario;
  reduced.plan = TripPlan{1, 0.0};
  const double a_max = scenario.params.max_acceleration();

  std::vector<std::pair<ProfileKind, double>> candidates;
  for (ProfileKind profile : scenario.profiles) {
    for (double x : scenario.axis) {
      if (scenario.schedule(profile, x).max_abs_acceleration() <= a_max) {
        candidates.emplace_back(profile, x);
      }
    }
  }
  std::vector<std::string> labels;
  std::vector<BoostSchedule> schedules;
  const std::size_t picks = std::min(n_points, candidates.size());
  for (std::size_t k = 0; k < picks; ++k) {
    const std::size_t idx =
        picks == 1 ? 0 : k * (candidates.size() - 1) / (picks - 1);
    const auto& [profile, x] = candidates[idx];
    labels.push_back(to_string(profile) + " " + format_number(x / scenario.axis_scale()) + " " +
                     scenario.axis_unit() + " single traversal");
    schedules.push_back(reduced.schedule(profile, x));
  }
  if (schedules.empty()) {
    throw VerificationError("no sweep point lies within the acceleration limit", 0.0);
  }
  return compare_with_oracle(scenario.params, scenario.spectrum(), labels, schedules, workers);
}

}  // namespace conveyor
