#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "conveyor/conveyor_operators.hpp"
#include "conveyor/density_evolution.hpp"
#include "conveyor/dephasing_estimate.hpp"
#include "conveyor/errors.hpp"
#include "conveyor/grid_oracle.hpp"
#include "conveyor/lattice_spectrum.hpp"
#include "conveyor/motion_profiles.hpp"
#include "conveyor/physical_params.hpp"
#include "conveyor/scenario.hpp"

namespace py = pybind11;
using namespace conveyor;

namespace {

VelocityProfile make_profile(const std::string& kind, double distance, double trip_time) {
  switch (parse_profile_kind(kind)) {
    case ProfileKind::sine:
      return VelocityProfile::sine(distance, trip_time);
    case ProfileKind::triangle:
      return VelocityProfile::triangle(distance, trip_time);
    case ProfileKind::custom:
      break;
  }
  throw ParameterError("custom profiles need explicit samples");
}

py::dict sweep_to_dict(const SweepResult& r) {
  py::dict out;
  out["scenario"] = r.scenario_name;
  out["config_hash"] = r.config_hash;
  out["warnings"] = r.warnings;
  py::dict profiles;
  for (const auto& sw : r.sweeps) {
    py::dict d;
    std::vector<double> x, ret, t, g;
    std::vector<std::string> status;
    for (const auto& row : sw.rows) {
      x.push_back(row.axis_value);
      ret.push_back(row.retention);
      t.push_back(row.t_eff_uK);
      g.push_back(row.ground_pop);
      status.push_back(row.status);
    }
    d["axis"] = x;
    d["retention"] = ret;
    d["t_eff_uK"] = t;
    d["ground_pop"] = g;
    d["status"] = status;
    profiles[py::str(to_string(sw.profile))] = d;
  }
  out["profiles"] = profiles;
  return out;
}

}  // namespace

PYBIND11_MODULE(_conveyor, m) {
  m.doc() = "Density-matrix model of atom transport in a DDS-driven optical conveyor";
  m.attr("__version__") = version_string;

  auto base = py::register_exception<Error>(m, "ConveyorError", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<MaxAccelerationExceeded>(m, "MaxAccelerationExceeded", base.ptr());
  py::register_exception<VerificationError>(m, "VerificationError", base.ptr());
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      std::ostringstream msg;
      for (const auto& problem : e.problems()) msg << problem << '\n';
      py::set_error(config_error, msg.str().c_str());
    }
  });

  py::class_<PhysicalParams>(m, "PhysicalParams")
      .def(py::init<double, double, double>(), py::arg("wavelength"), py::arg("atomic_mass"),
           py::arg("trap_depth"))
      .def_static("rb87_1064nm", &PhysicalParams::rb87_1064nm, py::arg("trap_depth_uK") = 254.0)
      .def_property_readonly("wavelength", &PhysicalParams::wavelength)
      .def_property_readonly("atomic_mass", &PhysicalParams::atomic_mass)
      .def_property_readonly("trap_depth", &PhysicalParams::trap_depth)
      .def_property_readonly("trap_frequency", &PhysicalParams::trap_frequency)
      .def_property_readonly("max_acceleration", &PhysicalParams::max_acceleration)
      .def("__repr__", [](const PhysicalParams& p) {
        std::ostringstream s;
        s << "PhysicalParams(wavelength=" << p.wavelength() << ", atomic_mass=" << p.atomic_mass()
          << ", trap_depth=" << p.trap_depth() << ")";
        return s.str();
      });

  m.def("trap_constants", [](const PhysicalParams& p) {
    const auto c = trap_constants(p);
    py::dict d;
    d["angular_frequency"] = c.angular_frequency;
    d["frequency"] = c.frequency;
    d["max_acceleration"] = c.max_acceleration;
    return d;
  });

  py::class_<BoundSpectrum>(m, "BoundSpectrum")
      .def_readonly("params", &BoundSpectrum::params)
      .def_readonly("energies", &BoundSpectrum::energies)
      .def_readonly("eigenfunctions", &BoundSpectrum::eigenfunctions)
      .def_property_readonly("n_bound", &BoundSpectrum::n_bound)
      .def_property_readonly("positions", [](const BoundSpectrum& s) { return s.grid.positions(); })
      .def("level_spacing", &BoundSpectrum::level_spacing, py::arg("i") = 0);

  m.def(
      "solve_bound_spectrum",
      [](const PhysicalParams& p, std::size_t n_points, double width_factor) {
        return solve_bound_spectrum(p, SpatialGrid::for_site(p, n_points, width_factor));
      },
      py::arg("params"), py::arg("n_points") = 2001, py::arg("width_factor") = 1.5);

  m.def("boost_operator_exact", &boost_operator_exact, py::arg("spectrum"), py::arg("n_eff"),
        py::arg("delta_v"));
  m.def("frame_transform_exact", &frame_transform_exact, py::arg("spectrum"), py::arg("n_eff"),
        py::arg("acceleration"));
  m.def("free_propagator", &free_propagator, py::arg("spectrum"), py::arg("n_eff"),
        py::arg("dt"));
  m.def("dephasing_rates", &dephasing_rates, py::arg("spectrum"), py::arg("n_eff"),
        py::arg("gamma0"));

  m.def(
      "min_transport_time",
      [](const std::string& kind, double distance, double a_max) {
        return min_transport_time(parse_profile_kind(kind), distance, a_max);
      },
      py::arg("kind"), py::arg("distance"), py::arg("max_acceleration"));
  m.def("aom_frequency_difference", &aom_frequency_difference, py::arg("velocity"),
        py::arg("wavelength"));

  py::class_<BoostSchedule>(m, "BoostSchedule")
      .def_readonly("dt", &BoostSchedule::dt)
      .def_readonly("boosts", &BoostSchedule::boosts)
      .def_readonly("steps_per_traversal", &BoostSchedule::steps_per_traversal)
      .def_readonly("peak_velocity", &BoostSchedule::peak_velocity)
      .def("max_abs_acceleration", &BoostSchedule::max_abs_acceleration)
      .def("net_displacement", &BoostSchedule::net_displacement)
      .def("__len__", &BoostSchedule::size);

  m.def(
      "discretize",
      [](const std::string& kind, double distance, double trip_time, std::size_t traversals,
         std::optional<std::size_t> steps, std::optional<double> dds_rate, double pause) {
        if (steps.has_value() == dds_rate.has_value()) {
          throw ParameterError("give exactly one of steps, dds_rate");
        }
        const Stepping stepping =
            steps ? Stepping{StepsPerTraversal{*steps}} : Stepping{DdsRate{*dds_rate}};
        return discretize(make_profile(kind, distance, trip_time), {traversals, pause}, stepping);
      },
      py::arg("kind"), py::arg("distance"), py::arg("trip_time"), py::arg("traversals") = 1,
      py::arg("steps") = py::none(), py::arg("dds_rate") = py::none(), py::arg("pause") = 0.0);

  m.def(
      "evolve",
      [](const BoundSpectrum& spectrum, const BoostSchedule& schedule, std::size_t n_eff,
         double gamma0, std::optional<double> temperature, double tolerance) {
        SimulationConfig cfg;
        cfg.n_eff = n_eff;
        cfg.gamma0 = gamma0;
        cfg.initial = temperature ? InitialCondition::thermal(*temperature)
                                  : InitialCondition::ground();
        const auto tables =
            build_operator_tables(spectrum, n_eff, {schedule}, tolerance, nullptr);
        py::gil_scoped_release release;
        const auto r = evolve(cfg, spectrum, schedule, tables);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["retention"] = r.retention;
        d["populations"] = r.populations;
        d["ground_population"] = r.ground_population;
        d["t_eff"] = r.temperature.kelvin;
        d["t_eff_saturated"] = r.temperature.saturated;
        d["rho"] = r.rho_final;
        d["exceeded_at_step"] =
            r.exceeded_at_step ? py::cast(*r.exceeded_at_step) : py::none();
        return d;
      },
      py::arg("spectrum"), py::arg("schedule"), py::arg("n_eff") = 28, py::arg("gamma0") = 0.0,
      py::arg("temperature") = py::none(), py::arg("tolerance") = 1e-6,
      "Evolve a thermal (temperature in K) or ground-state start through the schedule.");

  m.def(
      "estimate_gamma0",
      [](const PhysicalParams& p, double omega_r, double temperature, bool half) {
        const auto e = estimate_gamma0(p, {omega_r, temperature},
                                       half ? AmplitudeConvention::half : AmplitudeConvention::full);
        py::dict d;
        d["gamma0"] = e.gamma0;
        d["tau"] = e.tau;
        d["delta_omega0"] = e.delta_omega0;
        d["omega_min"] = e.excursion.omega_min;
        d["omega_max"] = e.excursion.omega_max;
        d["residual"] = e.residual;
        d["diverged"] = e.diverged;
        return d;
      },
      py::arg("params"), py::arg("omega_r") = constants::two_pi * 1.6e3,
      py::arg("temperature") = 40e-6, py::arg("half_amplitude") = false);

  py::class_<GridOracle>(m, "GridOracle")
      .def(py::init([](const PhysicalParams& p, std::size_t n_points, double window_sites) {
             OracleOptions o;
             o.n_points = n_points;
             o.window_sites = window_sites;
             return GridOracle(p, o);
           }),
           py::arg("params"), py::arg("n_points") = 2048, py::arg("window_sites") = 6.0)
      .def_property_readonly("n_bound", &GridOracle::n_bound)
      .def_property_readonly("energies", &GridOracle::energies)
      .def(
          "propagate",
          [](const GridOracle& o, const BoostSchedule& schedule, std::size_t state) {
            py::gil_scoped_release release;
            const auto r = o.propagate(OracleInitial::eigenstate(state), schedule);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["retention"] = r.retention;
            d["bound_population"] = r.bound_population;
            d["absorbed"] = r.absorbed;
            d["populations"] = r.populations;
            return d;
          },
          py::arg("schedule"), py::arg("state") = 0);

  m.def("validate_config", [](const std::string& text) {
    const Scenario s = validate_config(text);
    py::dict d;
    d["name"] = s.name;
    d["scenario"] = to_string(s.kind);
    d["config_hash"] = s.config_hash();
    d["axis"] = s.axis;
    d["warnings"] = s.warnings;
    return d;
  });
  m.def("preset_config", &preset_config, py::arg("name"));
  m.def("preset_names", &preset_names);

  m.def(
      "run_sweep",
      [](const std::string& text, std::size_t workers,
         std::optional<std::filesystem::path> table_cache) {
        Scenario s = validate_config(text);
        if (table_cache) s.table_cache_dir = *table_cache;
        py::gil_scoped_release release;
        const auto r = run_scenario(s, {workers, {}});
        py::gil_scoped_acquire acquire;
        return sweep_to_dict(r);
      },
      py::arg("config_text"), py::arg("workers") = 0, py::arg("table_cache") = py::none(),
      "Run a scenario given as config text; returns per-profile columns.");

  m.def(
      "oracle_check",
      [](const PhysicalParams& p, double distance, std::vector<double> multiples,
         std::size_t steps) {
        py::gil_scoped_release release;
        const auto rep = standard_oracle_check(p, distance, multiples, steps);
        py::gil_scoped_acquire acquire;
        py::list rows;
        for (const auto& c : rep.points) {
          py::dict d;
          d["label"] = c.label;
          d["engine_retention"] = c.engine_retention;
          d["oracle_retention"] = c.oracle_retention;
          d["engine_ground"] = c.engine_ground;
          d["oracle_ground"] = c.oracle_ground;
          d["max_difference"] = c.max_difference();
          rows.append(d);
        }
        return py::make_tuple(rep.passed(), rows);
      },
      py::arg("params"), py::arg("distance") = 0.2e-3,
      py::arg("multiples") = std::vector<double>{3.0, 5.0, 10.0}, py::arg("steps") = 200);
}
