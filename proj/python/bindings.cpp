#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "subphase/cli.hpp"
#include "subphase/models.hpp"
#include "subphase/propagator.hpp"
#include "subphase/scan.hpp"
#include "subphase/sub_phase.hpp"

namespace py = pybind11;
using namespace subphase;
namespace m = subphase::models;

namespace {

// samples x N complex array of the coefficient history
CMatrix stacked(const CoefficientTrajectory& traj) {
  CMatrix out(static_cast<Eigen::Index>(traj.values.size()), static_cast<Eigen::Index>(traj.dimension()));
  for (std::size_t j = 0; j < traj.values.size(); ++j) {
    out.row(static_cast<Eigen::Index>(j)) = traj.values[j].transpose();
  }
  return out;
}

Eigen::VectorXd times(const TimeGrid& grid) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) t[static_cast<Eigen::Index>(j)] = grid.at(j);
  return t;
}

Eigen::MatrixXd column_stack(const SubPhaseTrajectory& sp, bool phase) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(sp.grid.size()), static_cast<Eigen::Index>(sp.states.size()));
  for (std::size_t n = 0; n < sp.states.size(); ++n) {
    const auto& src = phase ? sp.states[n].phi : sp.states[n].a;
    for (std::size_t j = 0; j < src.size(); ++j) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = src[j];
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_subphase, mod) {
  mod.doc() = "Sub-geometric phase simulator";

  auto input_error = py::register_exception<InputError>(mod, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DomainError>(mod, "DomainError", input_error.ptr());

  py::class_<EnergySpectrum>(mod, "EnergySpectrum")
      .def(py::init<std::vector<double>, double>(), py::arg("energies"), py::arg("hbar") = 1.0)
      .def_property_readonly("dimension", &EnergySpectrum::dimension)
      .def_property_readonly("energies", &EnergySpectrum::energies)
      .def_property_readonly("hbar", &EnergySpectrum::hbar)
      .def("transition_frequency", &EnergySpectrum::transition_frequency);

  py::class_<Envelope> env(mod, "Envelope");
  py::enum_<Envelope::Kind>(env, "Kind")
      .value("Constant", Envelope::Kind::Constant)
      .value("Exponential", Envelope::Kind::Exponential)
      .value("SlowGauge", Envelope::Kind::SlowGauge);
  env.def_readonly("kind", &Envelope::kind)
      .def_readonly("rate", &Envelope::rate)
      .def_static("constant", &Envelope::constant)
      .def_static("exponential", &Envelope::exponential, py::arg("rate"))
      .def_static("slow_gauge", &Envelope::slow_gauge, py::arg("rate"))
      .def("value", &Envelope::value);

  py::class_<DriveTerm>(mod, "DriveTerm")
      .def(py::init([](CMatrix matrix, Envelope envelope, double carrier, double delta_phase) {
             return DriveTerm{std::move(matrix), envelope, carrier, delta_phase};
           }),
           py::arg("matrix"), py::arg("envelope") = Envelope::constant(), py::arg("carrier") = 0.0,
           py::arg("delta_phase") = 0.0)
      .def_readonly("matrix", &DriveTerm::matrix)
      .def_readonly("envelope", &DriveTerm::envelope)
      .def_readonly("carrier", &DriveTerm::carrier)
      .def_readonly("delta_phase", &DriveTerm::delta_phase);

  py::class_<DriveSpec>(mod, "DriveSpec")
      .def(py::init<std::size_t, std::vector<DriveTerm>>(), py::arg("dimension"),
           py::arg("terms") = std::vector<DriveTerm>{})
      .def_property_readonly("dimension", &DriveSpec::dimension)
      .def_property_readonly("terms", &DriveSpec::terms);

  py::class_<TimeGrid>(mod, "TimeGrid")
      .def(py::init<double, double, std::size_t>(), py::arg("t_start"), py::arg("t_end"), py::arg("steps"))
      .def_property_readonly("t_start", &TimeGrid::t_start)
      .def_property_readonly("t_end", &TimeGrid::t_end)
      .def_property_readonly("steps", &TimeGrid::steps)
      .def_property_readonly("step", &TimeGrid::step)
      .def_property_readonly("times", &times)
      .def("__len__", &TimeGrid::size);

  mod.def("evaluate_drive", &evaluate_drive, py::arg("drive"), py::arg("t"));
  mod.def("is_hermitian", &is_hermitian, py::arg("drive"), py::arg("grid"), py::arg("tol") = 1e-12);

  py::class_<IntegratorConfig>(mod, "IntegratorConfig")
      .def(py::init<>())
      .def_readwrite("step_halving_check", &IntegratorConfig::step_halving_check)
      .def_readwrite("norm_tolerance", &IntegratorConfig::norm_tolerance)
      .def_readwrite("reconstruction_tolerance", &IntegratorConfig::reconstruction_tolerance)
      .def_readwrite("hermitian_tolerance", &IntegratorConfig::hermitian_tolerance);

  py::class_<ExtractionConfig>(mod, "ExtractionConfig")
      .def(py::init<>())
      .def_readwrite("amplitude_floor", &ExtractionConfig::amplitude_floor)
      .def_readwrite("slope_tolerance", &ExtractionConfig::slope_tolerance)
      .def_readwrite("window_fraction", &ExtractionConfig::window_fraction);

  py::class_<CoefficientTrajectory>(mod, "CoefficientTrajectory")
      .def_readonly("initial_index", &CoefficientTrajectory::initial_index)
      .def_readonly("grid", &CoefficientTrajectory::grid)
      .def_property_readonly("times", [](const CoefficientTrajectory& t) { return times(t.grid); })
      .def_property_readonly("values", &stacked)
      .def_readonly("norm_series", &CoefficientTrajectory::norm_series)
      .def_readonly("hermitian_drive", &CoefficientTrajectory::hermitian_drive)
      .def_readonly("norm_violation", &CoefficientTrajectory::norm_violation)
      .def_readonly("max_norm_drift", &CoefficientTrajectory::max_norm_drift)
      .def_readonly("warnings", &CoefficientTrajectory::warnings);

  mod.def("propagate", &propagate, py::arg("spectrum"), py::arg("drive"), py::arg("initial_index"),
          py::arg("grid"), py::arg("config") = IntegratorConfig{}, py::call_guard<py::gil_scoped_release>());
  mod.def("propagate_with_initial", &propagate_with_initial, py::arg("spectrum"), py::arg("drive"),
          py::arg("initial_vector"), py::arg("grid"), py::arg("config") = IntegratorConfig{},
          py::call_guard<py::gil_scoped_release>());
  mod.def(
      "convergence_error",
      [](const EnergySpectrum& s, const DriveSpec& d, std::size_t k, const TimeGrid& g) {
        return convergence_report(s, d, k, g).coarse_vs_fine_max_error;
      },
      py::arg("spectrum"), py::arg("drive"), py::arg("initial_index"), py::arg("grid"));
  mod.def("max_phase_advance_per_step", &max_phase_advance_per_step);

  py::class_<SubPhaseTrajectory>(mod, "SubPhaseTrajectory")
      .def_readonly("grid", &SubPhaseTrajectory::grid)
      .def_property_readonly("a", [](const SubPhaseTrajectory& sp) { return column_stack(sp, false); })
      .def_property_readonly("phi", [](const SubPhaseTrajectory& sp) { return column_stack(sp, true); })
      .def_property_readonly("defined",
                             [](const SubPhaseTrajectory& sp) {
                               std::vector<std::vector<bool>> out;
                               for (const auto& st : sp.states) out.push_back(st.defined);
                               return out;
                             })
      .def_readonly("warnings", &SubPhaseTrajectory::warnings);

  mod.def("extract", &extract, py::arg("trajectory"), py::arg("config") = ExtractionConfig{});
  mod.def("reconstruct", &reconstruct, py::arg("subphase"), py::arg("n"), py::arg("j"));
  mod.def(
      "density_matrix", [](const CVector& v) { return density_matrix(v).matrix; }, py::arg("coefficients"));
  mod.def(
      "von_neumann_entropy", [](const CMatrix& rho) { return von_neumann_entropy({rho}); }, py::arg("rho"));
  mod.def(
      "dephase", [](const CMatrix& rho) { return dephase({rho}).matrix; }, py::arg("rho"));
  mod.def(
      "expectation", [](const CMatrix& rho, const CMatrix& obs) { return expectation({rho}, obs); },
      py::arg("rho"), py::arg("observable"));
  mod.def(
      "samuel_bhandari_phase",
      [](double phi, double energy, double t, double hbar) {
        const auto p = samuel_bhandari_phase(phi, energy, t, hbar);
        return py::make_tuple(p.total, p.geometric);
      },
      py::arg("phi"), py::arg("energy"), py::arg("t"), py::arg("hbar") = 1.0);
  mod.def("effective_shift", &effective_shift, py::arg("subphase"), py::arg("n"), py::arg("energy"),
          py::arg("t"), py::arg("hbar") = 1.0);
  mod.def("predicted_resonance", &predicted_resonance, py::arg("energy_n"), py::arg("energy_kprime"),
          py::arg("phi_nk"), py::arg("phi_kk"), py::arg("t"), py::arg("hbar") = 1.0);
  mod.def(
      "classify_stability",
      [](const SubPhaseTrajectory& sp, std::size_t n, const ExtractionConfig& cfg) {
        const auto v = classify_stability(sp, n, cfg);
        return py::make_tuple(std::string(to_string(v.classification)), v.fitted_slope);
      },
      py::arg("subphase"), py::arg("n"), py::arg("config") = ExtractionConfig{});

  auto models = mod.def_submodule("models", "worked examples");
  py::class_<m::PerturbationScenario>(models, "PerturbationScenario")
      .def(py::init([](Complex u, double Omega, double omega, double omega_nk, double hbar) {
             return m::PerturbationScenario{u, Omega, omega, omega_nk, hbar};
           }),
           py::arg("matrix_element"), py::arg("Omega"), py::arg("omega"), py::arg("omega_nk"),
           py::arg("hbar") = 1.0);
  models.def("perturbative_c_exact", &m::perturbative_c_exact);
  models.def("perturbative_c_markov", &m::perturbative_c_markov);
  models.def("perturbation_drive_spec", &m::perturbation_drive_spec, py::arg("scenario"), py::arg("n"),
             py::arg("k"), py::arg("dimension"), py::arg("hermitian") = true);

  py::class_<m::TwoLevelScenario>(models, "TwoLevelScenario")
      .def(py::init([](double Delta, double B0, double lambda, double delta0, double omega, double hbar) {
             return m::TwoLevelScenario{Delta, B0, lambda, delta0, omega, hbar};
           }),
           py::arg("Delta"), py::arg("B0"), py::arg("lambda_"), py::arg("delta0") = 0.0,
           py::arg("omega") = 0.0, py::arg("hbar") = 1.0)
      .def_property_readonly("omega21", &m::TwoLevelScenario::omega21)
      .def("spectrum", &m::TwoLevelScenario::spectrum);
  models.def("two_level_drive_spec", &m::two_level_drive_spec);
  models.def("truncation_floor", &m::truncation_floor, py::arg("scenario"), py::arg("t"),
             py::arg("ratio") = 1e-14);
  models.def("a21_closed_form", &m::a21_closed_form);
  models.def("phi21_closed_form", &m::phi21_closed_form);
  models.def(
      "a21_quadrature", [](const m::TwoLevelScenario& s, double t, double tf) { return m::a21_quadrature(s, t, tf); });
  models.def(
      "phi21_quadrature",
      [](const m::TwoLevelScenario& s, double t, double tf) { return m::phi21_quadrature(s, t, tf); });
  models.def("transition_probability_from_a", &m::transition_probability_from_a);
  models.def(
      "two_level_markov_c21",
      [](const m::TwoLevelScenario& s, double t, double tf) { return m::two_level_markov_c21(s, t, tf); });

  py::class_<ScanResult>(mod, "ScanResult")
      .def_readonly("omega", &ScanResult::omega)
      .def_readonly("probability", &ScanResult::probability)
      .def_readonly("peak_omega", &ScanResult::peak_omega)
      .def_readonly("peak_probability", &ScanResult::peak_probability)
      .def_readonly("predicted_omega", &ScanResult::predicted_omega)
      .def_readonly("unshifted_omega", &ScanResult::unshifted_omega)
      .def_readonly("boundary_peak", &ScanResult::boundary_peak)
      .def_readonly("warnings", &ScanResult::warnings);
  mod.def(
      "resonance_scan",
      [](const EnergySpectrum& spectrum, const DriveSpec& drive, double omega_min, double omega_max,
         std::size_t points, double t_start, double horizon, std::size_t steps, std::size_t initial_index,
         std::size_t target_index, unsigned threads) {
        const ScanRequest req{spectrum, drive, omega_min, omega_max, points, t_start, horizon,
                              steps, initial_index, target_index};
        return resonance_scan(req, {}, {}, threads);
      },
      py::arg("spectrum"), py::arg("drive"), py::arg("omega_min"), py::arg("omega_max"), py::arg("points"),
      py::arg("t_start"), py::arg("horizon"), py::arg("steps"), py::arg("initial_index"),
      py::arg("target_index"), py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());

  mod.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& scenario,
         std::optional<std::filesystem::path> out, unsigned threads) {
        std::ostringstream status;
        std::ostringstream diag;
        const cli::CommandContext ctx{threads, &status, &diag};
        const int code = cli::run(command, scenario, out, ctx);
        return py::make_tuple(code, status.str(), diag.str());
      },
      py::arg("command"), py::arg("scenario"), py::arg("out") = py::none(), py::arg("threads") = 1);
}
