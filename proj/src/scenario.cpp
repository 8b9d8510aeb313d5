#include <cmath>
#include <fstream>
#include <set>

#include "subphase/cli.hpp"

namespace subphase::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& required,
                const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!required.count(key) && !optional.count(key)) fail(path + "." + key, "unknown key");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) fail(path + "." + key, "missing required key");
  }
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path + "." + key, "must be finite");
  return d;
}

double number_or(const json& obj, const std::string& key, const std::string& path, double def) {
  return obj.contains(key) ? number(obj, key, path) : def;
}

std::size_t index(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(path + "." + key, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

Complex complex_pair(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(path, "expected a [re, im] pair");
  }
  const Complex z{v[0].get<double>(), v[1].get<double>()};
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) fail(path, "must be finite");
  return z;
}

CVector complex_list(const json& v, std::size_t expected, const std::string& path) {
  if (!v.is_array() || v.size() != expected) {
    fail(path, "expected " + std::to_string(expected) + " [re, im] pairs");
  }
  CVector out(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    out[static_cast<Eigen::Index>(i)] = complex_pair(v[i], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

EnergySpectrum parse_spectrum(const json& s) {
  check_keys(s, "spectrum", {"energies"}, {"hbar"});
  const auto& e = s.at("energies");
  if (!e.is_array() || e.empty()) fail("spectrum.energies", "expected a non-empty array");
  std::vector<double> energies;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e[i].is_number()) fail("spectrum.energies[" + std::to_string(i) + "]", "expected a number");
    energies.push_back(e[i].get<double>());
  }
  const double hbar = number_or(s, "hbar", "spectrum", 1.0);
  if (!(hbar > 0.0)) fail("spectrum.hbar", "must be positive");
  return EnergySpectrum(std::move(energies), hbar);
}

Envelope parse_envelope(const json& e, const std::string& path) {
  check_keys(e, path, {"type"}, {"rate"});
  if (!e.at("type").is_string()) fail(path + ".type", "expected a string");
  const auto type = e.at("type").get<std::string>();
  if (type == "constant") {
    if (e.contains("rate")) fail(path + ".rate", "not allowed for a constant envelope");
    return Envelope::constant();
  }
  if (!e.contains("rate")) fail(path + ".rate", "missing required key");
  const double rate = number(e, "rate", path);
  if (type == "exponential") return Envelope::exponential(rate);
  if (type == "slow_gauge") return Envelope::slow_gauge(rate);
  fail(path + ".type", "must be one of constant, exponential, slow_gauge");
}

DriveTerm parse_term(const json& t, std::size_t n, const std::string& path) {
  check_keys(t, path, {"matrix"}, {"envelope", "carrier", "delta0"});
  const CVector flat = complex_list(t.at("matrix"), n * n, path + ".matrix");
  DriveTerm term;
  term.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      term.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          flat[static_cast<Eigen::Index>(r * n + c)];
    }
  }
  if (t.contains("envelope")) term.envelope = parse_envelope(t.at("envelope"), path + ".envelope");
  term.carrier = number_or(t, "carrier", path, 0.0);
  term.delta_phase = number_or(t, "delta0", path, 0.0);
  return term;
}

TimeGrid parse_grid(const json& g) {
  check_keys(g, "grid", {"t_start", "t_end", "steps"});
  const auto& steps = g.at("steps");
  if (!steps.is_number_integer() || steps.get<long long>() < 1) {
    fail("grid.steps", "expected a positive integer");
  }
  const double t0 = number(g, "t_start", "grid");
  const double t1 = number(g, "t_end", "grid");
  if (!(t1 > t0)) fail("grid.t_end", "must exceed grid.t_start");
  return TimeGrid(t0, t1, steps.get<std::size_t>());
}

ExtractionConfig parse_analysis(const json& a) {
  check_keys(a, "analysis", {}, {"amplitude_floor", "slope_tolerance", "window_fraction"});
  ExtractionConfig cfg;
  cfg.amplitude_floor = number_or(a, "amplitude_floor", "analysis", cfg.amplitude_floor);
  cfg.slope_tolerance = number_or(a, "slope_tolerance", "analysis", cfg.slope_tolerance);
  cfg.window_fraction = number_or(a, "window_fraction", "analysis", cfg.window_fraction);
  if (!(cfg.amplitude_floor > 0.0)) fail("analysis.amplitude_floor", "must be positive");
  if (!(cfg.slope_tolerance > 0.0)) fail("analysis.slope_tolerance", "must be positive");
  if (!(cfg.window_fraction > 0.0 && cfg.window_fraction <= 1.0)) {
    fail("analysis.window_fraction", "must lie in (0, 1]");
  }
  return cfg;
}

IntegratorConfig parse_integrator(const json& i) {
  check_keys(i, "integrator", {},
             {"step_halving_check", "norm_tolerance", "reconstruction_tolerance",
              "hermitian_tolerance"});
  IntegratorConfig cfg;
  if (i.contains("step_halving_check")) {
    if (!i.at("step_halving_check").is_boolean()) {
      fail("integrator.step_halving_check", "expected a boolean");
    }
    cfg.step_halving_check = i.at("step_halving_check").get<bool>();
  }
  cfg.norm_tolerance = number_or(i, "norm_tolerance", "integrator", cfg.norm_tolerance);
  cfg.reconstruction_tolerance =
      number_or(i, "reconstruction_tolerance", "integrator", cfg.reconstruction_tolerance);
  cfg.hermitian_tolerance =
      number_or(i, "hermitian_tolerance", "integrator", cfg.hermitian_tolerance);
  if (!(cfg.norm_tolerance > 0.0)) fail("integrator.norm_tolerance", "must be positive");
  if (!(cfg.reconstruction_tolerance > 0.0)) {
    fail("integrator.reconstruction_tolerance", "must be positive");
  }
  if (!(cfg.hermitian_tolerance > 0.0)) fail("integrator.hermitian_tolerance", "must be positive");
  return cfg;
}

ScanSection parse_scan(const json& s) {
  check_keys(s, "scan", {"omega_min", "omega_max", "points", "horizon", "target_index"});
  ScanSection out;
  out.omega_min = number(s, "omega_min", "scan");
  out.omega_max = number(s, "omega_max", "scan");
  out.points = index(s, "points", "scan");
  out.horizon = number(s, "horizon", "scan");
  out.target_index = index(s, "target_index", "scan");
  if (!(out.omega_min < out.omega_max)) fail("scan.omega_max", "must exceed scan.omega_min");
  if (out.points < 3) fail("scan.points", "must be >= 3");
  return out;
}

std::variant<std::monostate, PerturbationModel, TwoLevelModel> parse_model(const json& m) {
  check_keys(m, "model", {"type", "parameters"});
  if (!m.at("type").is_string()) fail("model.type", "expected a string");
  const auto type = m.at("type").get<std::string>();
  const auto& p = m.at("parameters");
  if (type == "perturbation") {
    check_keys(p, "model.parameters", {"matrix_element", "Omega", "omega", "omega_nk"}, {"hbar"});
    PerturbationModel out;
    auto& s = out.params;
    s.matrix_element = complex_pair(p.at("matrix_element"), "model.parameters.matrix_element");
    s.Omega = number(p, "Omega", "model.parameters");
    s.omega = number(p, "omega", "model.parameters");
    s.omega_nk = number(p, "omega_nk", "model.parameters");
    s.hbar = number_or(p, "hbar", "model.parameters", 1.0);
    if (!(s.hbar > 0.0)) fail("model.parameters.hbar", "must be positive");
    return out;
  }
  if (type == "two_level") {
    check_keys(p, "model.parameters", {"Delta", "B0", "lambda", "omega"},
               {"delta0", "hbar", "truncation_ratio"});
    TwoLevelModel out;
    auto& s = out.params;
    s.Delta = number(p, "Delta", "model.parameters");
    s.B0 = number(p, "B0", "model.parameters");
    s.lambda = number(p, "lambda", "model.parameters");
    s.omega = number(p, "omega", "model.parameters");
    s.delta0 = number_or(p, "delta0", "model.parameters", 0.0);
    s.hbar = number_or(p, "hbar", "model.parameters", 1.0);
    out.truncation_ratio = number_or(p, "truncation_ratio", "model.parameters", 1e-14);
    if (!(s.Delta > 0.0)) fail("model.parameters.Delta", "must be positive");
    if (s.B0 < 0.0) fail("model.parameters.B0", "must be non-negative");
    if (!(s.lambda > 0.0)) fail("model.parameters.lambda", "must be positive");
    if (!(s.hbar > 0.0)) fail("model.parameters.hbar", "must be positive");
    if (!(out.truncation_ratio > 0.0 && out.truncation_ratio <= 1e-6)) {
      fail("model.parameters.truncation_ratio", "must lie in (0, 1e-6]");
    }
    return out;
  }
  fail("model.type", "must be \"perturbation\" or \"two_level\"");
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  check_keys(doc, "scenario", {"spectrum", "drive", "grid", "initial", "analysis"},
             {"integrator", "scan", "model"});

  EnergySpectrum spectrum = parse_spectrum(doc.at("spectrum"));
  const std::size_t n = spectrum.dimension();
  TimeGrid grid = parse_grid(doc.at("grid"));

  auto model = doc.contains("model") ? parse_model(doc.at("model"))
                                     : std::variant<std::monostate, PerturbationModel,
                                                    TwoLevelModel>{};
  if (const auto* tl = std::get_if<TwoLevelModel>(&model)) {
    const auto& e = spectrum.energies();
    if (n != 2 || e[0] != -tl->params.Delta || e[1] != tl->params.Delta ||
        spectrum.hbar() != tl->params.hbar) {
      fail("model.parameters.Delta", "two_level model requires spectrum (-Delta, Delta) and matching hbar");
    }
  }

  const auto& d = doc.at("drive");
  check_keys(d, "drive", {}, {"terms", "from_model"});
  std::vector<DriveTerm> terms;
  bool from_model = false;
  if (d.contains("from_model")) {
    if (!d.at("from_model").is_boolean()) fail("drive.from_model", "expected a boolean");
    from_model = d.at("from_model").get<bool>();
  }
  if (from_model && d.contains("terms")) fail("drive.terms", "not allowed with from_model");
  if (!from_model && !d.contains("terms")) fail("drive.terms", "missing required key");
  std::optional<DriveSpec> drive;
  if (from_model) {
    const auto* tl = std::get_if<TwoLevelModel>(&model);
    if (!tl) fail("drive.from_model", "requires a two_level model section");
    drive = models::two_level_drive_spec(tl->params);
  } else {
    const auto& arr = d.at("terms");
    if (!arr.is_array()) fail("drive.terms", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      terms.push_back(parse_term(arr[i], n, "drive.terms[" + std::to_string(i) + "]"));
    }
    drive = DriveSpec(n, std::move(terms));
  }

  const auto& ini = doc.at("initial");
  check_keys(ini, "initial", {}, {"index", "vector"});
  std::optional<std::size_t> initial_index;
  std::optional<CVector> initial_vector;
  if (ini.contains("index") == ini.contains("vector")) {
    fail("initial", "exactly one of index or vector is required");
  }
  if (ini.contains("index")) {
    initial_index = index(ini, "index", "initial");
    if (*initial_index >= n) fail("initial.index", "out of range for the spectrum");
  } else {
    initial_vector = complex_list(ini.at("vector"), n, "initial.vector");
    if (std::abs(initial_vector->norm() - 1.0) > 1e-12) {
      fail("initial.vector", "must be normalized to within 1e-12");
    }
  }

  ExtractionConfig analysis = parse_analysis(doc.at("analysis"));
  IntegratorConfig integrator =
      doc.contains("integrator") ? parse_integrator(doc.at("integrator")) : IntegratorConfig{};
  std::optional<ScanSection> scan;
  if (doc.contains("scan")) {
    scan = parse_scan(doc.at("scan"));
    if (scan->target_index >= n) fail("scan.target_index", "out of range for the spectrum");
    if (!(scan->horizon > grid.t_start())) fail("scan.horizon", "must exceed grid.t_start");
  }

  return Scenario{std::move(spectrum), std::move(*drive), grid, initial_index,
                  std::move(initial_vector), analysis, integrator, scan, std::move(model)};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace subphase::cli
