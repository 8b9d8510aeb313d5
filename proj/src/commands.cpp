#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <thread>

#include "subphase/cli.hpp"
#include "subphase/scan.hpp"

namespace subphase::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kNA = "NA";

struct Outcome {
  json fields = json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  int exit_code = 0;
  std::string message;
};

std::ostream& status_stream(const CommandContext& ctx) {
  return ctx.status ? *ctx.status : std::cout;
}

std::ostream& diag_stream(const CommandContext& ctx) {
  return ctx.diagnostics ? *ctx.diagnostics : std::cerr;
}

const char* status_name(int code) {
  switch (code) {
    case 0:
      return "ok";
    case 1:
      return "input_error";
    default:
      return "numerical_error";
  }
}

int guarded(std::string_view command, const CommandContext& ctx,
            const std::function<void(Outcome&)>& body) {
  Outcome outcome;
  try {
    body(outcome);
  } catch (const InputError& e) {
    outcome.exit_code = 1;
    outcome.message = e.what();
  } catch (const json::exception& e) {
    outcome.exit_code = 1;
    outcome.message = e.what();
  } catch (const NumericalError& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
  }

  auto& diag = diag_stream(ctx);
  for (const auto& w : outcome.warnings) diag << "warning: " << w << '\n';
  for (const auto& n : outcome.notes) diag << "note: " << n << '\n';
  if (outcome.exit_code != 0) diag << "error: " << outcome.message << '\n';

  json status = {{"command", std::string(command)},
                 {"status", status_name(outcome.exit_code)},
                 {"exit_code", outcome.exit_code},
                 {"warnings", outcome.warnings}};
  if (!outcome.message.empty()) status["message"] = outcome.message;
  for (auto& [key, value] : outcome.fields.items()) status[key] = value;
  status_stream(ctx) << status.dump() << std::endl;
  return outcome.exit_code;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open output file " + path.string());
  out << content;
  out.close();
  if (!out) throw InputError("failed writing output file " + path.string());
}

void append_row(std::string& buf, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf += ',';
    buf += cells[i];
  }
  buf += '\n';
}

// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Compares extracted phases against a run at twice the resolution; a
// disagreement above pi/2 on a shared sample means a branch slipped.
bool branch_slip(const SubPhaseTrajectory& coarse, const SubPhaseTrajectory& fine) {
  for (std::size_t n = 0; n < coarse.states.size(); ++n) {
    const auto& c = coarse.states[n];
    const auto& f = fine.states[n];
    for (std::size_t j = 0; j < c.defined.size(); ++j) {
      if (c.defined[j] && f.defined[2 * j] &&
          std::abs(c.phi[j] - f.phi[2 * j]) > 0.5 * std::numbers::pi) {
        return true;
      }
    }
  }
  return false;
}

CoefficientTrajectory run_propagation(const Scenario& sc, const TimeGrid& grid) {
  if (sc.initial_index) {
    return propagate(sc.spectrum, sc.drive, *sc.initial_index, grid, sc.integrator);
  }
  return propagate_with_initial(sc.spectrum, sc.drive, *sc.initial_vector, grid, sc.integrator);
}

void fineness_finding(const Scenario& sc, std::vector<std::string>& warnings) {
  const double advance = max_phase_advance_per_step(sc.spectrum, sc.drive, sc.grid);
  if (advance >= std::numbers::pi) {
    warnings.push_back("grid too coarse: per-step phase advance " + format_number(advance) +
                       " rad reaches pi");
  }
}

const TwoLevelModel& require_two_level(const Scenario& sc) {
  const auto* m = std::get_if<TwoLevelModel>(&sc.model);
  if (!m) throw ScenarioError("model: this command requires model type \"two_level\"");
  return *m;
}

const PerturbationModel& require_perturbation(const Scenario& sc) {
  const auto* m = std::get_if<PerturbationModel>(&sc.model);
  if (!m) throw ScenarioError("model: this command requires model type \"perturbation\"");
  return *m;
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v + 0.0);
  return buf;
}

fs::path scan_report_path(const fs::path& csv) {
  fs::path report = csv;
  if (report.extension() == ".json") return report.concat(".report.json");
  return report.replace_extension(".json");
}

unsigned threads_from_env() {
  if (const char* env = std::getenv("SUBPHASE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_propagate(const fs::path& scenario, const fs::path& out, const CommandContext& ctx) {
  return guarded("propagate", ctx, [&](Outcome& o) {
    const Scenario sc = load_scenario(scenario);
    fineness_finding(sc, o.warnings);

    const auto traj = run_propagation(sc, sc.grid);
    const auto phases = extract(traj, sc.analysis);
    for (const auto& w : traj.warnings) o.warnings.push_back(w);
    for (const auto& w : phases.warnings) o.warnings.push_back(w);

    if (sc.integrator.step_halving_check) {
      const auto fine = extract(run_propagation(sc, sc.grid.refined(2)), sc.analysis);
      if (branch_slip(phases, fine)) {
        o.warnings.push_back("grid too coarse: phase unwrapping disagrees at double resolution");
      }
    }

    const std::size_t n_states = sc.spectrum.dimension();
    double worst_reconstruction = 0.0;
    std::string csv;
    std::vector<std::string> header{"t"};
    for (std::size_t n = 0; n < n_states; ++n) {
      const auto s = std::to_string(n);
      for (const char* col : {"re_c_", "im_c_", "a_", "phi_", "P_"}) header.push_back(col + s);
    }
    header.push_back("norm");
    append_row(csv, header);

    std::vector<std::string> row;
    for (std::size_t j = 0; j < traj.values.size(); ++j) {
      row.clear();
      row.push_back(format_number(sc.grid.at(j)));
      for (std::size_t n = 0; n < n_states; ++n) {
        const Complex c = traj.values[j][static_cast<Eigen::Index>(n)];
        const auto& st = phases.states[n];
        row.push_back(format_number(c.real()));
        row.push_back(format_number(c.imag()));
        if (st.defined[j]) {
          row.push_back(format_number(st.a[j]));
          row.push_back(format_number(st.phi[j]));
          const Complex back = *reconstruct(phases, n, j);
          worst_reconstruction =
              std::max(worst_reconstruction, std::abs(back - c) / (1.0 + std::abs(c)));
        } else {
          row.push_back(kNA);
          row.push_back(kNA);
        }
        row.push_back(format_number(std::norm(c)));
      }
      row.push_back(format_number(traj.norm_series[j]));
      append_row(csv, row);
    }
    write_file(out, csv);

    if (worst_reconstruction > sc.integrator.reconstruction_tolerance) {
      o.warnings.push_back("sub-phase reconstruction error " + format_number(worst_reconstruction) +
                           " exceeds reconstruction_tolerance");
    }
    if (!traj.hermitian_drive) {
      o.notes.push_back("drive is not Hermitian; norm conservation is not asserted");
    }

    json stability = json::array();
    json shifts = json::array();
    const double t_end = sc.grid.at(sc.grid.steps());
    for (std::size_t n = 0; n < n_states; ++n) {
      const auto verdict = classify_stability(phases, n, sc.analysis);
      stability.push_back({{"state", n},
                           {"classification", to_string(verdict.classification)},
                           {"fitted_slope", verdict.fitted_slope}});
      try {
        shifts.push_back(effective_shift(phases, n, sc.spectrum.energy(n), t_end,
                                         sc.spectrum.hbar()));
      } catch (const InputError&) {
        shifts.push_back(nullptr);
      }
    }
    o.fields = {{"output", out.string()},
                {"samples", traj.values.size()},
                {"hermitian_drive", traj.hermitian_drive},
                {"max_norm_drift", traj.max_norm_drift},
                {"stability", stability},
                {"effective_shift", shifts}};

    if (traj.norm_violation) {
      o.exit_code = 2;
      o.message = "norm violation: " + traj.warnings.front();
    }
  });
}

int cmd_twolevel(const fs::path& scenario, const fs::path& out, const CommandContext& ctx) {
  return guarded("twolevel", ctx, [&](Outcome& o) {
    const Scenario sc = load_scenario(scenario);
    const auto& model = require_two_level(sc);
    const auto& s = model.params;
    const bool closed = s.delta0 == 0.0;
    const std::size_t count = sc.grid.size();

    struct Row {
      double a_closed = 0.0, phi_closed = 0.0;
      models::SubPhasePair quad;
    };
    std::vector<Row> rows(count);
    parallel_for(count, ctx.threads, [&](std::size_t j) {
      const double t = sc.grid.at(j);
      Row& r = rows[j];
      if (closed) {
        r.a_closed = models::a21_closed_form(s, t);
        r.phi_closed = models::phi21_closed_form(s, t);
      }
      r.quad = models::sub_phase_quadrature(s, t, models::truncation_floor(s, t, model.truncation_ratio));
    });

    std::string csv;
    append_row(csv, {"t", "a21_closed", "phi21_closed", "a21_quad", "phi21_quad", "P21"});
    std::size_t unconverged = 0;
    for (std::size_t j = 0; j < count; ++j) {
      const Row& r = rows[j];
      if (!r.quad.converged) ++unconverged;
      const double a = closed ? r.a_closed : r.quad.a21;
      append_row(csv, {format_number(sc.grid.at(j)),
                       closed ? format_number(r.a_closed) : kNA,
                       closed ? format_number(r.phi_closed) : kNA,
                       format_number(r.quad.a21), format_number(r.quad.phi21),
                       format_number(models::transition_probability_from_a(a))});
    }
    write_file(out, csv);
    if (unconverged) {
      o.warnings.push_back(std::to_string(unconverged) +
                           " quadrature samples hit the panel cap before converging");
    }
    if (!closed) o.notes.push_back("delta0 != 0: closed-form columns are NA");
    o.fields = {{"output", out.string()}, {"samples", count}, {"closed_form", closed}};
  });
}

int cmd_perturb(const fs::path& scenario, const fs::path& out, const CommandContext& ctx) {
  return guarded("perturb", ctx, [&](Outcome& o) {
    const Scenario sc = load_scenario(scenario);
    const auto& s = require_perturbation(sc).params;
    if (sc.grid.t_start() < 0.0) throw ScenarioError("grid.t_start: perturb requires t >= 0");
    if (s.outside_slow_regime()) {
      o.warnings.push_back("Omega/omega exceeds 0.1; the Markov form assumes Omega << omega");
    }
    std::string csv;
    append_row(csv, {"t", "re_c_exact", "im_c_exact", "re_c_markov", "im_c_markov", "abs_err"});
    double max_err = 0.0;
    for (std::size_t j = 0; j < sc.grid.size(); ++j) {
      const double t = sc.grid.at(j);
      const Complex exact = models::perturbative_c_exact(s, t);
      const Complex markov = models::perturbative_c_markov(s, t);
      const double err = std::abs(exact - markov);
      max_err = std::max(max_err, err);
      append_row(csv, {format_number(t), format_number(exact.real()), format_number(exact.imag()),
                       format_number(markov.real()), format_number(markov.imag()),
                       format_number(err)});
    }
    write_file(out, csv);
    o.fields = {{"output", out.string()}, {"samples", sc.grid.size()}, {"max_abs_err", max_err}};
  });
}

int cmd_scan(const fs::path& scenario, const fs::path& out, const CommandContext& ctx) {
  return guarded("scan", ctx, [&](Outcome& o) {
    const Scenario sc = load_scenario(scenario);
    if (!sc.scan) throw ScenarioError("scan: section required for this command");
    if (!sc.initial_index) throw ScenarioError("initial.index: scan requires an index start");
    const auto& sec = *sc.scan;
    ScanRequest req{sc.spectrum,     sc.drive,          sec.omega_min,
                    sec.omega_max,   sec.points,        sc.grid.t_start(),
                    sec.horizon,     sc.grid.steps(),   *sc.initial_index,
                    sec.target_index};
    const ScanResult res = resonance_scan(req, sc.integrator, sc.analysis, ctx.threads);
    for (const auto& w : res.warnings) o.warnings.push_back(w);

    std::string csv;
    append_row(csv, {"omega", "P"});
    for (std::size_t i = 0; i < res.omega.size(); ++i) {
      append_row(csv, {format_number(res.omega[i]), format_number(res.probability[i])});
    }
    write_file(out, csv);

    const json report = {{"peak_omega", res.peak_omega},
                         {"peak_P", res.peak_probability},
                         {"predicted_omega", res.predicted_omega},
                         {"unshifted_omega", res.unshifted_omega}};
    const fs::path report_path = scan_report_path(out);
    write_file(report_path, report.dump(2) + "\n");
    o.fields = {{"output", out.string()}, {"report", report_path.string()}, {"result", report}};
  });
}

int cmd_validate(const fs::path& scenario, const CommandContext& ctx) {
  return guarded("validate", ctx, [&](Outcome& o) {
    const Scenario sc = load_scenario(scenario);
    fineness_finding(sc, o.warnings);

    const bool hermitian = is_hermitian(sc.drive, sc.grid, sc.integrator.hermitian_tolerance);
    if (!hermitian) o.notes.push_back("drive is not Hermitian; norm conservation will not be asserted");

    if (const auto* tl = std::get_if<TwoLevelModel>(&sc.model)) {
      const auto& s = tl->params;
      if (s.lambda * (sc.grid.t_start() - sc.grid.t_end()) > std::log(1e-6)) {
        o.warnings.push_back(
            "grid.t_start does not satisfy e^{lambda t_start} <= 1e-6 e^{lambda t_end}; "
            "the propagated run does not approximate a start at -infinity");
      }
    }
    if (const auto* pm = std::get_if<PerturbationModel>(&sc.model)) {
      if (pm->params.outside_slow_regime()) {
        o.warnings.push_back("Omega/omega exceeds 0.1; the Markov form assumes Omega << omega");
      }
      if (pm->params.omega == pm->params.omega_nk) {
        o.warnings.push_back("omega equals omega_nk: the Markov closed form has a pole");
      }
    }
    if (sc.scan) {
      const auto& sec = *sc.scan;
      if (!sc.initial_index) throw ScenarioError("initial.index: scan requires an index start");
      ScanRequest req{sc.spectrum,   sc.drive,        sec.omega_min,     sec.omega_max,
                      sec.points,    sc.grid.t_start(), sec.horizon,     sc.grid.steps(),
                      *sc.initial_index, sec.target_index};
      req.validate();
      for (double edge : {sec.omega_min, sec.omega_max}) {
        if (max_phase_advance_per_step(sc.spectrum, req.drive_at(edge), req.grid()) >=
            std::numbers::pi) {
          o.warnings.push_back("scan grid too coarse at omega=" + format_number(edge));
        }
      }
    }
    o.fields = {{"valid", true}, {"hermitian_drive", hermitian}, {"notes", o.notes}};
  });
}

int run(std::string_view command, const fs::path& scenario, const std::optional<fs::path>& out,
        const CommandContext& ctx) {
  if (command == "validate") return cmd_validate(scenario, ctx);
  if (!out) {
    return guarded(command, ctx, [](Outcome&) { throw InputError("--out is required"); });
  }
  if (command == "propagate") return cmd_propagate(scenario, *out, ctx);
  if (command == "twolevel") return cmd_twolevel(scenario, *out, ctx);
  if (command == "perturb") return cmd_perturb(scenario, *out, ctx);
  if (command == "scan") return cmd_scan(scenario, *out, ctx);
  return guarded(command, ctx, [&](Outcome&) {
    throw InputError("unknown command '" + std::string(command) + "'");
  });
}

}  // namespace subphase::cli
