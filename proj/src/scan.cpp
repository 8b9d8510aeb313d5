#include "subphase/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

namespace subphase {

void ScanRequest::validate() const {
  if (!(omega_min < omega_max)) throw InputError("scan: omega_min must be below omega_max");
  if (!std::isfinite(omega_min) || !std::isfinite(omega_max)) {
    throw InputError("scan: omega range must be finite");
  }
  if (points < 3) throw InputError("scan: points must be >= 3");
  if (drive_template.dimension() != spectrum.dimension()) {
    throw InputError("scan: drive dimension does not match the spectrum");
  }
  if (initial_index >= spectrum.dimension() || target_index >= spectrum.dimension()) {
    throw InputError("scan: initial/target index out of range");
  }
  if (initial_index == target_index) throw InputError("scan: target must differ from initial");
  (void)grid();  // validates horizon and steps
}

std::vector<double> ScanRequest::omega_grid() const {
  std::vector<double> out(points);
  const double step = (omega_max - omega_min) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = omega_min + static_cast<double>(i) * step;
  return out;
}

DriveSpec ScanRequest::drive_at(double omega) const {
  std::vector<DriveTerm> terms = drive_template.terms();
  for (auto& term : terms) term.carrier *= omega;
  return DriveSpec(drive_template.dimension(), std::move(terms));
}

Peak find_peak(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("find_peak: x and y lengths differ");
  if (x.size() < 3) throw InputError("find_peak: need at least three points");
  const auto it = std::max_element(y.begin(), y.end());
  const auto i = static_cast<std::size_t>(it - y.begin());
  if (i == 0 || i + 1 == y.size()) return {x[i], y[i], true};

  // y = y1 + b u + a u^2 with u = x - x1
  const double u0 = x[i - 1] - x[i];
  const double u2 = x[i + 1] - x[i];
  const double s0 = (y[i - 1] - y[i]) / u0;
  const double s2 = (y[i + 1] - y[i]) / u2;
  const double a = (s2 - s0) / (u2 - u0);
  if (!(a < 0.0)) return {x[i], y[i], false};
  const double b = s0 - a * u0;
  return {x[i] - b / (2.0 * a), y[i] - b * b / (4.0 * a), false};
}

std::optional<double> accumulated_phase(const SubPhaseTrajectory& sp, std::size_t n) {
  const auto& st = sp.states.at(n);
  if (st.defined.empty() || !st.defined.back()) return std::nullopt;
  const auto first = std::find(st.defined.begin(), st.defined.end(), true);
  return st.phi.back() - st.phi[static_cast<std::size_t>(first - st.defined.begin())];
}

namespace {

std::string at_omega(double omega, const char* what) {
  std::ostringstream os;
  os.precision(17);
  os << "scan aborted at omega=" << omega << ": " << what;
  return os.str();
}

}  // namespace

ScanResult resonance_scan(const ScanRequest& req, const IntegratorConfig& icfg,
                          const ExtractionConfig& ecfg, unsigned threads) {
  req.validate();
  icfg.validate();
  ecfg.validate();
  const TimeGrid grid = req.grid();

  ScanResult result;
  result.omega = req.omega_grid();
  const std::size_t count = result.omega.size();

  for (double edge : {result.omega.front(), result.omega.back()}) {
    double advance = 0.0;
    try {
      advance = max_phase_advance_per_step(req.spectrum, req.drive_at(edge), grid);
    } catch (const NumericalError& e) {
      throw NumericalError(at_omega(edge, e.what()));
    }
    if (advance >= std::numbers::pi) {
      throw InputError(at_omega(edge, "grid too coarse: per-step phase advance reaches pi"));
    }
  }

  result.probability.assign(count, 0.0);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto k = req.initial_index;
  const auto n = static_cast<Eigen::Index>(req.target_index);

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const auto traj = propagate(req.spectrum, req.drive_at(result.omega[i]), k, grid, icfg);
        result.probability[i] = std::norm(traj.values.back()[n]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const InputError& e) {
      throw InputError(at_omega(result.omega[i], e.what()));
    } catch (const std::exception& e) {
      throw NumericalError(at_omega(result.omega[i], e.what()));
    }
  }

  const Peak peak = find_peak(result.omega, result.probability);
  result.peak_omega = peak.x;
  result.peak_probability = peak.y;
  result.boundary_peak = peak.boundary;
  if (peak.boundary) {
    result.warnings.push_back("peak lies on a boundary sample; interpolation skipped");
  }

  const auto& e = req.spectrum.energies();
  const double hbar = req.spectrum.hbar();
  result.unshifted_omega = (e[req.target_index] - e[k]) / hbar;
  result.predicted_omega = result.unshifted_omega;

  const auto peak_index = static_cast<std::size_t>(
      std::max_element(result.probability.begin(), result.probability.end()) -
      result.probability.begin());
  const auto peak_run =
      propagate(req.spectrum, req.drive_at(result.omega[peak_index]), k, grid, icfg);
  const auto phases = extract(peak_run, ecfg);
  const auto phi_target = accumulated_phase(phases, req.target_index);
  const auto phi_initial = accumulated_phase(phases, k);
  if (phi_target && phi_initial) {
    result.predicted_omega = predicted_resonance(e[req.target_index], e[k], *phi_target,
                                                 *phi_initial, req.horizon - req.t_start, hbar);
  } else {
    result.warnings.push_back(
        "sub-geometric phase undefined at the peak run; predicted peak set to the unshifted value");
  }
  return result;
}

}  // namespace subphase
