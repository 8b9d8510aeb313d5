#include "subphase/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace subphase {

namespace {

// -(i/hbar) * D(t) with D_{ab} = e^{i w_ab t} H'_ab(t).
class InteractionRhs {
 public:
  InteractionRhs(const EnergySpectrum& spectrum, const DriveSpec& drive)
      : spectrum_(spectrum), drive_(drive) {}

  CMatrix generator(double t) const {
    const auto n = static_cast<Eigen::Index>(spectrum_.dimension());
    CMatrix d = evaluate_drive(drive_, t);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        if (a == b || d(a, b) == Complex{}) continue;
        const double w = spectrum_.transition_frequency(static_cast<std::size_t>(a),
                                                        static_cast<std::size_t>(b));
        d(a, b) *= std::polar(1.0, w * t);
      }
    }
    return d * Complex(0.0, -1.0 / spectrum_.hbar());
  }

  bool trivial() const { return drive_.empty(); }

 private:
  const EnergySpectrum& spectrum_;
  const DriveSpec& drive_;
};

bool finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

CoefficientTrajectory integrate(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                const CVector& seed, std::optional<std::size_t> index,
                                const TimeGrid& grid, const IntegratorConfig& cfg) {
  cfg.validate();
  if (drive.dimension() != spectrum.dimension()) {
    throw InputError("drive dimension does not match the spectrum");
  }

  CoefficientTrajectory traj{index, grid, {}, {}, false, false, 0.0, {}};
  traj.values.reserve(grid.size());
  traj.norm_series.reserve(grid.size());
  traj.values.push_back(seed);
  traj.norm_series.push_back(seed.squaredNorm());

  const InteractionRhs rhs(spectrum, drive);
  const double h = grid.step();
  CVector c = seed;

  try {
    for (std::size_t j = 0; j < grid.steps(); ++j) {
      if (!rhs.trivial()) {
        const double t = grid.at(j);
        const CMatrix g0 = rhs.generator(t);
        const CMatrix gm = rhs.generator(t + 0.5 * h);
        const CMatrix g1 = rhs.generator(t + h);
        const CVector k1 = g0 * c;
        const CVector k2 = gm * (c + (0.5 * h) * k1);
        const CVector k3 = gm * (c + (0.5 * h) * k2);
        const CVector k4 = g1 * (c + h * k3);
        c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!finite(c)) throw DivergenceError(grid.at(j + 1), "non-finite coefficient");
      }
      traj.values.push_back(c);
      traj.norm_series.push_back(c.squaredNorm());
    }
  } catch (const EnvelopeOverflowError& e) {
    throw DivergenceError(e.time(), e.what());
  }

  for (double norm : traj.norm_series) {
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(norm - 1.0));
  }
  traj.hermitian_drive = is_hermitian(drive, grid, cfg.hermitian_tolerance);
  if (traj.hermitian_drive && traj.max_norm_drift > cfg.norm_tolerance) {
    traj.norm_violation = true;
    std::ostringstream os;
    os << "norm drift " << traj.max_norm_drift << " exceeds norm_tolerance "
       << cfg.norm_tolerance << " under a Hermitian drive";
    traj.warnings.push_back(os.str());
  }
  return traj;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(norm_tolerance > 0.0)) throw InputError("integrator: norm_tolerance must be positive");
  if (!(reconstruction_tolerance > 0.0)) {
    throw InputError("integrator: reconstruction_tolerance must be positive");
  }
  if (!(hermitian_tolerance > 0.0)) {
    throw InputError("integrator: hermitian_tolerance must be positive");
  }
}

CoefficientTrajectory propagate(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                std::size_t initial_index, const TimeGrid& grid,
                                const IntegratorConfig& cfg) {
  const auto n = spectrum.dimension();
  if (initial_index >= n) throw InputError("initial index out of range");
  CVector seed = CVector::Zero(static_cast<Eigen::Index>(n));
  seed[static_cast<Eigen::Index>(initial_index)] = 1.0;
  return integrate(spectrum, drive, seed, initial_index, grid, cfg);
}

CoefficientTrajectory propagate_with_initial(const EnergySpectrum& spectrum,
                                             const DriveSpec& drive,
                                             const CVector& initial_vector,
                                             const TimeGrid& grid,
                                             const IntegratorConfig& cfg) {
  if (static_cast<std::size_t>(initial_vector.size()) != spectrum.dimension()) {
    throw InputError("initial vector length does not match the spectrum");
  }
  if (!finite(initial_vector)) throw InputError("initial vector must be finite");
  if (std::abs(initial_vector.norm() - 1.0) > 1e-12) {
    throw InputError("initial vector must be normalized to within 1e-12");
  }
  return integrate(spectrum, drive, initial_vector, std::nullopt, grid, cfg);
}

ConvergenceReport convergence_report(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                     std::size_t initial_index, const TimeGrid& grid,
                                     const IntegratorConfig& cfg) {
  if (grid.steps() % 2 != 0) throw InputError("convergence_report: steps must be even");
  const auto coarse = propagate(spectrum, drive, initial_index, grid, cfg);
  const auto fine = propagate(spectrum, drive, initial_index, grid.refined(2), cfg);
  ConvergenceReport report;
  for (std::size_t j = 0; j < coarse.values.size(); ++j) {
    const double err = (coarse.values[j] - fine.values[2 * j]).cwiseAbs().maxCoeff();
    report.coarse_vs_fine_max_error = std::max(report.coarse_vs_fine_max_error, err);
  }
  return report;
}

double max_phase_advance_per_step(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                  const TimeGrid& grid) {
  const auto n = static_cast<Eigen::Index>(spectrum.dimension());
  double rate = 0.0;
  for (const auto& term : drive.terms()) {
    const double gauge = term.envelope.kind == Envelope::Kind::SlowGauge ? term.envelope.rate : 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        if (term.matrix(a, b) == Complex{}) continue;
        const double w = spectrum.transition_frequency(static_cast<std::size_t>(a),
                                                       static_cast<std::size_t>(b));
        rate = std::max(rate, std::abs(w + term.carrier + gauge));
      }
    }
  }
  if (!drive.empty()) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const CMatrix h = evaluate_drive(drive, grid.at(j));
      rate = std::max(rate, h.cwiseAbs().rowwise().sum().maxCoeff() / spectrum.hbar());
    }
  }
  return rate * grid.step();
}

}  // namespace subphase
