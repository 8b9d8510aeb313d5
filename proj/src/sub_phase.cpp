#include "subphase/sub_phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace subphase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double principal_arg(Complex z) {
  const double p = std::arg(z);
  return p == -std::numbers::pi ? std::numbers::pi : p;
}

}  // namespace

void ExtractionConfig::validate() const {
  if (!(amplitude_floor > 0.0)) throw InputError("analysis: amplitude_floor must be positive");
  if (!(slope_tolerance > 0.0)) throw InputError("analysis: slope_tolerance must be positive");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw InputError("analysis: window_fraction must lie in (0, 1]");
  }
}

SubPhaseTrajectory extract(const CoefficientTrajectory& traj, const ExtractionConfig& cfg) {
  cfg.validate();
  const std::size_t samples = traj.values.size();
  const std::size_t n_states = traj.dimension();
  SubPhaseTrajectory out{traj.grid, {}, {}};
  out.states.resize(n_states);

  for (std::size_t n = 0; n < n_states; ++n) {
    auto& st = out.states[n];
    st.a.assign(samples, kNaN);
    st.phi.assign(samples, kNaN);
    st.defined.assign(samples, false);

    std::optional<double> previous;
    for (std::size_t j = 0; j < samples; ++j) {
      const Complex c = traj.values[j][static_cast<Eigen::Index>(n)];
      const double amp = std::abs(c);
      if (!(amp >= cfg.amplitude_floor)) continue;
      double phi = principal_arg(c);
      if (previous) {
        phi += kTwoPi * std::round((*previous - phi) / kTwoPi);
      }
      st.a[j] = std::log(amp);
      st.phi[j] = phi;
      st.defined[j] = true;
      previous = phi;
    }

    if (st.defined_count() < 2) {
      st.a.assign(samples, kNaN);
      st.phi.assign(samples, kNaN);
      st.defined.assign(samples, false);
      st.insufficient = true;
      out.warnings.push_back("eigenstate " + std::to_string(n) +
                             " has fewer than two samples above the amplitude floor");
    }
  }
  return out;
}

std::optional<Complex> reconstruct(const SubPhaseTrajectory& sp, std::size_t n, std::size_t j) {
  const auto& st = sp.states.at(n);
  if (!st.defined.at(j)) return std::nullopt;
  return std::exp(st.a[j]) * std::polar(1.0, st.phi[j]);
}

DensityMatrixSnapshot density_matrix(const CVector& coefficients) {
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    if (!std::isfinite(coefficients[i].real()) || !std::isfinite(coefficients[i].imag())) {
      throw InputError("density_matrix: coefficients must be finite");
    }
  }
  const auto n = coefficients.size();
  CMatrix rho(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // |c|^2 computed as a real sum so the diagonal carries no phase residue
    rho(i, i) = std::norm(coefficients[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) rho(i, j) = coefficients[i] * std::conj(coefficients[j]);
    }
  }
  return {rho};
}

double von_neumann_entropy(const DensityMatrixSnapshot& rho) {
  const CMatrix& m = rho.matrix;
  if (m.rows() != m.cols() || m.rows() == 0) throw InputError("entropy: rho must be square");
  const CMatrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("entropy: eigensolver failed");
  double s = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double p_raw = solver.eigenvalues()[i];
    if (p_raw < -1e-8) {
      std::ostringstream os;
      os << "entropy: density matrix has eigenvalue " << p_raw << " below -1e-8";
      throw InputError(os.str());
    }
    const double p = std::clamp(p_raw, 0.0, 1.0);
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

DensityMatrixSnapshot dephase(const DensityMatrixSnapshot& rho) {
  CMatrix out = CMatrix::Zero(rho.matrix.rows(), rho.matrix.cols());
  out.diagonal() = rho.matrix.diagonal();
  return {out};
}

double expectation(const DensityMatrixSnapshot& rho, const CMatrix& observable) {
  if (observable.rows() != rho.matrix.rows() || observable.cols() != rho.matrix.cols()) {
    throw InputError("expectation: observable dimension mismatch");
  }
  if ((observable - observable.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InputError("expectation: observable must be Hermitian");
  }
  const Complex tr = (rho.matrix * observable).trace();
  if (std::abs(tr.imag()) > 1e-10) {
    throw NumericalError("expectation: trace has a non-negligible imaginary part");
  }
  return tr.real();
}

SamuelBhandariPhase samuel_bhandari_phase(double phi, double energy, double t, double hbar) {
  return {phi - energy * t / hbar, phi};
}

double effective_shift(const SubPhaseTrajectory& sp, std::size_t n, double energy, double t,
                       double hbar) {
  if (!(t > 0.0)) throw DomainError("effective_shift: t must be positive");
  const auto& st = sp.states.at(n);
  for (std::size_t j = st.defined.size(); j-- > 0;) {
    const double tj = sp.grid.at(j);
    if (tj > t) continue;
    if (!(tj > 0.0)) break;
    if (st.defined[j]) return energy - hbar * st.phi[j] / tj;
  }
  throw UndefinedPhaseError("effective_shift: no defined phase sample in (0, t]");
}

std::vector<std::optional<double>> effective_shift_series(const SubPhaseTrajectory& sp,
                                                          std::size_t n, double energy,
                                                          double hbar) {
  const auto& st = sp.states.at(n);
  std::vector<std::optional<double>> out(st.defined.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double tj = sp.grid.at(j);
    if (st.defined[j] && tj > 0.0) out[j] = energy - hbar * st.phi[j] / tj;
  }
  return out;
}

double predicted_resonance(double energy_n, double energy_kprime, double phi_nk,
                           double phi_kprime_k, double t, double hbar) {
  if (!(t > 0.0)) throw DomainError("predicted_resonance: t must be positive");
  return (energy_n - energy_kprime - hbar * phi_nk / t + hbar * phi_kprime_k / t) / hbar;
}

Stability classify_slope(double slope, double tolerance) {
  if (slope > tolerance) return Stability::Unstable;
  if (slope < -tolerance) return Stability::Stable;
  return Stability::Critical;
}

StabilityVerdict classify_stability(const SubPhaseTrajectory& sp, std::size_t n,
                                    const ExtractionConfig& cfg) {
  cfg.validate();
  const auto& st = sp.states.at(n);
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < st.defined.size(); ++j) {
    if (st.defined[j]) idx.push_back(j);
  }
  const auto take = static_cast<std::size_t>(
      std::ceil(cfg.window_fraction * static_cast<double>(idx.size())));
  StabilityVerdict verdict;
  if (take < 2) return verdict;
  idx.erase(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(take));
  verdict.window_start = sp.grid.at(idx.front());
  verdict.window_end = sp.grid.at(idx.back());

  double t_mean = 0.0;
  double a_mean = 0.0;
  for (auto j : idx) {
    t_mean += sp.grid.at(j);
    a_mean += st.a[j];
  }
  t_mean /= static_cast<double>(take);
  a_mean /= static_cast<double>(take);
  double sxy = 0.0;
  double sxx = 0.0;
  for (auto j : idx) {
    const double dt = sp.grid.at(j) - t_mean;
    sxy += dt * (st.a[j] - a_mean);
    sxx += dt * dt;
  }
  verdict.fitted_slope = sxy / sxx;
  verdict.classification = classify_slope(verdict.fitted_slope, cfg.slope_tolerance);
  return verdict;
}

}  // namespace subphase
