#include "subphase/core.hpp"

#include <cmath>
#include <sstream>

namespace subphase {

namespace {

std::string overflow_message(std::size_t term, double t) {
  std::ostringstream os;
  os << "envelope overflow in drive term " << term << " at t=" << t;
  return os.str();
}

std::string divergence_message(double t, const std::string& detail) {
  std::ostringstream os;
  os << "integration diverged at t=" << t;
  if (!detail.empty()) os << ": " << detail;
  return os.str();
}

bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

}  // namespace

EnvelopeOverflowError::EnvelopeOverflowError(std::size_t term, double t)
    : NumericalError(overflow_message(term, t)), term_(term), time_(t) {}

DivergenceError::DivergenceError(double t, const std::string& detail)
    : NumericalError(divergence_message(t, detail)), time_(t) {}

EnergySpectrum::EnergySpectrum(std::vector<double> energies, double hbar)
    : energies_(std::move(energies)), hbar_(hbar) {
  if (energies_.empty()) throw InputError("spectrum: energies must be non-empty");
  for (double e : energies_) {
    if (!std::isfinite(e)) throw InputError("spectrum: energies must be finite");
  }
  if (!(hbar_ > 0.0) || !std::isfinite(hbar_)) {
    throw InputError("spectrum: hbar must be positive and finite");
  }
}

double EnergySpectrum::transition_frequency(std::size_t a, std::size_t b) const {
  return (energies_.at(a) - energies_.at(b)) / hbar_;
}

Complex Envelope::value(double t) const {
  switch (kind) {
    case Kind::Constant:
      return {1.0, 0.0};
    case Kind::Exponential:
      return {std::exp(rate * t), 0.0};
    case Kind::SlowGauge:
      return std::polar(1.0, rate * t);
  }
  return {1.0, 0.0};
}

const char* to_string(Envelope::Kind kind) {
  switch (kind) {
    case Envelope::Kind::Constant:
      return "constant";
    case Envelope::Kind::Exponential:
      return "exponential";
    case Envelope::Kind::SlowGauge:
      return "slow_gauge";
  }
  return "?";
}

Complex DriveTerm::factor(double t) const {
  return envelope.value(t) * std::polar(1.0, carrier * t + delta_phase);
}

TimeGrid::TimeGrid(double t_start, double t_end, std::size_t steps)
    : t_start_(t_start), t_end_(t_end), steps_(steps), h_(0.0) {
  if (!std::isfinite(t_start) || !std::isfinite(t_end)) {
    throw InputError("grid: t_start and t_end must be finite");
  }
  if (!(t_end > t_start)) throw InputError("grid: t_end must exceed t_start");
  if (steps == 0) throw InputError("grid: steps must be >= 1");
  h_ = (t_end - t_start) / static_cast<double>(steps);
  if (!(h_ > 0.0)) throw InputError("grid: step size underflows to zero");
}

TimeGrid TimeGrid::refined(std::size_t factor) const {
  return TimeGrid(t_start_, t_end_, steps_ * factor);
}

DriveSpec::DriveSpec(std::size_t dimension, std::vector<DriveTerm> terms)
    : dimension_(dimension), terms_(std::move(terms)) {
  if (dimension_ == 0) throw InputError("drive: dimension must be >= 1");
  const auto n = static_cast<Eigen::Index>(dimension_);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& term = terms_[i];
    if (term.matrix.rows() != n || term.matrix.cols() != n) {
      throw InputError("drive: term " + std::to_string(i) +
                       " matrix does not match the spectrum dimension");
    }
    if (!all_finite(term.matrix) || !std::isfinite(term.carrier) ||
        !std::isfinite(term.delta_phase) || !std::isfinite(term.envelope.rate)) {
      throw InputError("drive: term " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

bool DriveSpec::hermitian_on(const TimeGrid& grid, double tol) const {
  return is_hermitian(*this, grid, tol);
}

CMatrix evaluate_drive(const DriveSpec& spec, double t) {
  if (!std::isfinite(t)) throw DomainError("evaluate_drive: t must be finite");
  const auto n = static_cast<Eigen::Index>(spec.dimension());
  CMatrix total = CMatrix::Zero(n, n);
  const auto& terms = spec.terms();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Complex f = terms[i].factor(t);
    if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) {
      throw EnvelopeOverflowError(i, t);
    }
    total += f * terms[i].matrix;
    if (!all_finite(total)) throw EnvelopeOverflowError(i, t);
  }
  return total;
}

bool is_hermitian(const DriveSpec& spec, const TimeGrid& grid, double tol) {
  if (spec.empty()) return true;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    CMatrix h;
    try {
      h = evaluate_drive(spec, grid.at(j));
    } catch (const EnvelopeOverflowError&) {
      return false;
    }
    // infinity norm: max absolute row sum
    const double dev = (h - h.adjoint()).cwiseAbs().rowwise().sum().maxCoeff();
    if (!(dev <= tol)) return false;
  }
  return true;
}

void require_norm_conservation(const CoefficientTrajectory& traj) {
  if (traj.norm_violation) {
    std::ostringstream os;
    os << "norm drift " << traj.max_norm_drift
       << " exceeds tolerance for a Hermitian drive";
    throw NormViolationError(os.str());
  }
}

std::size_t EigenstatePhase::defined_count() const {
  std::size_t count = 0;
  for (bool d : defined) count += d ? 1 : 0;
  return count;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable:
      return "Stable";
    case Stability::Unstable:
      return "Unstable";
    case Stability::Critical:
      return "Critical";
    case Stability::Undetermined:
      return "Undetermined";
  }
  return "?";
}

}  // namespace subphase
