#pragma once

// Domain types shared by every part of the toolkit, plus pointwise
// evaluation of the parametric drive H'(t).

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace subphase {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Errors come in two families so front ends can map them to exit codes:
// InputError for bad configuration, NumericalError for failures that only
// show up while computing.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class EnvelopeOverflowError : public NumericalError {
 public:
  EnvelopeOverflowError(std::size_t term, double t);
  std::size_t term() const noexcept { return term_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t term_;
  double time_;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(double t, const std::string& detail);
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class NormViolationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Unperturbed eigenvalues E_n of H0 together with hbar.
class EnergySpectrum {
 public:
  explicit EnergySpectrum(std::vector<double> energies, double hbar = 1.0);

  std::size_t dimension() const noexcept { return energies_.size(); }
  const std::vector<double>& energies() const noexcept { return energies_; }
  double energy(std::size_t n) const { return energies_.at(n); }
  double hbar() const noexcept { return hbar_; }

  /// (E_a - E_b) / hbar.
  double transition_frequency(std::size_t a, std::size_t b) const;

 private:
  std::vector<double> energies_;
  double hbar_;
};

/// Time dependence multiplying a drive matrix, apart from the carrier.
struct Envelope {
  enum class Kind { Constant, Exponential, SlowGauge };

  Kind kind = Kind::Constant;
  double rate = 0.0;  // lambda for Exponential, Omega for SlowGauge

  static Envelope constant() { return {Kind::Constant, 0.0}; }
  static Envelope exponential(double lambda) { return {Kind::Exponential, lambda}; }
  static Envelope slow_gauge(double omega) { return {Kind::SlowGauge, omega}; }

  /// 1, e^{rate t} or e^{i rate t}. May overflow to inf for Exponential.
  Complex value(double t) const;
};

const char* to_string(Envelope::Kind kind);

/// One term M * env(t) * e^{i(carrier t + delta_phase)}.
struct DriveTerm {
  CMatrix matrix;
  Envelope envelope = Envelope::constant();
  double carrier = 0.0;
  double delta_phase = 0.0;

  Complex factor(double t) const;
};

class TimeGrid {
 public:
  TimeGrid(double t_start, double t_end, std::size_t steps);

  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }
  double step() const noexcept { return h_; }
  double at(std::size_t j) const noexcept {
    return t_start_ + static_cast<double>(j) * h_;
  }

  /// Same interval with `factor` times as many steps.
  TimeGrid refined(std::size_t factor) const;

 private:
  double t_start_;
  double t_end_;
  std::size_t steps_;
  double h_;
};

/// Sum of drive terms. An empty list is free evolution.
class DriveSpec {
 public:
  explicit DriveSpec(std::size_t dimension, std::vector<DriveTerm> terms = {});

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<DriveTerm>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  /// True iff H'(t) is Hermitian within `tol` on every grid sample.
  bool hermitian_on(const TimeGrid& grid, double tol) const;

 private:
  std::size_t dimension_;
  std::vector<DriveTerm> terms_;
};

CMatrix evaluate_drive(const DriveSpec& spec, double t);

bool is_hermitian(const DriveSpec& spec, const TimeGrid& grid, double tol);

/// Sampled interaction-picture coefficients c_nk(t).
struct CoefficientTrajectory {
  std::optional<std::size_t> initial_index;  // empty when seeded by a vector
  TimeGrid grid;
  std::vector<CVector> values;  // one length-N vector per grid sample
  std::vector<double> norm_series;
  bool hermitian_drive = false;
  bool norm_violation = false;
  double max_norm_drift = 0.0;
  std::vector<std::string> warnings;

  std::size_t dimension() const {
    return values.empty() ? 0 : static_cast<std::size_t>(values.front().size());
  }
};

/// Throws NormViolationError when the trajectory carries the flag.
void require_norm_conservation(const CoefficientTrajectory& traj);

/// Log-amplitude a_n and unwrapped phase phi_n of one eigenstate's
/// coefficient. Entries where `defined[j]` is false hold NaN.
struct EigenstatePhase {
  std::vector<double> a;
  std::vector<double> phi;
  std::vector<bool> defined;
  bool insufficient = false;  // fewer than two defined samples

  std::size_t defined_count() const;
};

struct SubPhaseTrajectory {
  TimeGrid grid;
  std::vector<EigenstatePhase> states;
  std::vector<std::string> warnings;
};

/// rho = |psi><psi| for a pure state in the eigenbasis.
struct DensityMatrixSnapshot {
  CMatrix matrix;
};

enum class Stability { Stable, Unstable, Critical, Undetermined };

const char* to_string(Stability s);

struct StabilityVerdict {
  Stability classification = Stability::Undetermined;
  double fitted_slope = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

}  // namespace subphase
