#pragma once

// Reference implementations of the two worked examples:
//  - amplitude-tuned perturbation U e^{i Omega t} e^{i omega t}, first order
//    in U, exact and with e^{i Omega t'} frozen at the endpoint (Markov);
//  - the two-level system with w(t) = B0 e^{lambda t} e^{i delta0}, whose
//    Markov-approximated c_21 = exp(a21 + i phi21) is available both as a
//    nested double integral and, for delta0 = 0, in closed form.

#include <vector>

#include "subphase/core.hpp"

namespace subphase::models {

class PoleError : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedParameterError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigurationError : public InputError {
 public:
  using InputError::InputError;
};

struct PerturbationScenario {
  Complex matrix_element;  // <n|U_Omega|k>
  double Omega = 0.0;      // amplitude-tuning frequency
  double omega = 0.0;      // carrier
  double omega_nk = 0.0;   // (E_n - E_k) / hbar
  double hbar = 1.0;

  void validate() const;
  /// True when Omega / omega exceeds 0.1, outside the slow-tuning regime.
  bool outside_slow_regime() const;
};

/// (1 / i hbar) int_0^t e^{i(w_nk - w + Omega) t'} <n|U|k> dt', in closed
/// form; the resonant denominator takes the linear-in-t limit.
Complex perturbative_c_exact(const PerturbationScenario& s, double t);

/// <n|U|k> / (hbar (w_nk - w)) e^{i Omega t} (1 - e^{i (w_nk - w) t}).
/// Throws PoleError at w = w_nk.
Complex perturbative_c_markov(const PerturbationScenario& s, double t);

/// Drive whose interaction-picture (n,k) element is
/// e^{i(w_nk - w + Omega)t} <n|U|k>, i.e. U e^{i Omega t} e^{-i omega t} at
/// entry (n,k). With `hermitian` the (k,n) conjugate partner is added.
DriveSpec perturbation_drive_spec(const PerturbationScenario& s, std::size_t n, std::size_t k,
                                  std::size_t dimension, bool hermitian);

struct TwoLevelScenario {
  double Delta = 0.5;  // spectrum (-Delta, +Delta)
  double B0 = 0.0;
  double lambda = 0.0;
  double delta0 = 0.0;
  double omega = 0.0;  // carrier of H'
  double hbar = 1.0;

  void validate() const;
  double omega21() const { return 2.0 * Delta / hbar; }
  EnergySpectrum spectrum() const;
};

/// H' = [[0, w], [w*, 0]] e^{-i omega t} with w = B0 e^{lambda t} e^{i delta0}.
/// Index 0 is |1> (energy -Delta) and index 1 is |2> (energy +Delta).
DriveSpec two_level_drive_spec(const TwoLevelScenario& s);

/// Lower limit standing in for -infinity: t - ln(1/ratio) / lambda, so that
/// e^{lambda t_floor} = ratio * e^{lambda t}.
double truncation_floor(const TwoLevelScenario& s, double t, double ratio = 1e-14);

struct QuadratureConfig {
  double abs_tolerance = 1e-9;         // successive-doubling agreement
  std::size_t initial_panels = 1024;
  std::size_t max_panels = std::size_t{1} << 20;
};

struct SubPhasePair {
  double a21 = 0.0;
  double phi21 = 0.0;
  std::size_t panels = 0;
  bool converged = false;
};

/// Nested composite Simpson evaluation of the a21 / phi21 double integrals
/// on [t_floor, t] with delta(t) = delta0. Panel count doubles until both
/// results move by less than abs_tolerance (or max_panels is reached).
/// Throws ConfigurationError unless e^{lambda t_floor} <= 1e-6 e^{lambda t}.
SubPhasePair sub_phase_quadrature(const TwoLevelScenario& s, double t, double t_floor,
                                  const QuadratureConfig& cfg = {});

/// Same integrals at a fixed panel count (no convergence loop).
SubPhasePair sub_phase_quadrature_fixed(const TwoLevelScenario& s, double t, double t_floor,
                                        std::size_t panels);

double a21_quadrature(const TwoLevelScenario& s, double t, double t_floor,
                      const QuadratureConfig& cfg = {});
double phi21_quadrature(const TwoLevelScenario& s, double t, double t_floor,
                        const QuadratureConfig& cfg = {});

/// Closed forms for the exponential envelope with delta0 = 0. Throw
/// UnsupportedParameterError for delta0 != 0 and InputError for lambda <= 0.
double a21_closed_form(const TwoLevelScenario& s, double t);
double phi21_closed_form(const TwoLevelScenario& s, double t);

/// P21 = e^{2 a21}.
double transition_probability_from_a(double a21);

/// exp(a21 + i phi21), closed forms when delta0 = 0, quadrature otherwise.
Complex two_level_markov_c21(const TwoLevelScenario& s, double t, double t_floor,
                             const QuadratureConfig& cfg = {});

}  // namespace subphase::models
