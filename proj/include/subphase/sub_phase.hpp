#pragma once

// Sub-geometric phase extraction c_n = exp(a_n + i phi_n) and everything
// computed from it: density matrix, entropy, expectation values, the
// phase-shifted energies and resonance, and the stability verdict.

#include <optional>
#include <vector>

#include "subphase/core.hpp"

namespace subphase {

struct ExtractionConfig {
  double amplitude_floor = 1e-12;  // |c| below this is masked
  double slope_tolerance = 1e-3;   // 1/time
  double window_fraction = 0.5;    // trailing share of defined samples

  void validate() const;
};

/// Log-amplitude and continuously unwrapped phase per eigenstate.
///
/// The branch of phi is anchored at the principal value (-pi, pi] of the
/// first defined sample; every later defined sample takes the 2*pi shift
/// closest to its predecessor. Masked gaps are bridged from the last
/// defined sample. States with fewer than two defined samples come back
/// fully masked with `insufficient` set and a warning recorded.
SubPhaseTrajectory extract(const CoefficientTrajectory& traj, const ExtractionConfig& cfg = {});

/// exp(a + i phi) at sample j of state n; nullopt on masked samples.
std::optional<Complex> reconstruct(const SubPhaseTrajectory& sp, std::size_t n, std::size_t j);

DensityMatrixSnapshot density_matrix(const CVector& coefficients);

/// -Tr(rho ln rho) in nats. Throws InputError when an eigenvalue falls
/// below -1e-8.
double von_neumann_entropy(const DensityMatrixSnapshot& rho);

DensityMatrixSnapshot dephase(const DensityMatrixSnapshot& rho);

/// Tr(rho A). Throws InputError unless A is Hermitian to 1e-12.
double expectation(const DensityMatrixSnapshot& rho, const CMatrix& observable);

struct SamuelBhandariPhase {
  double total;      // phi - E t / hbar
  double geometric;  // phi, dynamic part removed
};

SamuelBhandariPhase samuel_bhandari_phase(double phi, double energy, double t, double hbar);

/// E_n - hbar * phi_n(s) / s at the last defined sample s <= t with s > 0.
/// Throws DomainError for t <= 0 and UndefinedPhaseError when no such
/// sample exists.
double effective_shift(const SubPhaseTrajectory& sp, std::size_t n, double energy, double t,
                       double hbar);

/// E_n - hbar * phi_n(t_j) / t_j per sample; nullopt where masked or t_j <= 0.
std::vector<std::optional<double>> effective_shift_series(const SubPhaseTrajectory& sp,
                                                          std::size_t n, double energy,
                                                          double hbar);

class UndefinedPhaseError : public InputError {
 public:
  using InputError::InputError;
};

/// (E_n - E_k' - hbar phi_nk / t + hbar phi_k'k / t) / hbar.
double predicted_resonance(double energy_n, double energy_kprime, double phi_nk,
                           double phi_kprime_k, double t, double hbar);

/// Least-squares slope of a_n(t) over the trailing window of defined samples.
StabilityVerdict classify_stability(const SubPhaseTrajectory& sp, std::size_t n,
                                    const ExtractionConfig& cfg = {});

/// Verdict from a slope alone: > tol Unstable, < -tol Stable, else Critical.
Stability classify_slope(double slope, double tolerance);

}  // namespace subphase
