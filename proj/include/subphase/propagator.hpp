#pragma once

#include "subphase/core.hpp"

namespace subphase {

struct IntegratorConfig {
  bool step_halving_check = true;
  double norm_tolerance = 1e-9;
  double reconstruction_tolerance = 1e-12;
  // gate for the norm check: H' counts as Hermitian below this deviation
  double hermitian_tolerance = 1e-12;

  void validate() const;
};

/// Integrates i hbar dc_{k'}/dt = sum_n e^{i w_{k'n} t} H'_{k'n}(t) c_n with
/// fixed-step RK4, seeded with the unit vector at `initial_index`.
///
/// Throws DivergenceError (carrying the offending time) when a coefficient
/// or the drive stops being finite. A norm drift beyond the tolerance under
/// a Hermitian drive does not throw; it sets `norm_violation` on the result
/// so callers can still inspect the run (see require_norm_conservation).
CoefficientTrajectory propagate(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                std::size_t initial_index, const TimeGrid& grid,
                                const IntegratorConfig& cfg = {});

/// As propagate, seeded with an explicit unit vector.
CoefficientTrajectory propagate_with_initial(const EnergySpectrum& spectrum,
                                             const DriveSpec& drive,
                                             const CVector& initial_vector,
                                             const TimeGrid& grid,
                                             const IntegratorConfig& cfg = {});

struct ConvergenceReport {
  double coarse_vs_fine_max_error = 0.0;
};

/// Re-runs at twice the step count and reports the largest |delta c| on the
/// coarse samples. Requires an even step count.
ConvergenceReport convergence_report(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                     std::size_t initial_index, const TimeGrid& grid,
                                     const IntegratorConfig& cfg = {});

/// Upper estimate of the phase any interaction-picture matrix element can
/// advance in one step: h * max(|w_{k'n} + carrier + gauge rate| over the
/// nonzero entries, max_t ||H'(t)||_inf / hbar).
double max_phase_advance_per_step(const EnergySpectrum& spectrum, const DriveSpec& drive,
                                  const TimeGrid& grid);

}  // namespace subphase
