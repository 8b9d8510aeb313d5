#pragma once

#include <span>
#include <string>
#include <vector>

#include "subphase/core.hpp"
#include "subphase/propagator.hpp"
#include "subphase/sub_phase.hpp"

namespace subphase {

/// Carrier sweep of P_nk(T). The template's per-term carriers are harmonic
/// multipliers: at sweep frequency w each term runs with carrier
/// (template carrier) * w.
struct ScanRequest {
  EnergySpectrum spectrum;
  DriveSpec drive_template;
  double omega_min = 0.0;
  double omega_max = 0.0;
  std::size_t points = 3;
  double t_start = 0.0;
  double horizon = 0.0;  // final time T
  std::size_t steps = 1;
  std::size_t initial_index = 0;
  std::size_t target_index = 1;

  void validate() const;
  std::vector<double> omega_grid() const;
  DriveSpec drive_at(double omega) const;
  TimeGrid grid() const { return TimeGrid(t_start, horizon, steps); }
};

struct ScanResult {
  std::vector<double> omega;
  std::vector<double> probability;
  double peak_omega = 0.0;
  double peak_probability = 0.0;
  double predicted_omega = 0.0;
  double unshifted_omega = 0.0;
  bool boundary_peak = false;
  std::vector<std::string> warnings;
};

struct Peak {
  double x = 0.0;
  double y = 0.0;
  bool boundary = false;  // maximum on an end sample, no interpolation
};

/// Vertex of the parabola through the largest sample and its neighbours.
/// Throws InputError for fewer than three points or mismatched lengths.
Peak find_peak(std::span<const double> x, std::span<const double> y);

/// Propagates once per sweep frequency (on up to `threads` workers) and
/// locates the transition-probability peak. The predicted peak uses the
/// phases of the run at the largest sample, each referenced to its first
/// defined sample so that only phase accumulated during the run enters.
/// Output never depends on thread count or completion order.
ScanResult resonance_scan(const ScanRequest& req, const IntegratorConfig& icfg = {},
                          const ExtractionConfig& ecfg = {}, unsigned threads = 1);

/// phi at the last sample minus phi at the first defined sample; nullopt if
/// either endpoint is masked.
std::optional<double> accumulated_phase(const SubPhaseTrajectory& sp, std::size_t n);

}  // namespace subphase
