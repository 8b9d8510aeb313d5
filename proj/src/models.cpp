#include "subphase/models.hpp"

#include <cmath>

namespace subphase::models {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InputError(std::string(what) + " must be finite");
}

void check_truncation(const TwoLevelScenario& s, double t, double t_floor) {
  if (!(s.lambda > 0.0)) {
    throw ConfigurationError("two_level: lambda must be positive to truncate the lower limit");
  }
  if (!(t_floor < t)) throw ConfigurationError("two_level: t_floor must be below t");
  // e^{lambda t_floor} <= 1e-6 e^{lambda t}
  if (s.lambda * (t_floor - t) > std::log(1e-6)) {
    throw ConfigurationError(
        "two_level: t_floor too close to t (need e^{lambda t_floor} <= 1e-6 e^{lambda t})");
  }
}

void check_closed_form(const TwoLevelScenario& s) {
  s.validate();
  if (s.delta0 != 0.0) {
    throw UnsupportedParameterError(
        "two_level: closed form exists only for delta0 = 0; use the quadrature");
  }
  if (!(s.lambda > 0.0)) throw InputError("two_level: closed form requires lambda > 0");
}

}  // namespace

void PerturbationScenario::validate() const {
  require_finite(matrix_element.real(), "perturbation: matrix_element");
  require_finite(matrix_element.imag(), "perturbation: matrix_element");
  require_finite(Omega, "perturbation: Omega");
  require_finite(omega, "perturbation: omega");
  require_finite(omega_nk, "perturbation: omega_nk");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InputError("perturbation: hbar must be positive");
}

bool PerturbationScenario::outside_slow_regime() const {
  return omega == 0.0 || std::abs(Omega / omega) > 0.1;
}

Complex perturbative_c_exact(const PerturbationScenario& s, double t) {
  s.validate();
  if (t < 0.0) throw DomainError("perturbative_c_exact: t must be >= 0");
  const double x = s.omega_nk - s.omega + s.Omega;
  if (x == 0.0) return -kI * s.matrix_element * (t / s.hbar);
  // (e^{ixt} - 1) / (i hbar * i x) == <n|U|k>/(hbar x) * (1 - e^{ixt}); written so that
  // Omega = 0 evaluates the same expression as the Markov form below.
  return s.matrix_element / (s.hbar * x) * (1.0 - std::polar(1.0, x * t));
}

Complex perturbative_c_markov(const PerturbationScenario& s, double t) {
  s.validate();
  const double d = s.omega_nk - s.omega;
  if (d == 0.0) throw PoleError("perturbative_c_markov: pole at omega = omega_nk");
  return s.matrix_element / (s.hbar * d) * std::polar(1.0, s.Omega * t) *
         (1.0 - std::polar(1.0, d * t));
}

DriveSpec perturbation_drive_spec(const PerturbationScenario& s, std::size_t n, std::size_t k,
                                  std::size_t dimension, bool hermitian) {
  s.validate();
  if (n >= dimension || k >= dimension || n == k) {
    throw InputError("perturbation: n and k must be distinct indices below the dimension");
  }
  const auto dim = static_cast<Eigen::Index>(dimension);
  std::vector<DriveTerm> terms;
  CMatrix forward = CMatrix::Zero(dim, dim);
  forward(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = s.matrix_element;
  terms.push_back({forward, Envelope::slow_gauge(s.Omega), -s.omega, 0.0});
  if (hermitian) {
    CMatrix back = CMatrix::Zero(dim, dim);
    back(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) = std::conj(s.matrix_element);
    terms.push_back({back, Envelope::slow_gauge(-s.Omega), s.omega, 0.0});
  }
  return DriveSpec(dimension, std::move(terms));
}

void TwoLevelScenario::validate() const {
  require_finite(Delta, "two_level: Delta");
  require_finite(B0, "two_level: B0");
  require_finite(lambda, "two_level: lambda");
  require_finite(delta0, "two_level: delta0");
  require_finite(omega, "two_level: omega");
  if (!(Delta > 0.0)) throw InputError("two_level: Delta must be positive");
  if (B0 < 0.0) throw InputError("two_level: B0 must be non-negative");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InputError("two_level: hbar must be positive");
}

EnergySpectrum TwoLevelScenario::spectrum() const {
  validate();
  return EnergySpectrum({-Delta, Delta}, hbar);
}

DriveSpec two_level_drive_spec(const TwoLevelScenario& s) {
  s.validate();
  if (s.B0 == 0.0) return DriveSpec(2);
  CMatrix upper = CMatrix::Zero(2, 2);
  CMatrix lower = CMatrix::Zero(2, 2);
  upper(0, 1) = s.B0;
  lower(1, 0) = s.B0;
  std::vector<DriveTerm> terms;
  // w e^{-i omega t} above the diagonal, w* e^{-i omega t} below it
  terms.push_back({upper, Envelope::exponential(s.lambda), -s.omega, s.delta0});
  terms.push_back({lower, Envelope::exponential(s.lambda), -s.omega, -s.delta0});
  return DriveSpec(2, std::move(terms));
}

double truncation_floor(const TwoLevelScenario& s, double t, double ratio) {
  if (!(s.lambda > 0.0)) throw ConfigurationError("two_level: lambda must be positive");
  if (!(ratio > 0.0 && ratio <= 1e-6)) {
    throw ConfigurationError("two_level: truncation ratio must lie in (0, 1e-6]");
  }
  return t + std::log(ratio) / s.lambda;
}

SubPhasePair sub_phase_quadrature_fixed(const TwoLevelScenario& s, double t, double t_floor,
                                        std::size_t panels) {
  s.validate();
  check_truncation(s, t, t_floor);
  if (panels < 2 || panels % 2 != 0) throw InputError("quadrature: panel count must be even");
  if (s.B0 == 0.0) return {0.0, 0.0, panels, true};

  const double h = (t - t_floor) / static_cast<double>(panels);
  const double two_w = 2.0 * s.omega21();
  const double cos_d = std::cos(s.delta0);
  const double sin_d = std::sin(s.delta0);

  auto amplitude = [&](double x) { return s.B0 * std::exp(s.lambda * x); };
  // inner integrands |w(x)| cos(delta0 - 2 w21 x), |w(x)| sin(delta0 - 2 w21 x)
  auto inner = [&](double x, double& gc, double& gs) {
    const double w = amplitude(x);
    const double arg = s.delta0 - two_w * x;
    gc = w * std::cos(arg);
    gs = w * std::sin(arg);
  };

  double ic = 0.0;  // running int_{t_floor}^{x} of gc
  double is = 0.0;
  double gc0 = 0.0;
  double gs0 = 0.0;
  inner(t_floor, gc0, gs0);

  double sum_a = 0.0;
  double sum_phi = 0.0;
  for (std::size_t j = 0; j <= panels; ++j) {
    const double x = t_floor + static_cast<double>(j) * h;
    if (j > 0) {
      double gcm = 0.0, gsm = 0.0, gc1 = 0.0, gs1 = 0.0;
      inner(x - 0.5 * h, gcm, gsm);
      inner(x, gc1, gs1);
      ic += h / 6.0 * (gc0 + 4.0 * gcm + gc1);
      is += h / 6.0 * (gs0 + 4.0 * gsm + gs1);
      gc0 = gc1;
      gs0 = gs1;
    }
    const double w = amplitude(x);
    const double fa = w * (cos_d * ic + sin_d * is);
    const double fphi = w * (cos_d * is - sin_d * ic);
    const double weight = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    sum_a += weight * fa;
    sum_phi += weight * fphi;
  }
  const double scale = -h / 3.0 / (s.hbar * s.hbar);
  return {scale * sum_a, scale * sum_phi, panels, true};
}

SubPhasePair sub_phase_quadrature(const TwoLevelScenario& s, double t, double t_floor,
                                  const QuadratureConfig& cfg) {
  if (cfg.initial_panels < 2 || cfg.initial_panels % 2 != 0 ||
      cfg.max_panels < cfg.initial_panels) {
    throw InputError("quadrature: invalid panel configuration");
  }
  SubPhasePair prev = sub_phase_quadrature_fixed(s, t, t_floor, cfg.initial_panels);
  if (s.B0 == 0.0) return prev;
  for (std::size_t panels = 2 * cfg.initial_panels; panels <= cfg.max_panels; panels *= 2) {
    SubPhasePair next = sub_phase_quadrature_fixed(s, t, t_floor, panels);
    if (std::abs(next.a21 - prev.a21) < cfg.abs_tolerance &&
        std::abs(next.phi21 - prev.phi21) < cfg.abs_tolerance) {
      next.converged = true;
      return next;
    }
    prev = next;
  }
  prev.converged = false;
  return prev;
}

double a21_quadrature(const TwoLevelScenario& s, double t, double t_floor,
                      const QuadratureConfig& cfg) {
  return sub_phase_quadrature(s, t, t_floor, cfg).a21;
}

double phi21_quadrature(const TwoLevelScenario& s, double t, double t_floor,
                        const QuadratureConfig& cfg) {
  return sub_phase_quadrature(s, t, t_floor, cfg).phi21;
}

double a21_closed_form(const TwoLevelScenario& s, double t) {
  check_closed_form(s);
  const double l = s.lambda;
  const double w = s.omega21();
  const double e = std::exp(2.0 * l * t);
  const double c = std::cos(2.0 * w * t);
  const double sn = std::sin(2.0 * w * t);
  const double inner_den = 4.0 * l * l + 4.0 * w * w;
  const double prefactor = -(s.B0 * s.B0) / (s.hbar * s.hbar) / (l * l + 4.0 * w * w);
  return prefactor * (l * e / inner_den * (2.0 * l * c + 2.0 * w * sn) +
                      2.0 * w * e / inner_den * (2.0 * l * sn - 2.0 * w * c));
}

double phi21_closed_form(const TwoLevelScenario& s, double t) {
  check_closed_form(s);
  const double l = s.lambda;
  const double w = s.omega21();
  const double e = std::exp(2.0 * l * t);
  const double c = std::cos(2.0 * w * t);
  const double sn = std::sin(2.0 * w * t);
  const double inner_den = 4.0 * l * l + 4.0 * w * w;
  const double prefactor = (s.B0 * s.B0) / (s.hbar * s.hbar) / (l * l + 4.0 * w * w);
  return prefactor * ((2.0 * l * l - 4.0 * w * w) * e / inner_den * sn -
                      6.0 * w * l * e / inner_den * c);
}

double transition_probability_from_a(double a21) { return std::exp(2.0 * a21); }

Complex two_level_markov_c21(const TwoLevelScenario& s, double t, double t_floor,
                             const QuadratureConfig& cfg) {
  s.validate();
  check_truncation(s, t, t_floor);
  if (s.B0 == 0.0) return {1.0, 0.0};
  double a = 0.0;
  double phi = 0.0;
  if (s.delta0 == 0.0) {
    a = a21_closed_form(s, t);
    phi = phi21_closed_form(s, t);
  } else {
    const auto q = sub_phase_quadrature(s, t, t_floor, cfg);
    a = q.a21;
    phi = q.phi21;
  }
  return std::exp(a) * std::polar(1.0, phi);
}

}  // namespace subphase::models
