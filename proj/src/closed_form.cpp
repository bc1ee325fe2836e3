#include "dce/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dce/errors.hpp"

namespace dce {

namespace {

void require_tau(double tau) {
  if (!(std::isfinite(tau) && tau >= 0.0)) throw ValidationError("tau must be finite and >= 0");
}

void require_x(double x) {
  if (!std::isfinite(x)) throw ValidationError("x must be finite");
}

// sinh(z)/z and sin(z)/z, series near zero.
double shc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 + z * z / 6.0;
  return std::sinh(z) / z;
}

double sinc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

cdouble shc(cdouble z) {
  if (std::abs(z) < 1e-4) return 1.0 + z * z / 6.0;
  return std::sinh(z) / z;
}

// D = cosh(eta tau) - i (x/eta) sinh(eta tau); beta0 = D^-2.
cdouble denominator(double tau, double x, cdouble eta) {
  const cdouble z = eta * tau;
  return std::cosh(z) - cdouble(0.0, 1.0) * x * tau * shc(z);
}

}  // namespace

UCoefficients u_coefficients(double tau, double x) {
  require_tau(tau);
  require_x(x);
  const cdouble eta = std::sqrt(cdouble(1.0 - x * x, 0.0));
  const cdouble d = denominator(tau, x, eta);
  const cdouble sqrt_beta0 = 1.0 / d;
  UCoefficients u;
  u.eta = eta;
  u.beta0 = sqrt_beta0 * sqrt_beta0;
  u.beta = cdouble(0.0, 1.0) * sqrt_beta0 * 0.5 * tau * shc(eta * tau);
  return u;
}

double vacuum_photon_number(double tau, double x) {
  require_tau(tau);
  require_x(x);
  const double x2 = x * x;
  double s;
  if (x2 < 1.0) {
    s = shc(std::sqrt(1.0 - x2) * tau);
  } else {
    s = sinc(std::sqrt(x2 - 1.0) * tau);
  }
  return tau * tau * s * s;
}

double max_vacuum_photon_number(double tau_max, double x) {
  require_tau(tau_max);
  require_x(x);
  const double x2 = x * x;
  if (x2 <= 1.0) return vacuum_photon_number(tau_max, x);
  // sin^2 peaks at 1/(x^2-1) once e*tau reaches pi/2.
  const double e = std::sqrt(x2 - 1.0);
  if (e * tau_max >= 0.5 * std::numbers::pi) return 1.0 / (x2 - 1.0);
  return vacuum_photon_number(tau_max, x);
}

std::vector<cdouble> vacuum_amplitudes(double tau, double x, int m_max) {
  if (m_max < 1) throw ValidationError("m_max must be >= 1");
  const UCoefficients u = u_coefficients(tau, x);
  const cdouble d = denominator(tau, x, u.eta);

  // beta0^{1/4} = D^{-1/2}. For |x| <= 1, Re D >= 1 and the principal root is
  // continuous. For |x| > 1, D winds around the origin; its argument is -phi
  // with phi in the quadrant of theta = sign(x) sqrt(x^2-1) tau.
  cdouble quarter;
  if (x * x > 1.0) {
    const double theta = std::copysign(std::sqrt(x * x - 1.0) * tau, x);
    const double principal = std::arg(std::conj(d));
    const double two_pi = 2.0 * std::numbers::pi;
    const double phi = principal + two_pi * std::round((theta - principal) / two_pi);
    quarter = std::polar(1.0 / std::sqrt(std::abs(d)), 0.5 * phi);
  } else {
    quarter = 1.0 / std::sqrt(d);
  }

  std::vector<cdouble> a(static_cast<std::size_t>(m_max) + 1);
  a[0] = quarter;
  for (int m = 1; m <= m_max; ++m) {
    const double ratio = std::sqrt(2.0 * m * (2.0 * m - 1.0)) / m;
    a[m] = a[m - 1] * u.beta * ratio;
  }
  return a;
}

std::vector<double> intensity_distribution_table(int m_max, double n_mean) {
  if (m_max < 0) throw ValidationError("m must be >= 0");
  if (!(std::isfinite(n_mean) && n_mean >= 0.0)) throw ValidationError("n_mean must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(m_max) + 1);
  const double q = n_mean / (1.0 + n_mean);
  out[0] = 1.0 / std::sqrt(1.0 + n_mean);
  for (int m = 1; m <= m_max; ++m) {
    out[m] = out[m - 1] * (2.0 * m - 1.0) / (2.0 * m) * q;
  }
  return out;
}

double intensity_distribution(int m, double n_mean) {
  return intensity_distribution_table(m, n_mean).back();
}

double fock_photon_number(int n, double tau, double x) {
  if (n < 0) throw ValidationError("Fock index must be >= 0");
  return (1.0 + 2.0 * n) * vacuum_photon_number(tau, x) + n;
}

double thermal_photon_number(double nbar, double tau, double x) {
  if (!(std::isfinite(nbar) && nbar >= 0.0)) throw ValidationError("nbar must be >= 0");
  return (1.0 + 2.0 * nbar) * vacuum_photon_number(tau, x) + nbar;
}

double thermal_occupation(double omega, double T) {
  if (!(std::isfinite(omega) && omega > 0.0)) throw ValidationError("omega must be > 0");
  if (!(T >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (T == 0.0) return 0.0;
  return 1.0 / std::expm1(omega / T);
}

std::vector<double> revival_times(double x, int n_max) {
  require_x(x);
  if (std::abs(x) <= 1.0) {
    throw DomainError("no revivals in metal phase or at threshold");
  }
  if (n_max < 1) throw ValidationError("revival count must be >= 1");
  const double period = std::numbers::pi / std::sqrt(x * x - 1.0);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) out.push_back(n * period);
  return out;
}

SqueezeSpectrum squeeze_parameter_and_spacing(double x, double eps_omega0) {
  require_x(x);
  if (!(eps_omega0 > 0.0)) throw ValidationError("eps*omega0 must be > 0");
  if (x <= 1.0) throw DomainError("spectrum is continuous (x < 1) or coalescent (x = 1)");
  return {0.25 * std::log((x - 1.0) / (x + 1.0)),
          0.5 * eps_omega0 * std::sqrt(x * x - 1.0)};
}

std::vector<double> ladder_levels(double x, double eps_omega0, int count) {
  const SqueezeSpectrum s = squeeze_parameter_and_spacing(x, eps_omega0);
  const double K = x * eps_omega0;
  std::vector<double> out;
  for (int n = 0; n < count; ++n) out.push_back(0.25 * K - s.spacing * (n + 0.5));
  return out;
}

}  // namespace dce
