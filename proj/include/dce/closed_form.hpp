#pragma once

// Closed-form vacuum dynamics of the single-mode modulated cavity.
//
// All time arguments are the scaled time tau = eps*omega0*t/2 (identical to
// the lattice coordinate Z = 2*C1*z) and x = K/(eps*omega0). The evolution
// operator factorizes as
//   U(t) = exp(-iKt/4) * beta0^{1/4} exp(beta a^dag^2) exp(a^dag a ln beta0) exp(beta a^2),
// and the global phase exp(-iKt/4) is omitted by every function here.

#include <complex>
#include <vector>

namespace dce {

using cdouble = std::complex<double>;

struct UCoefficients {
  cdouble beta;
  cdouble beta0;
  cdouble eta;  // principal sqrt(1 - x^2)

  /// -4 beta^2 / beta0; real and equal to vacuum_photon_number().
  cdouble photon_number() const { return -4.0 * beta * beta / beta0; }
};

UCoefficients u_coefficients(double tau, double x);

/// sinh^2(eta tau)/eta^2 on the real branch: exponential for |x| < 1,
/// quadratic (tau^2) at |x| = 1, oscillatory for |x| > 1.
double vacuum_photon_number(double tau, double x);

/// Largest vacuum photon number reached on [0, tau_max].
double max_vacuum_photon_number(double tau_max, double x);

/// Amplitudes A_{2m} of U|0>, m = 0..m_max, global phase omitted. The
/// beta0^{1/4} factor uses the branch continuous in tau.
std::vector<cdouble> vacuum_amplitudes(double tau, double x, int m_max);

/// Even-site intensity law I_m = (2m)!/(2^m m!)^2 n^m/(1+n)^{m+1/2}.
double intensity_distribution(int m, double n_mean);
/// I_0..I_{m_max} in one recurrence pass.
std::vector<double> intensity_distribution_table(int m_max, double n_mean);

/// Photon number produced from the Fock state |n>: (1+2n) N0 + n.
double fock_photon_number(int n, double tau, double x);
/// Photon number produced from a thermal field of mean occupation nbar.
double thermal_photon_number(double nbar, double tau, double x);

/// Bose-Einstein occupation 1/(exp(omega/T) - 1), natural units; 0 at T = 0.
double thermal_occupation(double omega, double T);

/// Zeros of the vacuum photon number, n*pi/sqrt(x^2 - 1) for n = 1..n_max.
/// Throws DomainError for |x| <= 1.
std::vector<double> revival_times(double x, int n_max);

struct SqueezeSpectrum {
  double r;        // squeeze parameter diagonalizing H
  double spacing;  // level spacing of H [rad/time]
};

/// Throws DomainError for x <= 1.
SqueezeSpectrum squeeze_parameter_and_spacing(double x, double eps_omega0);

/// Exact top-of-spectrum levels E_n = K/4 - spacing*(n + 1/2), n = 0..count-1,
/// for x > 1 (K > eps*omega0 > 0). Descending order.
std::vector<double> ladder_levels(double x, double eps_omega0, int count);

}  // namespace dce
