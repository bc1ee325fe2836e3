#pragma once

#include <string_view>

namespace dce {

/// Single-mode cavity under parametric modulation.
///
/// The effective Hamiltonian is
///   H = -(eps*omega0/4)(a^dag^2 + a^2) - (K/2) a^dag a
/// with the global phase exp(-iKt/4) dropped throughout the library; it
/// cancels in every observable. K is stored signed but every closed form
/// depends on K^2 only.
class CavityParams {
 public:
  /// Throws ValidationError unless epsilon > 0, omega0 > 0, gamma >= 0,
  /// nbar_th >= 0 and all values are finite.
  CavityParams(double epsilon, double omega0, double K, double gamma = 0.0,
               double nbar_th = 0.0);

  /// Parameters with eps*omega0 = eps_omega0 (omega0 = 1) and K = x*eps_omega0.
  static CavityParams from_ratio(double x, double eps_omega0 = 1.0,
                                 double gamma = 0.0, double nbar_th = 0.0);

  double epsilon() const noexcept { return epsilon_; }
  double omega0() const noexcept { return omega0_; }
  double K() const noexcept { return K_; }
  double gamma() const noexcept { return gamma_; }
  double nbar_th() const noexcept { return nbar_th_; }

  double eps_omega0() const noexcept { return epsilon_ * omega0_; }
  /// Detuning ratio K/(eps*omega0).
  double x() const noexcept { return K_ / eps_omega0(); }
  /// 2*gamma/(eps*omega0), the dephasing rate in scaled-time units.
  double gamma_scaled() const noexcept { return 2.0 * gamma_ / eps_omega0(); }

  /// Scaled time tau = eps*omega0*t/2.
  double to_tau(double t) const noexcept { return 0.5 * eps_omega0() * t; }
  double to_time(double tau) const noexcept { return 2.0 * tau / eps_omega0(); }

  CavityParams with_gamma(double gamma) const;
  CavityParams with_nbar(double nbar_th) const;

 private:
  double epsilon_;
  double omega0_;
  double K_;
  double gamma_;
  double nbar_th_;
};

enum class Regime { Metal, Threshold, Insulator };

inline constexpr double kDefaultThresholdTol = 1e-12;

std::string_view to_string(Regime r) noexcept;

/// Metal iff |x| < 1 - tol, Insulator iff |x| > 1 + tol, Threshold otherwise.
Regime classify_regime(double x, double tol = kDefaultThresholdTol);
Regime classify_regime(const CavityParams& p, double tol = kDefaultThresholdTol);

}  // namespace dce
