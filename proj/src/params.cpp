#include "dce/params.hpp"

#include <cmath>
#include <string>

#include "dce/errors.hpp"

namespace dce {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

CavityParams::CavityParams(double epsilon, double omega0, double K, double gamma,
                           double nbar_th)
    : epsilon_(epsilon), omega0_(omega0), K_(K), gamma_(gamma), nbar_th_(nbar_th) {
  require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be finite and > 0");
  require(std::isfinite(omega0) && omega0 > 0.0, "omega0 must be finite and > 0");
  require(std::isfinite(K), "K must be finite");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
  require(std::isfinite(nbar_th) && nbar_th >= 0.0, "nbar_th must be finite and >= 0");
  require(std::isfinite(K / (epsilon * omega0)), "K/(epsilon*omega0) must be finite");
}

CavityParams CavityParams::from_ratio(double x, double eps_omega0, double gamma,
                                      double nbar_th) {
  return CavityParams(eps_omega0, 1.0, x * eps_omega0, gamma, nbar_th);
}

CavityParams CavityParams::with_gamma(double gamma) const {
  return CavityParams(epsilon_, omega0_, K_, gamma, nbar_th_);
}

CavityParams CavityParams::with_nbar(double nbar_th) const {
  return CavityParams(epsilon_, omega0_, K_, gamma_, nbar_th);
}

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Metal:
      return "Metal";
    case Regime::Threshold:
      return "Threshold";
    case Regime::Insulator:
      return "Insulator";
  }
  return "?";
}

Regime classify_regime(double x, double tol) {
  require(std::isfinite(x), "detuning ratio must be finite");
  require(tol >= 0.0, "threshold tolerance must be >= 0");
  const double ax = std::abs(x);
  if (ax < 1.0 - tol) return Regime::Metal;
  if (ax > 1.0 + tol) return Regime::Insulator;
  return Regime::Threshold;
}

Regime classify_regime(const CavityParams& p, double tol) {
  return classify_regime(p.x(), tol);
}

}  // namespace dce
