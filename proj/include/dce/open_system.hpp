#pragma once

// Pure-dephasing open dynamics: d(rho)/dt = -i[H, rho] + gamma D[a^dag a] rho.
// Two independent engines: the truncated density matrix and the closed
// second-moment system.

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <vector>

#include "dce/ode.hpp"
#include "dce/params.hpp"

namespace dce {

/// Truncated density matrix on Fock levels |0>..|N>.
struct DensityMatrix {
  Eigen::MatrixXcd rho;
  double tau = 0.0;
  double trace_deficit = 0.0;  // probability dropped when the state was built

  int N() const noexcept { return static_cast<int>(rho.rows()) - 1; }
  double trace() const { return rho.trace().real(); }
  double photon_number() const;
  double purity() const;
  /// Total population of odd Fock levels.
  double odd_population() const;
  /// Population in the top 10% of levels (n > N - N/10).
  double leakage() const;
  /// max |rho - rho^dag|
  double hermiticity_error() const;
  double min_eigenvalue() const;

  static DensityMatrix vacuum(int N);
  static DensityMatrix fock(int N, int n);
  static DensityMatrix pure(const Eigen::VectorXcd& psi);
};

/// Returns D[a^dag a] rho, entrywise -(n - m)^2 rho_nm / 2.
Eigen::MatrixXcd dephasing_superoperator(const Eigen::MatrixXcd& rho);

/// Diagonal thermal state P_n = nbar^n/(1+nbar)^(n+1), renormalized; the
/// dropped tail is stored in trace_deficit. Throws TruncationError when the
/// tail beyond N is >= 1e-10.
DensityMatrix thermal_state(double nbar, int N);

enum class LindbladMethod {
  Auto,        // Unitary when gamma = 0, otherwise RungeKutta
  RungeKutta,  // integrating-factor Dormand-Prince
  Unitary,     // exact block eigendecomposition, gamma = 0 only
};

struct LindbladOptions {
  OdeOptions ode{1e-8, 1e-12};
  double leak_tol = 1e-10;
  double trace_tol = 1e-8;
  double positivity_tol = 1e-6;
  bool check_positivity = true;
  /// Evolve only the parity blocks the initial state populates.
  bool parity_fast_path = true;
  LindbladMethod method = LindbladMethod::Auto;
};

struct LindbladSample {
  double tau = 0.0;
  double photon_number = 0.0;
  double trace = 0.0;
  double purity = 0.0;
  double odd_population = 0.0;
  double leakage = 0.0;
  double hermiticity_error = 0.0;  // measured before re-symmetrizing the state
};

struct LindbladRun {
  std::vector<LindbladSample> samples;
  DensityMatrix final_state;
  OdeStats stats;
};

/// Integrates the master equation from rho0 and samples observables at the
/// given increasing physical times. Throws TruncationError on leakage,
/// ToleranceError on trace drift or positivity violation of the final state.
LindbladRun evolve_lindblad_sampled(const DensityMatrix& rho0, const CavityParams& p,
                                    const std::vector<double>& times,
                                    const LindbladOptions& opts = {});

DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const CavityParams& p, double t,
                              const LindbladOptions& opts = {});

/// (<a^dag a>, <a^2>); <a^dag^2> is conj(a2).
struct MomentState {
  double n_mean = 0.0;
  std::complex<double> a2{0.0, 0.0};
  double tau = 0.0;

  /// Largest quadrature variance in vacuum units, 2n + 1 + 2|a2|.
  double max_quadrature_variance() const;
};

MomentState moments_of(const DensityMatrix& rho);

/// Integrates the closed moment equations in scaled time,
///   dn/dtau = i(<a^dag^2> - <a^2>),  d<a^2>/dtau = 2 K_g <a^2> + i(2n + 1),
/// with K_g = i K/(eps omega0) - 2 gamma/(eps omega0). Returns the state at
/// each entry of tau_grid (increasing, >= m0.tau).
std::vector<MomentState> evolve_moments(const MomentState& m0, const CavityParams& p,
                                        const std::vector<double>& tau_grid,
                                        double rtol = 1e-12);

/// Builds the initial state at a given truncation N.
using StateFactory = std::function<DensityMatrix(int N)>;

/// Estimated truncation from the largest quadrature variance V along the
/// moment trajectory: the Fock tail of a state with that variance decays
/// like ((V-1)/(V+1))^n.
int estimate_truncation(const MomentState& m0, const CavityParams& p, double tau_max,
                        double leak_tol = 1e-10);

struct AutoLindbladRun {
  LindbladRun run;
  int N = 0;
};

/// evolve_lindblad_sampled with the truncation chosen automatically: start
/// at estimate_truncation(), grow by 1.5x on TruncationError. Throws
/// ResourceError when the required N exceeds cap.
AutoLindbladRun evolve_lindblad_auto(const StateFactory& make_rho0, const CavityParams& p,
                                     const std::vector<double>& times,
                                     const LindbladOptions& opts = {}, int cap = 2048);

struct EnhancementRow {
  double gamma_scaled = 0.0;  // 2 gamma/(eps omega0)
  int tau_index = 0;
  double tau = 0.0;
  double n_mean = 0.0;
};

/// Vacuum photon number from the moment engine at every (gamma, tau) pair,
/// gamma-major.
std::vector<EnhancementRow> enhancement_curve(const std::vector<double>& gamma_scaled, double x,
                                              const std::vector<double>& tau_eval);

}  // namespace dce
