#pragma once

// Trajectories with a fluctuating frequency shift K + dK(t). The ensemble of
// white-noise trajectories reproduces pure dephasing at rate gamma.

#include <cstdint>
#include <vector>

#include "dce/fock.hpp"
#include "dce/params.hpp"

namespace dce {

enum class NoiseKind { White, OrnsteinUhlenbeck };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::White;
  double gamma = 0.0;   // White: target dephasing rate, <dK dK> = 4 gamma delta
  double sigma2 = 0.0;  // OU: stationary variance of dK
  double tau_c = 0.0;   // OU: correlation time
  std::uint64_t seed = 0;

  static NoiseSpec white(double gamma, std::uint64_t seed);
  static NoiseSpec ornstein_uhlenbeck(double sigma2, double tau_c, std::uint64_t seed);
  /// OU with 2 sigma^2 tau_c = 4 gamma, the same low-frequency strength as white(gamma).
  static NoiseSpec ornstein_uhlenbeck_matched(double gamma, double tau_c, std::uint64_t seed);

  bool is_zero() const noexcept;
};

/// Piecewise-constant dK for each step. White: iid N(0, 4 gamma/dt). OU: the
/// exact average of the process over each step, from a stationary start. The stream depends only on
/// (seed, trajectory).
std::vector<double> sample_path(const NoiseSpec& spec, double dt, int steps,
                                std::uint64_t trajectory);

struct TrajectoryOptions {
  /// Relative bound on |norm^2 - 1| per unit of scaled time.
  double norm_tol = 1e-9;
};

/// Strang splitting exp(-iH dt/2) exp(-i dphi a^dag a) exp(-iH dt/2) with
/// dphi = -dK dt/2, one step per path entry. Returns psi after each step
/// index in sample_steps (increasing, 0 = initial state). Throws
/// ValidationError if dt*eps*omega0 > 0.01 and ToleranceError on norm drift.
std::vector<AmplitudeVector> evolve_trajectory(const AmplitudeVector& psi0, const CavityParams& p,
                                               const std::vector<double>& path, double dt,
                                               const std::vector<int>& sample_steps,
                                               const TrajectoryOptions& opts = {});

struct EnsembleOptions {
  /// Vacuum block truncation; 0 picks it by doubling from 32 until the
  /// averaged state of a pilot batch stays below leak_tol.
  int J = 0;
  double leak_tol = 5e-5;
  int pilot = 64;
  /// Worker threads; results do not depend on this.
  unsigned threads = 0;
  TrajectoryOptions trajectory;
};

struct EnsembleResult {
  std::vector<double> tau;  // sample times actually used (nearest step)
  std::vector<double> mean;
  std::vector<double> std_error;
  int n_traj = 0;
  std::uint64_t seed = 0;
  int J = 0;
  int steps = 0;
  double leakage = 0.0;                 // of the averaged state, worst sample
  double max_trajectory_leakage = 0.0;  // diagnostic
};

/// Mean photon number and its standard error over n_traj vacuum trajectories,
/// each tau rounded to the nearest step of dt. Throws TruncationError when the
/// leakage of the trajectory-averaged state exceeds leak_tol at a sample.
EnsembleResult ensemble_average(const CavityParams& p, const NoiseSpec& spec, int n_traj,
                                double dt, const std::vector<double>& tau_grid,
                                const EnsembleOptions& opts = {});

/// Pairwise (cascade) summation; fixed association order.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace dce
