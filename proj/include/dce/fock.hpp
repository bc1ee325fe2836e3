#pragma once

// Numerical evolution of truncated parity-block Fock amplitudes.

#include <Eigen/Core>
#include <vector>

#include "dce/ode.hpp"
#include "dce/params.hpp"
#include "dce/tridiagonal.hpp"

namespace dce {

enum class Parity { Even, Odd };

/// Amplitudes of one parity block; index j maps to |2j> (even) or |2j+1> (odd).
struct AmplitudeVector {
  Eigen::VectorXcd values;
  double tau = 0.0;
  Parity parity = Parity::Even;

  int J() const noexcept { return static_cast<int>(values.size()) - 1; }
  int fock_index(int j) const noexcept { return parity == Parity::Even ? 2 * j : 2 * j + 1; }
  double norm2() const { return values.squaredNorm(); }

  /// |0> in a block of dimension J+1.
  static AmplitudeVector vacuum(int J);
  /// |2j> (even) or |2j+1> (odd).
  static AmplitudeVector basis(int J, int j, Parity parity = Parity::Even);
};

/// One parity block of H as a real symmetric tridiagonal matrix. For the even
/// block, diagonal d_j = -K j and coupling c_j = -(eps*omega0/4) sqrt(2j(2j-1))
/// between j-1 and j.
struct ParityHamiltonian {
  SymTridiagonal matrix;
  Parity parity = Parity::Even;
  double eps_omega0 = 1.0;

  int J() const noexcept { return static_cast<int>(matrix.size()) - 1; }
  double diagonal(int j) const { return matrix.diag.at(static_cast<std::size_t>(j)); }
  /// Coupling between j-1 and j, j >= 1.
  double coupling(int j) const { return matrix.off.at(static_cast<std::size_t>(j - 1)); }
};

ParityHamiltonian build_even_hamiltonian(const CavityParams& p, int J);
ParityHamiltonian build_odd_hamiltonian(const CavityParams& p, int J);

inline constexpr double kDefaultLeakTol = 1e-10;
inline constexpr int kMaxTruncation = 1 << 15;

struct EvolveOptions {
  OdeOptions ode{1e-10, 1e-12};
  double leak_tol = kDefaultLeakTol;
};

struct EvolveResult {
  AmplitudeVector psi;
  double norm_deviation = 0.0;  // |norm^2 - 1|
  double leakage = 0.0;
  OdeStats stats;
};

/// Population in the top 10% of block indices (j > J - J/10).
double leakage(const AmplitudeVector& psi);

/// <a^dag a> = sum_j n_j |A_j|^2 with n_j the Fock number of index j.
double photon_number(const AmplitudeVector& psi);

/// Solves i dA/dt = H A from psi0 over physical time t (negative t runs
/// backwards). Throws TruncationError when leakage exceeds leak_tol.
EvolveResult evolve(const AmplitudeVector& psi0, const ParityHamiltonian& H, double t,
                    const EvolveOptions& opts = {});

/// Same as evolve(), sampled at increasing physical times (first may be 0).
/// Leakage is checked at every sample.
std::vector<EvolveResult> evolve_sampled(const AmplitudeVector& psi0,
                                         const ParityHamiltonian& H,
                                         const std::vector<double>& times,
                                         const EvolveOptions& opts = {});

/// Smallest power-of-two J >= 32 for which vacuum evolution up to tau_max
/// keeps leakage below leak_tol, seeded from the closed-form photon number.
/// Throws ResourceError above `cap`.
int auto_truncate(const CavityParams& p, double tau_max, double leak_tol = kDefaultLeakTol,
                  int cap = kMaxTruncation);

/// Ascending eigenvalues of the block.
std::vector<double> spectrum(const ParityHamiltonian& H);

/// Ascending eigenvalues of the full truncated H on |0>..|2J+1> (both blocks).
std::vector<double> full_spectrum(const CavityParams& p, int J);

}  // namespace dce
