#pragma once

#include <Eigen/Core>
#include <vector>

namespace dce {

/// Real symmetric tridiagonal matrix. off[j] couples rows j and j+1.
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(diag.size()); }

  /// out = -i * T * v, the Schroedinger right-hand side.
  void apply_minus_i(const Eigen::VectorXcd& v, Eigen::VectorXcd& out) const;
  Eigen::MatrixXd dense() const;
};

/// Ascending eigenvalues.
std::vector<double> eigenvalues(const SymTridiagonal& t);

/// Dense propagator exp(-i T dt).
Eigen::MatrixXcd propagator(const SymTridiagonal& t, double dt);

}  // namespace dce
