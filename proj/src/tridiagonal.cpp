#include "dce/tridiagonal.hpp"

#include <Eigen/Eigenvalues>
#include <complex>

namespace dce {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve(const SymTridiagonal& t, int options) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(t.diag.data(), t.size());
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(t.off.data(), t.size() - 1);
  es.computeFromTridiagonal(d, e, options);
  return es;
}

}  // namespace

void SymTridiagonal::apply_minus_i(const Eigen::VectorXcd& v, Eigen::VectorXcd& out) const {
  const Eigen::Index n = size();
  for (Eigen::Index j = 0; j < n; ++j) {
    std::complex<double> acc = diag[j] * v[j];
    if (j > 0) acc += off[j - 1] * v[j - 1];
    if (j + 1 < n) acc += off[j] * v[j + 1];
    out[j] = std::complex<double>(acc.imag(), -acc.real());
  }
}

Eigen::MatrixXd SymTridiagonal::dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m(j, j) = diag[j];
    if (j + 1 < n) m(j, j + 1) = m(j + 1, j) = off[j];
  }
  return m;
}

std::vector<double> eigenvalues(const SymTridiagonal& t) {
  if (t.size() == 1) return {t.diag[0]};
  const auto es = solve(t, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

Eigen::MatrixXcd propagator(const SymTridiagonal& t, double dt) {
  const auto es = solve(t, Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::VectorXcd phase(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    phase[k] = std::polar(1.0, -es.eigenvalues()[k] * dt);
  }
  return v.cast<std::complex<double>>() * phase.asDiagonal() * v.transpose().cast<std::complex<double>>();
}

}  // namespace dce
