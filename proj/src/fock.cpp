#include "dce/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dce/closed_form.hpp"
#include "dce/errors.hpp"

namespace dce {

AmplitudeVector AmplitudeVector::vacuum(int J) { return basis(J, 0, Parity::Even); }

AmplitudeVector AmplitudeVector::basis(int J, int j, Parity parity) {
  if (J < 1) throw ValidationError("truncation J must be >= 1");
  if (j < 0 || j > J) throw ValidationError("basis index out of range");
  AmplitudeVector a;
  a.values = Eigen::VectorXcd::Zero(J + 1);
  a.values[j] = 1.0;
  a.parity = parity;
  return a;
}

namespace {

ParityHamiltonian build_block(const CavityParams& p, int J, Parity parity) {
  if (J < 2) throw ValidationError("truncation J must be >= 2");
  const double lambda = 0.25 * p.eps_omega0();
  const int offset = parity == Parity::Even ? 0 : 1;
  ParityHamiltonian H;
  H.parity = parity;
  H.eps_omega0 = p.eps_omega0();
  H.matrix.diag.resize(static_cast<std::size_t>(J) + 1);
  H.matrix.off.resize(static_cast<std::size_t>(J));
  for (int j = 0; j <= J; ++j) {
    const double m = 2.0 * j + offset;
    H.matrix.diag[j] = -0.5 * p.K() * m;
    if (j > 0) H.matrix.off[j - 1] = -lambda * std::sqrt(m * (m - 1.0));
  }
  return H;
}

void check_leakage(double leak, double leak_tol, double tau) {
  if (leak > leak_tol) {
    std::ostringstream msg;
    msg << "truncation insufficient: leakage " << leak << " > " << leak_tol << " at tau = " << tau;
    throw TruncationError(msg.str(), leak);
  }
}

}  // namespace

ParityHamiltonian build_even_hamiltonian(const CavityParams& p, int J) {
  return build_block(p, J, Parity::Even);
}

ParityHamiltonian build_odd_hamiltonian(const CavityParams& p, int J) {
  return build_block(p, J, Parity::Odd);
}

double leakage(const AmplitudeVector& psi) {
  const int J = psi.J();
  double sum = 0.0;
  for (int j = J - J / 10 + 1; j <= J; ++j) sum += std::norm(psi.values[j]);
  return sum;
}

double photon_number(const AmplitudeVector& psi) {
  double sum = 0.0;
  for (int j = 0; j <= psi.J(); ++j) sum += psi.fock_index(j) * std::norm(psi.values[j]);
  return sum;
}

std::vector<EvolveResult> evolve_sampled(const AmplitudeVector& psi0, const ParityHamiltonian& H,
                                         const std::vector<double>& times,
                                         const EvolveOptions& opts) {
  if (psi0.values.size() != H.matrix.size()) {
    throw ValidationError("state and Hamiltonian dimensions differ");
  }
  if (psi0.parity != H.parity) throw ValidationError("state and Hamiltonian parity differ");
  if (std::abs(psi0.norm2() - 1.0) > 1e-9) throw ValidationError("initial state is not normalized");

  auto rhs = [&H](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
    H.matrix.apply_minus_i(y, dy);
  };
  auto solver = make_dormand_prince<Eigen::VectorXcd>(rhs, opts.ode);

  std::vector<EvolveResult> out;
  out.reserve(times.size());
  Eigen::VectorXcd y = psi0.values;
  double t = 0.0;
  for (double target : times) {
    solver.integrate(y, t, target);
    t = target;
    EvolveResult r;
    r.psi.values = y;
    r.psi.parity = psi0.parity;
    r.psi.tau = psi0.tau + 0.5 * H.eps_omega0 * t;
    r.norm_deviation = std::abs(r.psi.norm2() - 1.0);
    r.leakage = leakage(r.psi);
    r.stats = solver.stats();
    check_leakage(r.leakage, opts.leak_tol, r.psi.tau);
    out.push_back(std::move(r));
  }
  return out;
}

EvolveResult evolve(const AmplitudeVector& psi0, const ParityHamiltonian& H, double t,
                    const EvolveOptions& opts) {
  return evolve_sampled(psi0, H, {t}, opts).front();
}

int auto_truncate(const CavityParams& p, double tau_max, double leak_tol, int cap) {
  if (!(std::isfinite(tau_max) && tau_max >= 0.0)) throw ValidationError("tau_max must be >= 0");
  constexpr int kMinJ = 32;
  if (tau_max == 0.0) return kMinJ;

  const double n_est = max_vacuum_photon_number(tau_max, p.x());
  const double seed = 10.0 * (1.0 + n_est);
  int J = kMinJ;
  while (J < seed && J < cap) J *= 2;

  constexpr int kCheckpoints = 64;
  std::vector<double> times;
  for (int k = 1; k <= kCheckpoints; ++k) times.push_back(p.to_time(tau_max * k / kCheckpoints));
  EvolveOptions opts;
  opts.leak_tol = leak_tol;
  auto passes = [&](int j) {
    try {
      evolve_sampled(AmplitudeVector::vacuum(j), build_even_hamiltonian(p, j), times, opts);
      return true;
    } catch (const TruncationError&) {
      return false;
    }
  };

  if (passes(J)) {
    while (J > kMinJ && passes(J / 2)) J /= 2;
    return J;
  }
  while (true) {
    J *= 2;
    if (J > cap) {
      std::ostringstream msg;
      msg << "auto truncation exceeded cap J = " << cap << " for tau_max = " << tau_max;
      throw ResourceError(msg.str());
    }
    if (passes(J)) return J;
  }
}

std::vector<double> spectrum(const ParityHamiltonian& H) { return eigenvalues(H.matrix); }

std::vector<double> full_spectrum(const CavityParams& p, int J) {
  std::vector<double> ev = spectrum(build_even_hamiltonian(p, J));
  const std::vector<double> odd = spectrum(build_odd_hamiltonian(p, J));
  ev.insert(ev.end(), odd.begin(), odd.end());
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace dce
