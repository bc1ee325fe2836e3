#include "dce/stochastic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "dce/errors.hpp"

namespace dce {

using cdouble = std::complex<double>;

NoiseSpec NoiseSpec::white(double gamma, std::uint64_t seed) {
  if (!(std::isfinite(gamma) && gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  NoiseSpec s;
  s.kind = NoiseKind::White;
  s.gamma = gamma;
  s.seed = seed;
  return s;
}

NoiseSpec NoiseSpec::ornstein_uhlenbeck(double sigma2, double tau_c, std::uint64_t seed) {
  if (!(std::isfinite(sigma2) && sigma2 >= 0.0)) throw ValidationError("sigma^2 must be >= 0");
  if (!(std::isfinite(tau_c) && tau_c > 0.0)) throw ValidationError("tau_c must be > 0");
  NoiseSpec s;
  s.kind = NoiseKind::OrnsteinUhlenbeck;
  s.sigma2 = sigma2;
  s.tau_c = tau_c;
  s.seed = seed;
  return s;
}

NoiseSpec NoiseSpec::ornstein_uhlenbeck_matched(double gamma, double tau_c,
                                                std::uint64_t seed) {
  if (!(std::isfinite(gamma) && gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  if (!(std::isfinite(tau_c) && tau_c > 0.0)) throw ValidationError("tau_c must be > 0");
  return ornstein_uhlenbeck(2.0 * gamma / tau_c, tau_c, seed);
}

bool NoiseSpec::is_zero() const noexcept {
  return kind == NoiseKind::White ? gamma == 0.0 : sigma2 == 0.0;
}

namespace {

// Standard normals from a per-trajectory mt19937_64 stream; Box-Muller on
// 53-bit uniforms so the sequence is fixed across standard libraries.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t trajectory) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trajectory),
                      static_cast<std::uint32_t>(trajectory >> 32)};
    engine_.seed(seq);
  }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// exp(-i T s) by Taylor series on substeps with |T s/m| <= 1/2, then P_h^m.
// Entries far from the diagonal only receive products of small terms, so the
// band edge is computed without the roundoff fill of an eigendecomposition.
Eigen::MatrixXcd taylor_propagator(const SymTridiagonal& T, double s) {
  const Eigen::Index n = T.size();
  double norm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double row = std::abs(T.diag[j]);
    if (j > 0) row += std::abs(T.off[j - 1]);
    if (j + 1 < n) row += std::abs(T.off[j]);
    norm = std::max(norm, row);
  }
  const int m = std::max(1, static_cast<int>(std::ceil(2.0 * norm * std::abs(s))));
  const double h = s / m;
  const cdouble mih(0.0, -h);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd Ph = term;
  Eigen::MatrixXcd next(n, n);
  for (int k = 1; k <= 60; ++k) {
    // next = term * (-i h T) / k
    for (Eigen::Index j = 0; j < n; ++j) {
      next.col(j) = term.col(j) * T.diag[j];
      if (j > 0) next.col(j) += term.col(j - 1) * T.off[j - 1];
      if (j + 1 < n) next.col(j) += term.col(j + 1) * T.off[j];
    }
    term = next * (mih / static_cast<double>(k));
    Ph += term;
    if (term.cwiseAbs().maxCoeff() < 1e-30) break;
  }
  Eigen::MatrixXcd P = Ph;
  for (int k = 1; k < m; ++k) P = (P * Ph).eval();
  return P;
}

// exp(-i T s) stored by diagonals, dropping diagonals whose entries are all
// below 1e-17.
class BandedPropagator {
 public:
  BandedPropagator(const SymTridiagonal& H, double s) : n_(H.size()) {
    const Eigen::MatrixXcd P = taylor_propagator(H, s);
    w_ = 0;
    for (Eigen::Index d = 1; d < n_; ++d) {
      double m = 0.0;
      for (Eigen::Index i = 0; i + d < n_; ++i) {
        m = std::max({m, std::abs(P(i, i + d)), std::abs(P(i + d, i))});
      }
      if (m > 1e-17) w_ = d;
    }
    const Eigen::Index width = 2 * w_ + 1;
    band_.assign(static_cast<std::size_t>(n_ * width), cdouble(0.0, 0.0));
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - w_); j <= std::min(n_ - 1, i + w_); ++j) {
        band_[static_cast<std::size_t>(i * width + (j - i + w_))] = P(i, j);
      }
    }
  }

  // out = P * in
  void apply(const cdouble* in, cdouble* out) const {
    const Eigen::Index width = 2 * w_ + 1;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - w_);
      const Eigen::Index hi = std::min(n_ - 1, i + w_);
      const cdouble* row = band_.data() + i * width + (lo - i + w_);
      double re = 0.0, im = 0.0;
      for (Eigen::Index j = lo; j <= hi; ++j, ++row) {
        const cdouble a = *row;
        const cdouble b = in[j];
        re += a.real() * b.real() - a.imag() * b.imag();
        im += a.real() * b.imag() + a.imag() * b.real();
      }
      out[i] = cdouble(re, im);
    }
  }

  // out = P^dag * in
  void apply_adjoint(const cdouble* in, cdouble* out) const {
    const Eigen::Index width = 2 * w_ + 1;
    std::fill(out, out + n_, cdouble(0.0, 0.0));
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - w_);
      const Eigen::Index hi = std::min(n_ - 1, i + w_);
      const cdouble* row = band_.data() + i * width + (lo - i + w_);
      for (Eigen::Index j = lo; j <= hi; ++j, ++row) out[j] += std::conj(*row) * in[i];
    }
  }

  Eigen::Index bandwidth() const noexcept { return w_; }

 private:
  Eigen::Index n_;
  Eigen::Index w_ = 0;
  std::vector<cdouble> band_;
};

// psi_{k+1} = Ph D_k Ph psi_k is advanced as chi_{k+1} = P D_k chi_k with
// chi = Ph psi and P = Ph^2, so each step costs one banded product.
class StrangStepper {
 public:
  StrangStepper(const ParityHamiltonian& H, double dt)
      : half_(H.matrix, 0.5 * dt),
        full_(H.matrix, dt),
        dt_(dt),
        odd_(H.parity == Parity::Odd),
        n_(H.matrix.size()),
        work_(static_cast<std::size_t>(n_)) {}

  void begin(const Eigen::VectorXcd& psi, Eigen::VectorXcd& chi) const {
    chi.resize(n_);
    half_.apply(psi.data(), chi.data());
  }

  // One step with frequency shift dK over the step.
  void step(double dK, Eigen::VectorXcd& chi) {
    const double dphi = -0.5 * dK * dt_;
    if (dphi != 0.0) {
      // exp(-i dphi n) with n = 2j (+1 for odd); powers built by recurrence
      const cdouble z = std::polar(1.0, -2.0 * dphi);
      cdouble f = odd_ ? std::polar(1.0, -dphi) : cdouble(1.0, 0.0);
      for (Eigen::Index j = 0; j < n_; ++j) {
        chi[j] *= f;
        f *= z;
      }
    }
    full_.apply(chi.data(), work_.data());
    std::copy(work_.begin(), work_.end(), chi.data());
  }

  void state(const Eigen::VectorXcd& chi, Eigen::VectorXcd& psi) const {
    psi.resize(n_);
    half_.apply_adjoint(chi.data(), psi.data());
  }

 private:
  BandedPropagator half_;
  BandedPropagator full_;
  double dt_;
  bool odd_;
  Eigen::Index n_;
  std::vector<cdouble> work_;
};

void check_dt(const CavityParams& p, double dt) {
  if (!(std::isfinite(dt) && dt > 0.0)) throw ValidationError("dt must be > 0");
  if (dt * p.eps_omega0() > 0.01 * (1.0 + 1e-12)) {
    throw ValidationError("dt*eps*omega0 must be <= 0.01");
  }
}

void check_norm(double norm2, double tau, double tol) {
  const double drift = std::abs(norm2 - 1.0);
  if (drift > tol * std::max(1.0, tau)) {
    throw ToleranceError("trajectory norm drifted by " + std::to_string(drift));
  }
}

}  // namespace

std::vector<double> sample_path(const NoiseSpec& spec, double dt, int steps,
                                std::uint64_t trajectory) {
  if (!(std::isfinite(dt) && dt > 0.0)) throw ValidationError("dt must be > 0");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  std::vector<double> path(static_cast<std::size_t>(steps), 0.0);
  if (spec.is_zero()) return path;
  GaussianStream g(spec.seed, trajectory);
  if (spec.kind == NoiseKind::White) {
    const double s = std::sqrt(4.0 * spec.gamma / dt);
    for (double& v : path) v = s * g.next();
  } else {
    // (X_{k+1}, integral of X over the step) given X_k is jointly Gaussian;
    // the path value is the step average, so the phase per step is exact.
    const double sigma = std::sqrt(spec.sigma2);
    const double tc = spec.tau_c;
    const double u = dt / tc;
    const double e = std::exp(-u);
    const double om = -std::expm1(-u);  // 1 - e
    const double vx = -std::expm1(-2.0 * u);
    // 2u - 3 + 4e^-u - e^-2u, cancellation-free for small u
    const double fi = u < 1e-2 ? u * u * u * (2.0 / 3.0 - u / 2.0 + 7.0 * u * u / 30.0 -
                                              u * u * u / 12.0)
                               : 2.0 * u - 3.0 + 4.0 * e - std::exp(-2.0 * u);
    const double sx = std::sqrt(vx);              // X_{k+1} noise, units of sigma
    const double cxi = tc * om * om / sx;         // cov(I, X)/sx, units of sigma
    const double si = std::sqrt(std::max(0.0, tc * tc * fi - cxi * cxi));
    double x = sigma * g.next();
    for (double& out : path) {
      const double z1 = g.next();
      const double z2 = g.next();
      const double integral = x * tc * om + sigma * (cxi * z1 + si * z2);
      out = integral / dt;
      x = x * e + sigma * sx * z1;
    }
  }
  return path;
}

std::vector<AmplitudeVector> evolve_trajectory(const AmplitudeVector& psi0, const CavityParams& p,
                                               const std::vector<double>& path, double dt,
                                               const std::vector<int>& sample_steps,
                                               const TrajectoryOptions& opts) {
  check_dt(p, dt);
  if (psi0.J() < 2) throw ValidationError("trajectory needs J >= 2");
  if (std::abs(psi0.norm2() - 1.0) > 1e-9) throw ValidationError("psi0 must be normalized");
  for (std::size_t k = 0; k < sample_steps.size(); ++k) {
    if (sample_steps[k] < 0 || sample_steps[k] > static_cast<int>(path.size()) ||
        (k > 0 && sample_steps[k] < sample_steps[k - 1])) {
      throw ValidationError("sample steps must be increasing and within the path");
    }
  }
  const ParityHamiltonian H = psi0.parity == Parity::Even ? build_even_hamiltonian(p, psi0.J())
                                                          : build_odd_hamiltonian(p, psi0.J());
  StrangStepper stepper(H, dt);
  Eigen::VectorXcd chi;
  stepper.begin(psi0.values, chi);
  std::vector<AmplitudeVector> out;
  out.reserve(sample_steps.size());
  int k = 0;
  for (int target : sample_steps) {
    for (; k < target; ++k) stepper.step(path[static_cast<std::size_t>(k)], chi);
    AmplitudeVector psi;
    psi.parity = psi0.parity;
    psi.tau = psi0.tau + p.to_tau(k * dt);
    stepper.state(chi, psi.values);
    check_norm(psi.norm2(), psi.tau - psi0.tau, opts.norm_tol);
    out.push_back(std::move(psi));
  }
  return out;
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

namespace {

struct Batch {
  std::vector<double> n;     // trajectory-major photon numbers
  std::vector<double> leak;  // same layout, leakage
};

// Runs trajectories [first, last) and fills rows of batch.n.
void run_range(const CavityParams& p, const NoiseSpec& spec, int J, double dt, int steps,
               const std::vector<int>& sample_steps, const TrajectoryOptions& topts,
               std::uint64_t first, std::uint64_t last, Batch& b) {
  const ParityHamiltonian H = build_even_hamiltonian(p, J);
  StrangStepper stepper(H, dt);
  const std::size_t S = sample_steps.size();
  Eigen::VectorXcd chi, psi;
  AmplitudeVector view;
  for (std::uint64_t t = first; t < last; ++t) {
    const std::vector<double> path = sample_path(spec, dt, steps, t);
    stepper.begin(AmplitudeVector::vacuum(J).values, chi);
    int k = 0;
    for (std::size_t s = 0; s < S; ++s) {
      for (; k < sample_steps[s]; ++k) stepper.step(path[static_cast<std::size_t>(k)], chi);
      stepper.state(chi, view.values);
      check_norm(view.norm2(), p.to_tau(k * dt), topts.norm_tol);
      b.n[t * S + s] = photon_number(view);
      b.leak[t * S + s] = leakage(view);
    }
  }
}

Batch run_batch(const CavityParams& p, const NoiseSpec& spec, int J, double dt, int steps,
                const std::vector<int>& sample_steps, const TrajectoryOptions& topts,
                int n_traj, unsigned threads) {
  Batch b;
  b.n.assign(static_cast<std::size_t>(n_traj) * sample_steps.size(), 0.0);
  b.leak = b.n;
  const unsigned T = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_traj)));
  std::vector<std::exception_ptr> errors(T);
  auto work = [&](unsigned w) {
    const std::uint64_t first = static_cast<std::uint64_t>(n_traj) * w / T;
    const std::uint64_t last = static_cast<std::uint64_t>(n_traj) * (w + 1) / T;
    try {
      run_range(p, spec, J, dt, steps, sample_steps, topts, first, last, b);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (T == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < T; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return b;
}

// Largest over samples of the trajectory-averaged leakage, i.e. the leakage
// of the ensemble density matrix.
double ensemble_leakage(const Batch& b, std::size_t S, int n_traj) {
  std::vector<double> col(static_cast<std::size_t>(n_traj));
  double worst = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    for (int t = 0; t < n_traj; ++t) col[t] = b.leak[t * S + s];
    worst = std::max(worst, pairwise_sum(col.data(), col.size()) / n_traj);
  }
  return worst;
}

}  // namespace

EnsembleResult ensemble_average(const CavityParams& p, const NoiseSpec& spec, int n_traj,
                                double dt, const std::vector<double>& tau_grid,
                                const EnsembleOptions& opts) {
  check_dt(p, dt);
  if (n_traj < 2) throw ValidationError("need at least 2 trajectories");
  if (tau_grid.empty()) throw ValidationError("tau grid must not be empty");
  if (opts.J != 0 && opts.J < 2) throw ValidationError("J must be >= 2");
  std::vector<int> sample_steps;
  for (double tau : tau_grid) {
    if (!(std::isfinite(tau) && tau >= 0.0)) throw ValidationError("tau must be >= 0");
    const int k = static_cast<int>(std::llround(p.to_time(tau) / dt));
    if (!sample_steps.empty() && k < sample_steps.back()) {
      throw ValidationError("tau grid must be increasing");
    }
    sample_steps.push_back(k);
  }
  const int steps = sample_steps.back();
  const unsigned threads =
      opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());

  int J = opts.J;
  if (J == 0) {
    const int pilot = std::min(n_traj, std::max(2, opts.pilot));
    for (J = 32;; J *= 2) {
      if (J > kMaxTruncation) throw ResourceError("trajectory truncation exceeds cap");
      const Batch b = run_batch(p, spec, J, dt, steps, sample_steps, opts.trajectory, pilot,
                                threads);
      if (ensemble_leakage(b, sample_steps.size(), pilot) < opts.leak_tol) break;
    }
  }

  const Batch b =
      run_batch(p, spec, J, dt, steps, sample_steps, opts.trajectory, n_traj, threads);
  const double leak = ensemble_leakage(b, sample_steps.size(), n_traj);
  if (leak > opts.leak_tol) {
    std::ostringstream msg;
    msg << "ensemble leakage " << leak << " > " << opts.leak_tol << " (J = " << J << ")";
    throw TruncationError(msg.str(), leak);
  }

  EnsembleResult r;
  r.n_traj = n_traj;
  r.seed = spec.seed;
  r.J = J;
  r.steps = steps;
  r.leakage = leak;
  r.max_trajectory_leakage = *std::max_element(b.leak.begin(), b.leak.end());
  const std::size_t S = sample_steps.size();
  std::vector<double> col(static_cast<std::size_t>(n_traj));
  for (std::size_t s = 0; s < S; ++s) {
    for (int t = 0; t < n_traj; ++t) col[t] = b.n[t * S + s];
    const double mean = pairwise_sum(col.data(), col.size()) / n_traj;
    for (double& v : col) v = (v - mean) * (v - mean);
    const double var = pairwise_sum(col.data(), col.size()) / (n_traj - 1);
    r.tau.push_back(p.to_tau(sample_steps[s] * dt));
    r.mean.push_back(mean);
    r.std_error.push_back(std::sqrt(var / n_traj));
  }
  return r;
}

}  // namespace dce
