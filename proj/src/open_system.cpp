#include "dce/open_system.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "dce/errors.hpp"
#include "dce/fock.hpp"

namespace dce {

using cdouble = std::complex<double>;

// ---------------------------------------------------------------------------
// DensityMatrix

double DensityMatrix::photon_number() const {
  double s = 0.0;
  for (int n = 0; n <= N(); ++n) s += n * rho(n, n).real();
  return s;
}

double DensityMatrix::purity() const { return rho.cwiseAbs2().sum(); }

double DensityMatrix::odd_population() const {
  double s = 0.0;
  for (int n = 1; n <= N(); n += 2) s += rho(n, n).real();
  return s;
}

double DensityMatrix::leakage() const {
  double s = 0.0;
  for (int n = N() - N() / 10 + 1; n <= N(); ++n) s += rho(n, n).real();
  return s;
}

double DensityMatrix::hermiticity_error() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::vacuum(int N) { return fock(N, 0); }

DensityMatrix DensityMatrix::fock(int N, int n) {
  if (N < 1) throw ValidationError("truncation N must be >= 1");
  if (n < 0 || n > N) throw ValidationError("Fock index out of range");
  DensityMatrix d;
  d.rho = Eigen::MatrixXcd::Zero(N + 1, N + 1);
  d.rho(n, n) = 1.0;
  return d;
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
  if (psi.size() < 2) throw ValidationError("state needs at least two levels");
  DensityMatrix d;
  d.rho = psi * psi.adjoint();
  return d;
}

Eigen::MatrixXcd dephasing_superoperator(const Eigen::MatrixXcd& rho) {
  Eigen::MatrixXcd out(rho.rows(), rho.cols());
  for (Eigen::Index m = 0; m < rho.cols(); ++m) {
    for (Eigen::Index n = 0; n < rho.rows(); ++n) {
      const double d = static_cast<double>(n - m);
      out(n, m) = -0.5 * d * d * rho(n, m);
    }
  }
  return out;
}

DensityMatrix thermal_state(double nbar, int N) {
  if (!(std::isfinite(nbar) && nbar >= 0.0)) throw ValidationError("nbar must be >= 0");
  if (N < 1) throw ValidationError("truncation N must be >= 1");
  const double q = nbar / (1.0 + nbar);
  const double tail = std::pow(q, N + 1);
  if (tail >= 1e-10) {
    std::ostringstream msg;
    msg << "thermal tail " << tail << " beyond N = " << N << " is too heavy";
    throw TruncationError(msg.str(), tail);
  }
  DensityMatrix d;
  d.rho = Eigen::MatrixXcd::Zero(N + 1, N + 1);
  double p = 1.0 / (1.0 + nbar);
  double sum = 0.0;
  for (int n = 0; n <= N; ++n) {
    d.rho(n, n) = p;
    sum += p;
    p *= q;
  }
  d.rho /= sum;
  d.trace_deficit = 1.0 - sum;
  return d;
}

// ---------------------------------------------------------------------------
// Parity-block master-equation engine

namespace {

// Block (row parity a, column parity b) of rho, stored column-major at
// `offset` in the flat state vector.
struct Block {
  int a;
  int b;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index offset;
};

class LindbladEngine {
 public:
  LindbladEngine(const CavityParams& p, int N, bool even, bool odd, bool coherences)
      : N_(N), gamma_(p.gamma()) {
    const double lambda = 0.25 * p.eps_omega0();
    for (int par = 0; par < 2; ++par) {
      const int size = par == 0 ? N / 2 + 1 : (N + 1) / 2;
      diag_[par].resize(size);
      off_[par].assign(std::max(size - 1, 0), 0.0);
      for (int i = 0; i < size; ++i) {
        const double n = 2.0 * i + par;
        diag_[par][i] = -0.5 * p.K() * n;
        if (i + 1 < size) off_[par][i] = -lambda * std::sqrt((n + 2.0) * (n + 1.0));
      }
    }
    Eigen::Index offset = 0;
    auto add = [&](int a, int b) {
      Block blk{a, b, static_cast<Eigen::Index>(diag_[a].size()),
                static_cast<Eigen::Index>(diag_[b].size()), offset};
      offset += blk.rows * blk.cols;
      blocks_.push_back(blk);
    };
    if (even) add(0, 0);
    if (odd && N >= 1) add(1, 1);
    if (coherences && N >= 1) add(0, 1);
    size_ = offset;
  }

  Eigen::Index size() const noexcept { return size_; }

  Eigen::VectorXcd pack(const Eigen::MatrixXcd& rho) const {
    Eigen::VectorXcd y(size_);
    for (const Block& b : blocks_) {
      for (Eigen::Index j = 0; j < b.cols; ++j) {
        for (Eigen::Index i = 0; i < b.rows; ++i) {
          y[b.offset + i + j * b.rows] = rho(2 * i + b.a, 2 * j + b.b);
        }
      }
    }
    return y;
  }

  Eigen::MatrixXcd unpack(const Eigen::VectorXcd& y) const {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(N_ + 1, N_ + 1);
    for (const Block& b : blocks_) {
      for (Eigen::Index j = 0; j < b.cols; ++j) {
        for (Eigen::Index i = 0; i < b.rows; ++i) {
          const cdouble v = y[b.offset + i + j * b.rows];
          rho(2 * i + b.a, 2 * j + b.b) = v;
          if (b.a != b.b) rho(2 * j + b.b, 2 * i + b.a) = std::conj(v);
        }
      }
    }
    return rho;
  }

  // Off-diagonal (hopping) part of -i[H, rho].
  void coupling(const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const {
    for (const Block& b : blocks_) couple_block(b, y, dy);
  }

  // y <- exp(D s) y with D the diagonal part: detuning phases and dephasing.
  void apply_exp(double s, Eigen::VectorXcd& y) const {
    for (const Block& b : blocks_) exp_block(b, s, y);
  }

  double max_decay_rate() const { return 0.5 * gamma_ * N_ * N_; }

  LindbladSample observe(const Eigen::VectorXcd& y) const {
    LindbladSample s;
    double purity = 0.0;
    for (const Block& b : blocks_) {
      const auto X = y.segment(b.offset, b.rows * b.cols);
      const double w = X.squaredNorm();
      if (b.a != b.b) {
        purity += 2.0 * w;
        continue;
      }
      purity += w;
      for (Eigen::Index i = 0; i < b.rows; ++i) {
        const int n = static_cast<int>(2 * i + b.a);
        const double pop = X[i + i * b.rows].real();
        s.trace += pop;
        s.photon_number += n * pop;
        if (b.a == 1) s.odd_population += pop;
        if (n > N_ - N_ / 10) s.leakage += pop;
        for (Eigen::Index j = 0; j < i; ++j) {
          s.hermiticity_error = std::max(
              s.hermiticity_error, std::abs(X[i + j * b.rows] - std::conj(X[j + i * b.rows])));
        }
      }
    }
    s.purity = purity;
    return s;
  }

  // Exact propagation for gamma = 0: each block evolves as
  // X(t) = V_a e^{-i L_a t} (V_a^T X0 V_b) e^{i L_b t} V_b^T.
  class Unitary {
   public:
    explicit Unitary(const LindbladEngine& e, const Eigen::VectorXcd& y0) : e_(e) {
      for (int par = 0; par < 2; ++par) {
        const auto n = static_cast<Eigen::Index>(e.diag_[par].size());
        if (n == 0) continue;
        Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(e.diag_[par].data(), n);
        Eigen::VectorXd o = n > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                        e.off_[par].data(), n - 1))
                                  : Eigen::VectorXd(0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(d, o, Eigen::ComputeEigenvectors);
        V_[par] = es.eigenvectors();
        L_[par] = es.eigenvalues();
      }
      for (const Block& b : e.blocks_) {
        const auto X = Eigen::Map<const Eigen::MatrixXcd>(y0.data() + b.offset, b.rows, b.cols);
        tilde_.push_back(transform(V_[b.a].transpose(), X, V_[b.b]));
      }
    }

    Eigen::VectorXcd at(double t) const {
      Eigen::VectorXcd y(e_.size_);
      for (std::size_t k = 0; k < e_.blocks_.size(); ++k) {
        const Block& b = e_.blocks_[k];
        Eigen::MatrixXcd X = tilde_[k];
        for (Eigen::Index j = 0; j < b.cols; ++j) {
          for (Eigen::Index i = 0; i < b.rows; ++i) {
            X(i, j) *= std::polar(1.0, -(L_[b.a][i] - L_[b.b][j]) * t);
          }
        }
        Eigen::Map<Eigen::MatrixXcd>(y.data() + b.offset, b.rows, b.cols) =
            transform(V_[b.a], X, V_[b.b].transpose());
      }
      return y;
    }

   private:
    // A X B with real A, B, done as real products.
    static Eigen::MatrixXcd transform(const Eigen::MatrixXd& A, const Eigen::MatrixXcd& X,
                                      const Eigen::MatrixXd& B) {
      const Eigen::MatrixXd re = A * X.real() * B;
      const Eigen::MatrixXd im = A * X.imag() * B;
      Eigen::MatrixXcd out(re.rows(), re.cols());
      out.real() = re;
      out.imag() = im;
      return out;
    }

    const LindbladEngine& e_;
    Eigen::MatrixXd V_[2];
    Eigen::VectorXd L_[2];
    std::vector<Eigen::MatrixXcd> tilde_;
  };

  // Removes the anti-Hermitian part of the diagonal blocks left by roundoff.
  void hermitize(Eigen::VectorXcd& y) const {
    for (const Block& b : blocks_) {
      if (b.a != b.b) continue;
      auto X = Eigen::Map<Eigen::MatrixXcd>(y.data() + b.offset, b.rows, b.cols);
      X = (0.5 * (X + X.adjoint())).eval();
    }
  }

  double min_eigenvalue(const Eigen::VectorXcd& y) const {
    bool coherent = false;
    for (const Block& b : blocks_) coherent |= b.a != b.b;
    if (coherent) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(unpack(y), Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff();
    }
    double lo = 0.0;
    for (const Block& b : blocks_) {
      Eigen::MatrixXcd X = Eigen::Map<const Eigen::MatrixXcd>(y.data() + b.offset, b.rows, b.cols);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
  }

 private:
  void couple_block(const Block& b, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const {
    const cdouble* X = y.data() + b.offset;
    cdouble* D = dy.data() + b.offset;
    const auto& oa = off_[b.a];
    const auto& ob = off_[b.b];
    const Eigen::Index R = b.rows;
    const Eigen::Index C = b.cols;
    for (Eigen::Index j = 0; j < C; ++j) {
      const cdouble* col = X + j * R;
      const cdouble* left = j > 0 ? col - R : nullptr;
      const cdouble* right = j + 1 < C ? col + R : nullptr;
      const double obl = j > 0 ? ob[j - 1] : 0.0;
      const double obr = j + 1 < C ? ob[j] : 0.0;
      cdouble* out = D + j * R;
      for (Eigen::Index i = 0; i < R; ++i) {
        cdouble c = 0.0;
        if (i > 0) c += oa[i - 1] * col[i - 1];
        if (i + 1 < R) c += oa[i] * col[i + 1];
        if (left) c -= obl * left[i];
        if (right) c -= obr * right[i];
        out[i] = cdouble(c.imag(), -c.real());
      }
    }
  }

  void exp_block(const Block& b, double s, Eigen::VectorXcd& y) const {
    const Eigen::Index R = b.rows;
    const Eigen::Index C = b.cols;
    std::vector<cdouble> u(R), v(C);
    for (Eigen::Index i = 0; i < R; ++i) u[i] = std::polar(1.0, -diag_[b.a][i] * s);
    for (Eigen::Index j = 0; j < C; ++j) v[j] = std::polar(1.0, diag_[b.b][j] * s);
    // damping depends on n_a - n_b = 2(i - j) + a - b only
    std::vector<double> g(R + C - 1);
    for (Eigen::Index k = -(C - 1); k <= R - 1; ++k) {
      const double dn = 2.0 * k + b.a - b.b;
      g[k + C - 1] = std::exp(-0.5 * gamma_ * dn * dn * s);
    }
    cdouble* X = y.data() + b.offset;
    for (Eigen::Index j = 0; j < C; ++j) {
      cdouble* col = X + j * R;
      const double* gj = g.data() + (C - 1 - j);
      for (Eigen::Index i = 0; i < R; ++i) col[i] *= (u[i] * v[j]) * gj[i];
    }
  }

  int N_;
  double gamma_;
  std::vector<double> diag_[2];
  std::vector<double> off_[2];
  std::vector<Block> blocks_;
  Eigen::Index size_ = 0;
};

bool block_is_zero(const Eigen::MatrixXcd& rho, int a, int b) {
  for (Eigen::Index m = b; m < rho.cols(); m += 2) {
    for (Eigen::Index n = a; n < rho.rows(); n += 2) {
      if (rho(n, m) != cdouble(0.0, 0.0)) return false;
    }
  }
  return true;
}

void validate_state(const DensityMatrix& d) {
  if (d.rho.rows() != d.rho.cols() || d.rho.rows() < 2) {
    throw ValidationError("density matrix must be square with N >= 1");
  }
  if (d.hermiticity_error() > 1e-10) throw ValidationError("density matrix is not Hermitian");
  if (std::abs(d.trace() - 1.0) > 1e-8) throw ValidationError("density matrix trace is not 1");
}

}  // namespace

LindbladRun evolve_lindblad_sampled(const DensityMatrix& rho0, const CavityParams& p,
                                    const std::vector<double>& times,
                                    const LindbladOptions& opts) {
  validate_state(rho0);
  const int N = rho0.N();
  bool even = true, odd = true, coherences = true;
  if (opts.parity_fast_path) {
    coherences = !block_is_zero(rho0.rho, 0, 1);
    even = coherences || !block_is_zero(rho0.rho, 0, 0);
    odd = coherences || !block_is_zero(rho0.rho, 1, 1);
  }
  const LindbladEngine engine(p, N, even, odd, coherences);
  Eigen::VectorXcd y = engine.pack(rho0.rho);

  const bool unitary = opts.method == LindbladMethod::Unitary ||
                       (opts.method == LindbladMethod::Auto && p.gamma() == 0.0);
  if (opts.method == LindbladMethod::Unitary && p.gamma() != 0.0) {
    throw ValidationError("unitary propagation requires gamma = 0");
  }
  LawsonDormandPrince<Eigen::VectorXcd, LindbladEngine> solver(engine, opts.ode);
  std::optional<LindbladEngine::Unitary> exact;
  if (unitary) exact.emplace(engine, y);

  LindbladRun run;
  double t = 0.0;
  for (double target : times) {
    if (target < t) throw ValidationError("sample times must be increasing and >= 0");
    if (exact) {
      y = exact->at(target);
    } else {
      solver.integrate(y, t, target);
    }
    t = target;
    LindbladSample s = engine.observe(y);
    engine.hermitize(y);
    s.tau = rho0.tau + p.to_tau(t);
    if (s.leakage > opts.leak_tol) {
      std::ostringstream msg;
      msg << "truncation insufficient: leakage " << s.leakage << " > " << opts.leak_tol
          << " at tau = " << s.tau << " (N = " << N << ")";
      throw TruncationError(msg.str(), s.leakage);
    }
    if (std::abs(s.trace - 1.0) > opts.trace_tol) {
      throw ToleranceError("trace drifted to " + std::to_string(s.trace));
    }
    run.samples.push_back(s);
  }
  if (opts.check_positivity) {
    const double lo = engine.min_eigenvalue(y);
    if (lo < -opts.positivity_tol) {
      throw ToleranceError("positivity violated: min eigenvalue " + std::to_string(lo));
    }
  }
  run.final_state.rho = engine.unpack(y);
  run.final_state.tau = rho0.tau + p.to_tau(t);
  run.stats = solver.stats();
  return run;
}

DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const CavityParams& p, double t,
                              const LindbladOptions& opts) {
  return evolve_lindblad_sampled(rho0, p, {t}, opts).final_state;
}

// ---------------------------------------------------------------------------
// Moment engine

double MomentState::max_quadrature_variance() const {
  return 2.0 * n_mean + 1.0 + 2.0 * std::abs(a2);
}

MomentState moments_of(const DensityMatrix& d) {
  MomentState m;
  m.n_mean = d.photon_number();
  m.tau = d.tau;
  cdouble a2 = 0.0;
  // Tr(rho a^2) = sum_n sqrt(n(n-1)) <n|rho|n-2>
  for (int n = 2; n <= d.N(); ++n) a2 += std::sqrt(n * (n - 1.0)) * d.rho(n, n - 2);
  m.a2 = a2;
  return m;
}

std::vector<MomentState> evolve_moments(const MomentState& m0, const CavityParams& p,
                                        const std::vector<double>& tau_grid, double rtol) {
  if (!(m0.n_mean >= 0.0)) throw ValidationError("initial photon number must be >= 0");
  const double x = p.x();
  const double g = p.gamma_scaled();
  auto rhs = [x, g](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const cdouble a2(y[1], y[2]);
    const cdouble k(-g, x);
    const cdouble da2 = 2.0 * k * a2 + cdouble(0.0, 2.0 * y[0] + 1.0);
    dy[0] = 2.0 * a2.imag();
    dy[1] = da2.real();
    dy[2] = da2.imag();
  };
  OdeOptions opts;
  opts.rtol = rtol;
  opts.atol = rtol * 1e-2;
  auto solver = make_dormand_prince<Eigen::VectorXd>(rhs, opts);
  Eigen::VectorXd y(3);
  y << m0.n_mean, m0.a2.real(), m0.a2.imag();
  double tau = m0.tau;
  std::vector<MomentState> out;
  out.reserve(tau_grid.size());
  for (double target : tau_grid) {
    if (target < tau) throw ValidationError("tau grid must be increasing from the initial tau");
    solver.integrate(y, tau, target);
    tau = target;
    out.push_back({y[0], cdouble(y[1], y[2]), tau});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncation

int estimate_truncation(const MomentState& m0, const CavityParams& p, double tau_max,
                        double leak_tol) {
  constexpr int kSamples = 256;
  std::vector<double> grid;
  for (int k = 1; k <= kSamples; ++k) grid.push_back(m0.tau + tau_max * k / kSamples);
  double v = m0.max_quadrature_variance();
  for (const MomentState& m : evolve_moments(m0, p, grid, 1e-10)) {
    v = std::max(v, m.max_quadrature_variance());
  }
  constexpr int kMinN = 16;
  if (v <= 1.0 + 1e-12) return kMinN;
  const double r = (v - 1.0) / (v + 1.0);
  const double n = std::log(leak_tol * (1.0 - r)) / (0.9 * std::log(r));
  const int N = static_cast<int>(std::ceil(n / 8.0)) * 8;
  return std::max(kMinN, N);
}

AutoLindbladRun evolve_lindblad_auto(const StateFactory& make_rho0, const CavityParams& p,
                                     const std::vector<double>& times,
                                     const LindbladOptions& opts, int cap) {
  const double t_max = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  // Moments do not depend on truncation once the state fits; probe at a size
  // where the initial state is representable.
  int probe = 16;
  DensityMatrix probe_state;
  while (true) {
    try {
      probe_state = make_rho0(probe);
      break;
    } catch (const TruncationError&) {
      probe *= 2;
      if (probe > cap) throw ResourceError("initial state does not fit below the truncation cap");
    }
  }
  int N = std::max(probe, estimate_truncation(moments_of(probe_state), p, p.to_tau(t_max),
                                              opts.leak_tol));
  while (true) {
    if (N > cap) {
      std::ostringstream msg;
      msg << "density-matrix truncation N = " << N << " exceeds cap " << cap;
      throw ResourceError(msg.str());
    }
    try {
      AutoLindbladRun out;
      out.run = evolve_lindblad_sampled(make_rho0(N), p, times, opts);
      out.N = N;
      return out;
    } catch (const TruncationError&) {
      N = static_cast<int>(std::ceil(1.5 * N / 8.0)) * 8;
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<EnhancementRow> enhancement_curve(const std::vector<double>& gamma_scaled, double x,
                                              const std::vector<double>& tau_eval) {
  std::vector<double> sorted = tau_eval;
  std::sort(sorted.begin(), sorted.end());
  std::vector<EnhancementRow> rows;
  for (double g : gamma_scaled) {
    if (!(g >= 0.0)) throw ValidationError("scaled dephasing rate must be >= 0");
    // eps*omega0 = 1, so gamma = g/2.
    const CavityParams p = CavityParams::from_ratio(x, 1.0, 0.5 * g);
    const auto traj = evolve_moments(MomentState{}, p, sorted);
    for (std::size_t k = 0; k < tau_eval.size(); ++k) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), tau_eval[k]);
      const auto& m = traj[static_cast<std::size_t>(it - sorted.begin())];
      rows.push_back({g, static_cast<int>(k) + 1, tau_eval[k], m.n_mean});
    }
  }
  return rows;
}

}  // namespace dce
