#include <cmath>
#include <numeric>
#include <vector>

#include "dce/closed_form.hpp"
#include "dce/errors.hpp"
#include "dce/fock.hpp"
#include "dce/open_system.hpp"
#include "dce/stochastic.hpp"
#include "doctest.h"

using namespace dce;
using doctest::Approx;

namespace {

double sample_variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

std::vector<double> grid(double tau_max, int n) {
  std::vector<double> g;
  for (int k = 1; k <= n; ++k) g.push_back(tau_max * k / n);
  return g;
}

}  // namespace

TEST_CASE("sample_path basics") {
  const auto zero = sample_path(NoiseSpec::white(0.0, 5), 0.01, 100, 3);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));
  CHECK(sample_path(NoiseSpec::white(0.3, 5), 0.01, 0, 0).empty());

  const auto a = sample_path(NoiseSpec::white(0.01, 42), 0.01, 100000, 7);
  CHECK(sample_variance(a) == Approx(4.0).epsilon(0.05));
  CHECK(a == sample_path(NoiseSpec::white(0.01, 42), 0.01, 100000, 7));
  CHECK(a != sample_path(NoiseSpec::white(0.01, 42), 0.01, 100000, 8));
  CHECK(a != sample_path(NoiseSpec::white(0.01, 43), 0.01, 100000, 7));

  CHECK_THROWS_AS(sample_path(NoiseSpec::white(0.01, 1), 0.0, 10, 0), ValidationError);
  CHECK_THROWS_AS(NoiseSpec::white(-1.0, 1), ValidationError);
  CHECK_THROWS_AS(NoiseSpec::ornstein_uhlenbeck(1.0, 0.0, 1), ValidationError);
}

TEST_CASE("Ornstein-Uhlenbeck path statistics") {
  // step averages over u = dt/tau_c: variance 2 sigma^2 (u - 1 + e^-u)/u^2,
  // lag-one correlation (1 - e^-u)^2 / (2 (u - 1 + e^-u))
  const double dt = 0.01;
  const auto slow = sample_path(NoiseSpec::ornstein_uhlenbeck(2.0, 0.05, 9), dt, 400000, 0);
  const double u = dt / 0.05;
  const double q = u - 1.0 + std::exp(-u);
  CHECK(sample_variance(slow) == Approx(2.0 * 2.0 * q / (u * u)).epsilon(0.05));
  double c = 0.0, v = 0.0;
  for (std::size_t k = 1; k < slow.size(); ++k) {
    c += slow[k] * slow[k - 1];
    v += slow[k] * slow[k];
  }
  CHECK(c / v == Approx(std::pow(-std::expm1(-u), 2) / (2.0 * q)).epsilon(0.01));

  // fast process: step averages match the white-noise variance 4 gamma/dt
  const double gamma = 0.05;
  const auto fast = sample_path(NoiseSpec::ornstein_uhlenbeck_matched(gamma, 1e-5, 9), dt,
                                100000, 0);
  CHECK(sample_variance(fast) == Approx(4.0 * gamma / dt).epsilon(0.05));

  // u = 1
  const auto mid = sample_path(NoiseSpec::ornstein_uhlenbeck(1.0, dt, 4), dt, 200000, 0);
  CHECK(sample_variance(mid) == Approx(2.0 * std::exp(-1.0)).epsilon(0.05));
}

TEST_CASE("zero path reproduces deterministic evolution") {
  const auto p = CavityParams::from_ratio(0.5, 0.8);
  const double dt = 0.01 / 0.8;
  const int steps = 250;
  const std::vector<double> path(steps, 0.0);
  for (Parity par : {Parity::Even, Parity::Odd}) {
    const auto psi0 = AmplitudeVector::basis(128, 0, par);
    const auto traj = evolve_trajectory(psi0, p, path, dt, {0, 100, steps});
    REQUIRE(traj.size() == 3);
    CHECK((traj[0].values - psi0.values).norm() < 1e-14);
    const auto H = par == Parity::Even ? build_even_hamiltonian(p, 128) : build_odd_hamiltonian(p, 128);
    const auto ref = evolve(psi0, H, steps * dt);
    CHECK((traj[2].values - ref.psi.values).norm() < 1e-9);
    CHECK(traj[2].tau == Approx(p.to_tau(steps * dt)));
  }
  const auto psi = evolve_trajectory(AmplitudeVector::vacuum(128), p, path, dt, {steps})[0];
  CHECK(photon_number(psi) == Approx(vacuum_photon_number(p.to_tau(steps * dt), 0.5)).epsilon(1e-9));
}

TEST_CASE("trajectory preserves the norm under strong noise") {
  const auto p = CavityParams::from_ratio(1.25, 1.0);
  const double dt = 0.01;
  const auto path = sample_path(NoiseSpec::white(0.5, 1), dt, 2000, 0);
  std::vector<int> samples;
  for (int k = 0; k <= 2000; k += 100) samples.push_back(k);
  const auto traj = evolve_trajectory(AmplitudeVector::vacuum(96), p, path, dt, samples);
  for (const auto& s : traj) CHECK(std::abs(s.norm2() - 1.0) < 1e-12);
}

TEST_CASE("trajectory argument checks") {
  const auto p = CavityParams::from_ratio(1.25, 2.0);
  const std::vector<double> path(10, 0.0);
  CHECK_THROWS_AS(evolve_trajectory(AmplitudeVector::vacuum(16), p, path, 0.01, {10}),
                  ValidationError);
  CHECK_NOTHROW(evolve_trajectory(AmplitudeVector::vacuum(16), p, path, 0.005, {10}));
  CHECK_THROWS_AS(evolve_trajectory(AmplitudeVector::vacuum(16), p, path, 0.005, {11}),
                  ValidationError);
  CHECK_THROWS_AS(evolve_trajectory(AmplitudeVector::vacuum(16), p, path, 0.005, {5, 3}),
                  ValidationError);
}

TEST_CASE("Strang splitting is second order") {
  const auto p = CavityParams::from_ratio(1.25, 1.0);
  const double T = 4.0;
  auto run = [&](double dt) {
    const int steps = static_cast<int>(std::lround(T / dt));
    std::vector<double> path(steps);
    // smooth frequency shift sampled at step midpoints
    for (int k = 0; k < steps; ++k) path[k] = 0.8 * std::sin(1.3 * (k + 0.5) * dt);
    return photon_number(
        evolve_trajectory(AmplitudeVector::vacuum(48), p, path, dt, {steps})[0]);
  };
  const double ref = run(0.01 / 32);
  const double e1 = std::abs(run(0.01) - ref);
  const double e2 = std::abs(run(0.005) - ref);
  const double e3 = std::abs(run(0.0025) - ref);
  CHECK(e1 > 1e-9);
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.1));
  CHECK(e2 / e3 == Approx(4.0).epsilon(0.1));
}

TEST_CASE("single noisy trajectory breaks the revival") {
  const double x = 1.25;
  const auto p = CavityParams::from_ratio(x, 1.0);
  const double dt = 0.01;
  const int steps = static_cast<int>(std::lround(p.to_time(revival_times(x, 1)[0]) / dt));
  const std::vector<double> quiet(steps, 0.0);
  const auto clean = evolve_trajectory(AmplitudeVector::vacuum(64), p, quiet, dt, {steps})[0];
  // the step grid misses the revival by under dt/2
  CHECK(photon_number(clean) < 1e-5);
  const auto path = sample_path(NoiseSpec::white(0.02, 11), dt, steps, 0);
  const auto noisy = evolve_trajectory(AmplitudeVector::vacuum(64), p, path, dt, {steps})[0];
  CHECK(photon_number(noisy) > 1e-3);
}

TEST_CASE("pairwise_sum") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (i + 1);
  double naive = 0.0;
  for (double x : v) naive += x;
  CHECK(pairwise_sum(v.data(), v.size()) == Approx(naive).epsilon(1e-14));
  CHECK(pairwise_sum(v.data(), 0) == 0.0);
}

TEST_CASE("noiseless ensemble equals the unitary result") {
  const auto p = CavityParams::from_ratio(0.5, 1.0);
  const auto taus = grid(1.5, 5);
  EnsembleOptions o;
  o.J = 128;
  const auto r = ensemble_average(p, NoiseSpec::white(0.0, 1), 4, 0.01, taus, o);
  for (std::size_t k = 0; k < taus.size(); ++k) {
    CHECK(r.mean[k] == Approx(vacuum_photon_number(r.tau[k], 0.5)).epsilon(1e-9));
    CHECK(r.std_error[k] == 0.0);
  }
  CHECK(r.n_traj == 4);
  CHECK_THROWS_AS(ensemble_average(p, NoiseSpec::white(0.0, 1), 1, 0.01, taus), ValidationError);
  CHECK_THROWS_AS(ensemble_average(p, NoiseSpec::white(0.0, 1), 4, 0.02, taus), ValidationError);
}

TEST_CASE("ensemble is bit-reproducible and thread-independent") {
  const auto p = CavityParams::from_ratio(1.25, 1.0);
  const auto taus = grid(2.0, 8);
  EnsembleOptions o;
  o.J = 32;
  o.leak_tol = 1.0;
  o.threads = 1;
  const auto a = ensemble_average(p, NoiseSpec::white(0.05, 99), 60, 0.01, taus, o);
  o.threads = 3;
  const auto b = ensemble_average(p, NoiseSpec::white(0.05, 99), 60, 0.01, taus, o);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.tau == b.tau);
  o.threads = 1;
  const auto c = ensemble_average(p, NoiseSpec::white(0.05, 100), 60, 0.01, taus, o);
  CHECK(a.mean != c.mean);
}

TEST_CASE("white-noise ensemble matches the master equation on the same space") {
  // J = 16 trajectories and the N = 32 density matrix share one truncated
  // space, so only sampling error remains.
  const auto p = CavityParams::from_ratio(1.25, 1.0, 0.1);
  const auto taus = grid(2.5, 10);
  EnsembleOptions o;
  o.J = 16;
  o.leak_tol = 1.0;
  const auto r = ensemble_average(p, NoiseSpec::white(p.gamma(), 5), 2000, 0.01, taus, o);
  std::vector<double> times;
  for (double t : r.tau) times.push_back(p.to_time(t));
  LindbladOptions lo;
  lo.leak_tol = 1.0;
  const auto dm = evolve_lindblad_sampled(DensityMatrix::vacuum(32), p, times, lo);
  const auto dm2 = evolve_lindblad_sampled(DensityMatrix::vacuum(32), p.with_gamma(2 * p.gamma()),
                                           times, lo);
  int within = 0, far_from_double = 0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (std::abs(r.mean[k] - dm.samples[k].photon_number) <= 3.0 * r.std_error[k]) ++within;
    if (std::abs(r.mean[k] - dm2.samples[k].photon_number) > 3.0 * r.std_error[k]) {
      ++far_from_double;
    }
  }
  CHECK(within >= 9);
  CHECK(far_from_double >= 5);
}

TEST_CASE("Ornstein-Uhlenbeck ensemble approaches the white-noise result") {
  const double gamma = 0.1;
  const auto p = CavityParams::from_ratio(1.25, 1.0, gamma);
  const std::vector<double> taus{2.0};
  EnsembleOptions o;
  o.J = 32;
  o.leak_tol = 1.0;
  const double white = evolve_moments({}, p, taus)[0].n_mean;
  std::vector<double> dev, err;
  for (double tc : {1.0, 0.1, 0.01}) {
    const auto r = ensemble_average(p, NoiseSpec::ornstein_uhlenbeck_matched(gamma, tc, 3), 800,
                                    0.01, taus, o);
    dev.push_back(std::abs(r.mean[0] - white));
    err.push_back(r.std_error[0]);
  }
  CHECK(dev[0] > 3.0 * err[0]);
  CHECK(dev[2] < dev[0]);
  CHECK(dev[2] < 3.0 * err[2] + 0.01);
}
