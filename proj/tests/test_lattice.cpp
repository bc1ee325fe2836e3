#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "dce/closed_form.hpp"
#include "dce/csv.hpp"
#include "dce/errors.hpp"
#include "dce/fock.hpp"
#include "dce/lattice.hpp"
#include "doctest.h"

using namespace dce;
using doctest::Approx;

namespace {

std::vector<double> z_grid(double Z_max, double C1, int n) {
  std::vector<double> z;
  for (int k = 0; k <= n; ++k) z.push_back(Z_max * k / n / (2.0 * C1));
  return z;
}

}  // namespace

TEST_CASE("lattice couplings and conventions") {
  const LatticeSpec spec(0.2, 0.5, 40, LatticeConvention::Paper);
  const auto c = spec.couplings();
  REQUIRE(c.size() == 39);
  CHECK(c[0] == Approx(0.2 * std::sqrt(2.0)));
  for (std::size_t n = 1; n < c.size(); ++n) CHECK(c[n] > c[n - 1]);

  const auto pp = map_lattice_to_cavity(spec);
  CHECK(pp.eps_omega0() == Approx(0.8));
  CHECK(pp.K() == Approx(1.0));
  CHECK(pp.x() == Approx(1.25));

  const LatticeSpec matched(0.2, 0.5, 40, LatticeConvention::Matched);
  CHECK(map_lattice_to_cavity(matched).K() == Approx(0.5));
  CHECK(map_lattice_to_cavity(matched).x() == Approx(0.625));

  for (auto conv : {LatticeConvention::Paper, LatticeConvention::Matched}) {
    CHECK(map_lattice_to_cavity(LatticeSpec(0.2, 0.0, 40, conv)).K() == 0.0);
  }
  CHECK(parse_convention("paper") == LatticeConvention::Paper);
  CHECK(parse_convention("matched") == LatticeConvention::Matched);
  CHECK(to_string(LatticeConvention::Paper) == "paper");
  CHECK_THROWS_AS(parse_convention("Paper"), ValidationError);
  CHECK_THROWS_AS(LatticeSpec(0.0, 0.5, 40, LatticeConvention::Paper), ValidationError);
  CHECK_THROWS_AS(LatticeSpec(0.2, 0.5, 2, LatticeConvention::Paper), ValidationError);
}

TEST_CASE("propagate: input, conservation, edge monitoring") {
  const LatticeSpec spec(0.2, 0.5, 64, LatticeConvention::Paper);
  const auto z = z_grid(8.0, spec.C1, 40);
  const auto f = propagate(spec, 0, z);
  CHECK(f.intensity(0, 0) == 1.0);
  CHECK(f.intensity.row(0).sum() == 1.0);
  for (Eigen::Index k = 0; k < f.intensity.rows(); ++k) {
    CHECK(std::abs(f.intensity.row(k).sum() - 1.0) < 1e-8);
    CHECK(f.Z[k] == Approx(2.0 * spec.C1 * f.z[k]));
  }
  CHECK(f.edge_leakage < 1e-10);
  CHECK(classical_photon_number(f, 0) == 0.0);

  const LatticeSpec tiny(0.26, 0.5, 12, LatticeConvention::Paper);
  CHECK_THROWS_AS(propagate(tiny, 0, z_grid(6.0, 0.26, 10)), TruncationError);
  CHECK_THROWS_AS(propagate(spec, 64, z), ValidationError);
  CHECK_THROWS_AS(propagate(spec, 0, {1.0, 0.5}), ValidationError);
}

TEST_CASE("matched convention reproduces the Fock amplitudes") {
  const double C1 = 0.2;
  const LatticeSpec spec(C1, 0.5, 400, LatticeConvention::Matched);
  const auto z = z_grid(2.0, C1, 30);
  const auto f = propagate(spec, 0, z);
  const auto p = map_lattice_to_cavity(spec);
  const double x = p.x();
  const auto H = build_even_hamiltonian(CavityParams::from_ratio(x, 4.0 * C1), spec.N - 1);
  for (std::size_t k = 0; k < z.size(); k += 5) {
    const auto ref = evolve(AmplitudeVector::vacuum(spec.N - 1), H, z[k]);
    const auto amp = vacuum_amplitudes(f.Z[k], x, spec.N - 1);
    for (int m = 0; m < spec.N; ++m) {
      CHECK(std::abs(f.intensity(k, m) - std::norm(ref.psi.values[m])) < 1e-8);
      CHECK(std::abs(f.intensity(k, m) - std::norm(amp[m])) < 1e-8);
    }
    const double n = classical_photon_number(f, k);
    CHECK(std::abs(n - vacuum_photon_number(f.Z[k], x)) < 1e-7 * (1.0 + n));
    CHECK(std::abs(n - photon_number(ref.psi)) < 1e-7 * (1.0 + n));
  }
}

TEST_CASE("intensity law holds along the propagation") {
  for (double alpha : {0.26, 0.5}) {
    const double C1 = 0.2;
    const LatticeSpec spec(C1, alpha, 500, LatticeConvention::Paper);
    const auto z = z_grid(2.0, C1, 12);
    const auto f = propagate(spec, 0, z);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const auto I = intensity_distribution_table(spec.N - 1, classical_photon_number(f, k));
      for (int m = 0; m < spec.N; ++m) CHECK(std::abs(f.intensity(k, m) - I[m]) < 1e-8);
    }
  }
}

TEST_CASE("insulator revival under the paper convention") {
  const double C1 = 0.2;
  const LatticeSpec spec(C1, 0.5, 64, LatticeConvention::Paper);
  const double Z_rev = std::numbers::pi / std::sqrt(spec.x() * spec.x() - 1.0);
  CHECK(Z_rev == Approx(4.18879).epsilon(1e-5));
  const auto f = propagate(spec, 0, {0.0, 0.5 * Z_rev / (2 * C1), Z_rev / (2 * C1)});
  CHECK(f.intensity(1, 0) < 0.99);
  CHECK(f.intensity(2, 0) >= 0.99);
  CHECK(f.intensity(2, 0) == Approx(1.0).epsilon(1e-8));

  // the matched convention gives x = 0.625: I_0 keeps falling
  const LatticeSpec matched(C1, 0.5, 400, LatticeConvention::Matched);
  const auto g = propagate(matched, 0, z_grid(2.0, C1, 4));
  for (Eigen::Index k = 1; k < g.intensity.rows(); ++k) {
    CHECK(g.intensity(k, 0) < g.intensity(k - 1, 0));
  }
}

TEST_CASE("metal-phase array spreads without revival") {
  const double C1 = 0.26;
  const LatticeSpec spec(C1, 0.5, 2400, LatticeConvention::Paper);
  CHECK(spec.x() < 1.0);
  const auto z = z_grid(6.0, C1, 60);
  const auto f = propagate(spec, 0, z);
  double last_n = -1.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double n = classical_photon_number(f, k);
    CHECK(n > last_n);
    last_n = n;
    if (k > 0) CHECK(f.intensity(k, 0) < f.intensity(k - 1, 0));
  }
}

TEST_CASE("geometry synthesis") {
  const double C1 = 0.2, d1 = 15.0, s = 5.0;
  const LatticeSpec spec(C1, 0.5, 20, LatticeConvention::Paper);
  const auto g = synthesize_geometry(spec, d1, s);
  REQUIRE(g.rows.size() == 19);
  CHECK(g.rows[0].n == 1);
  CHECK(g.rows[0].d == Approx(d1 - s * std::log(std::sqrt(2.0))));
  for (std::size_t i = 1; i < g.rows.size(); ++i) CHECK(g.rows[i].d < g.rows[i - 1].d);
  // ln(c_n/C1) >= d1/s first holds at n = 11
  CHECK(g.first_infeasible == 11);
  for (const auto& r : g.rows) CHECK(r.feasible == (r.n < 11));
  CHECK(g.feasible_count() == 10);

  // inversion of the law: c = C1 gives d1, c = e C1 gives d1 - s
  const auto c = couplings_from_separations(C1, d1, s, {d1, d1 - s});
  CHECK(c[0] == Approx(C1));
  CHECK(c[1] == Approx(std::exp(1.0) * C1));

  std::vector<double> d;
  for (const auto& r : g.rows) d.push_back(r.d);
  const auto back = couplings_from_separations(C1, d1, s, d);
  const auto ref = spec.couplings();
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(back[i] / ref[i] - 1.0) < 1e-12);

  const auto floor = synthesize_geometry(spec, d1, s, 5.0);
  CHECK(floor.first_infeasible < 11);
  CHECK_THROWS_AS(synthesize_geometry(spec, 0.1, s), DesignError);
  CHECK_THROWS_AS(synthesize_geometry(spec, -1.0, s), ValidationError);
  CHECK_THROWS_AS(synthesize_geometry(spec, d1, 0.0), ValidationError);
}

TEST_CASE("geometry export format") {
  const LatticeSpec spec(0.2, 0.5, 5, LatticeConvention::Matched);
  const auto g = synthesize_geometry(spec, 15.0, 5.0);
  std::ostringstream out;
  write_geometry(out, spec, g);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# ", 0) == 0);
  CHECK(line.find("C1=0.2") != std::string::npos);
  CHECK(line.find("convention=matched") != std::string::npos);
  CHECK(line.find("d1=15") != std::string::npos);
  std::getline(in, line);
  CHECK(line == "n,c_n,d_n,feasible");
  std::getline(in, line);
  CHECK(line == "1," + format_number(0.2 * std::sqrt(2.0)) + "," +
                    format_number(15.0 - 5.0 * std::log(std::sqrt(2.0))) + ",1");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(123456789012.0) == "1.23456789e+11");
  CHECK(format_number(-2.5, 3) == "-2.5");
  CHECK_THROWS_AS(format_number(1.0, 0), ValidationError);
}
