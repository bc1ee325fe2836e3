#include "dce/lattice.hpp"

#include <cmath>
#include <sstream>

#include "dce/csv.hpp"
#include "dce/errors.hpp"
#include "dce/fock.hpp"

namespace dce {

std::string_view to_string(LatticeConvention c) noexcept {
  return c == LatticeConvention::Paper ? "paper" : "matched";
}

LatticeConvention parse_convention(std::string_view s) {
  if (s == "paper") return LatticeConvention::Paper;
  if (s == "matched") return LatticeConvention::Matched;
  throw ValidationError("convention must be 'paper' or 'matched'");
}

LatticeSpec::LatticeSpec(double C1_, double alpha_, int N_, LatticeConvention convention_)
    : C1(C1_), alpha(alpha_), N(N_), convention(convention_) {
  if (!(std::isfinite(C1) && C1 > 0.0)) throw ValidationError("C1 must be > 0");
  if (!std::isfinite(alpha)) throw ValidationError("alpha must be finite");
  if (N < 3) throw ValidationError("lattice needs at least 3 sites");
}

std::vector<double> LatticeSpec::couplings() const {
  std::vector<double> c(static_cast<std::size_t>(N - 1));
  for (int n = 1; n < N; ++n) c[n - 1] = C1 * std::sqrt(2.0 * n * (2.0 * n - 1.0));
  return c;
}

double LatticeSpec::ramp() const noexcept {
  return convention == LatticeConvention::Paper ? 2.0 * alpha : alpha;
}

CavityParams map_lattice_to_cavity(const LatticeSpec& spec) {
  return CavityParams(4.0 * spec.C1, 1.0, spec.ramp());
}

FieldMap propagate(const LatticeSpec& spec, const Eigen::VectorXcd& input,
                   const std::vector<double>& z_grid, double leak_tol) {
  if (input.size() != spec.N) throw ValidationError("input profile must have N entries");
  if (std::abs(input.squaredNorm() - 1.0) > 1e-9) throw ValidationError("input must be normalized");
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    if (!(z_grid[k] >= 0.0) || (k > 0 && z_grid[k] < z_grid[k - 1])) {
      throw ValidationError("z grid must be increasing and >= 0");
    }
  }
  // The array equations are the even Fock block with z as time.
  const CavityParams p = map_lattice_to_cavity(spec);
  const ParityHamiltonian H = build_even_hamiltonian(p, spec.N - 1);
  AmplitudeVector psi0;
  psi0.values = input;
  EvolveOptions opts;
  opts.leak_tol = leak_tol;
  std::vector<EvolveResult> res;
  try {
    res = evolve_sampled(psi0, H, z_grid, opts);
  } catch (const TruncationError& e) {
    std::ostringstream msg;
    msg << "array too small: edge population " << e.leakage() << " > " << leak_tol << " with "
        << spec.N << " sites";
    throw TruncationError(msg.str(), e.leakage());
  }
  FieldMap f;
  f.z = z_grid;
  f.intensity.resize(static_cast<Eigen::Index>(z_grid.size()), spec.N);
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    f.Z.push_back(2.0 * spec.C1 * z_grid[k]);
    f.intensity.row(static_cast<Eigen::Index>(k)) = res[k].psi.values.cwiseAbs2().transpose();
    f.edge_leakage = std::max(f.edge_leakage, res[k].leakage);
  }
  return f;
}

FieldMap propagate(const LatticeSpec& spec, int input_site, const std::vector<double>& z_grid,
                   double leak_tol) {
  if (input_site < 0 || input_site >= spec.N) throw ValidationError("input site out of range");
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(spec.N);
  in[input_site] = 1.0;
  return propagate(spec, in, z_grid, leak_tol);
}

double classical_photon_number(const FieldMap& f, std::size_t k) {
  if (k >= f.z.size()) throw ValidationError("row index out of range");
  double s = 0.0;
  for (Eigen::Index m = 0; m < f.intensity.cols(); ++m) {
    s += static_cast<double>(m) * f.intensity(static_cast<Eigen::Index>(k), m);
  }
  return 2.0 * s;
}

int Geometry::feasible_count() const {
  int c = 0;
  for (const auto& r : rows) c += r.feasible ? 1 : 0;
  return c;
}

Geometry synthesize_geometry(const LatticeSpec& spec, double d1, double s, double d_min) {
  if (!(std::isfinite(d1) && d1 > 0.0)) throw ValidationError("d1 must be > 0");
  if (!(std::isfinite(s) && s > 0.0)) throw ValidationError("s must be > 0");
  if (!std::isfinite(d_min)) throw ValidationError("d_min must be finite");
  Geometry g;
  g.d1 = d1;
  g.s = s;
  g.d_min = d_min;
  const auto c = spec.couplings();
  for (int n = 1; n < spec.N; ++n) {
    GeometryRow r;
    r.n = n;
    r.c = c[n - 1];
    r.d = d1 - s * std::log(r.c / spec.C1);
    r.feasible = r.d > d_min;
    if (!r.feasible && g.first_infeasible == 0) g.first_infeasible = n;
    g.rows.push_back(r);
  }
  if (g.feasible_count() == 0) throw DesignError("no gap separation exceeds the fabrication floor");
  return g;
}

std::vector<double> couplings_from_separations(double C1, double d1, double s,
                                               const std::vector<double>& d) {
  if (!(s > 0.0)) throw ValidationError("s must be > 0");
  std::vector<double> c;
  c.reserve(d.size());
  for (double dn : d) c.push_back(C1 * std::exp(-(dn - d1) / s));
  return c;
}

void write_geometry(std::ostream& out, const LatticeSpec& spec, const Geometry& g,
                    int precision) {
  CsvWriter w(out, precision);
  w.metadata({{"C1", format_number(spec.C1, precision)},
              {"alpha", format_number(spec.alpha, precision)},
              {"d1", format_number(g.d1, precision)},
              {"s", format_number(g.s, precision)},
              {"d_min", format_number(g.d_min, precision)},
              {"convention", std::string(to_string(spec.convention))}});
  w.header({"n", "c_n", "d_n", "feasible"});
  for (const auto& r : g.rows) {
    w << r.n << r.c << r.d << (r.feasible ? 1 : 0);
    w.end_row();
  }
}

}  // namespace dce
