#pragma once

// Semi-infinite waveguide array i dE_n/dz = -c_n E_{n-1} - c_{n+1} E_{n+1} - r n E_n
// with c_n = C1 sqrt(2n(2n-1)). Site n corresponds to the Fock level 2n.

#include <Eigen/Core>
#include <ostream>
#include <string_view>
#include <vector>

#include "dce/params.hpp"

namespace dce {

/// How the ramp constant alpha maps to the detuning K.
///   Paper:   K = 2 alpha, x = alpha/(2 C1); the simulated ramp is 2 alpha per site.
///   Matched: K = alpha, the ramp alpha n enters the coupled-mode equations as written.
enum class LatticeConvention { Paper, Matched };

std::string_view to_string(LatticeConvention c) noexcept;
/// Parses "paper" or "matched"; throws ValidationError otherwise.
LatticeConvention parse_convention(std::string_view s);

struct LatticeSpec {
  double C1 = 0.0;     // coupling scale [1/length]
  double alpha = 0.0;  // ramp constant [1/length]
  int N = 0;           // sites 0..N-1
  LatticeConvention convention = LatticeConvention::Matched;

  LatticeSpec(double C1, double alpha, int N, LatticeConvention convention);

  /// c_n for n = 1..N-1 (element n-1 couples sites n-1 and n).
  std::vector<double> couplings() const;
  /// Site energy slope used in the simulation.
  double ramp() const noexcept;
  double x() const noexcept { return ramp() / (4.0 * C1); }
};

struct FieldMap {
  std::vector<double> z;
  std::vector<double> Z;  // 2 C1 z
  Eigen::MatrixXd intensity;  // row per z, column per site
  double edge_leakage = 0.0;  // worst top-10% population over the grid
};

/// Propagates an input profile (normalized, length N) over increasing z >= 0.
/// Throws TruncationError ("array too small") when the top 10% of sites
/// hold more than leak_tol.
FieldMap propagate(const LatticeSpec& spec, const Eigen::VectorXcd& input,
                   const std::vector<double>& z_grid, double leak_tol = 1e-10);
/// Single-site input.
FieldMap propagate(const LatticeSpec& spec, int input_site, const std::vector<double>& z_grid,
                   double leak_tol = 1e-10);

/// 2 sum_m m I_m at row k of the map.
double classical_photon_number(const FieldMap& f, std::size_t k);

/// eps*omega0 = 4 C1 (omega0 = 1) and K by convention; x = K/(4 C1).
CavityParams map_lattice_to_cavity(const LatticeSpec& spec);

struct GeometryRow {
  int n = 0;           // gap between sites n-1 and n
  double c = 0.0;      // coupling
  double d = 0.0;      // separation
  bool feasible = true;
};

struct Geometry {
  std::vector<GeometryRow> rows;
  double d1 = 0.0;
  double s = 0.0;
  double d_min = 0.0;
  /// First n with d_n <= d_min, or 0 if every gap is feasible.
  int first_infeasible = 0;
  int feasible_count() const;
};

/// d_n = d1 - s ln(c_n/C1) for n = 1..N-1, flagging d_n <= d_min. Throws
/// ValidationError for d1 <= 0 or s <= 0 and DesignError when no gap is
/// feasible.
Geometry synthesize_geometry(const LatticeSpec& spec, double d1, double s, double d_min = 0.0);

/// C_n = C1 exp(-(d_n - d1)/s).
std::vector<double> couplings_from_separations(double C1, double d1, double s,
                                               const std::vector<double>& d);

/// '#' metadata line (C1, alpha, d1, s, d_min, convention) then rows
/// n,c_n,d_n,feasible.
void write_geometry(std::ostream& out, const LatticeSpec& spec, const Geometry& g,
                    int precision = 9);

}  // namespace dce
