#include "dce/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>

#include "dce/closed_form.hpp"
#include "dce/csv.hpp"
#include "dce/errors.hpp"
#include "dce/fock.hpp"
#include "dce/lattice.hpp"
#include "dce/open_system.hpp"
#include "dce/params.hpp"
#include "dce/stochastic.hpp"

namespace dce {

namespace {

using Metadata = std::vector<std::pair<std::string, std::string>>;

// Echo of every option of a subcommand, parsed or defaulted.
Metadata echo_options(const CLI::App& sub) {
  Metadata m{{"command", sub.get_name()}};
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "h") continue;
    if (!opt->get_excludes().empty() && opt->count() == 0) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty()) m.emplace_back(name, value);
  }
  return m;
}

std::vector<double> linspace(double lo, double hi, int intervals) {
  std::vector<double> v;
  for (int k = 0; k <= intervals; ++k) {
    v.push_back(intervals == 0 ? lo : lo + (hi - lo) * k / intervals);
  }
  return v;
}

struct Output {
  std::ostream* stream = nullptr;
  std::unique_ptr<std::ofstream> file;
};

// Opens --out before any computation so a bad path fails early.
Output open_output(const std::string& path, std::ostream& fallback) {
  Output o;
  if (path.empty() || path == "-") {
    o.stream = &fallback;
    return o;
  }
  o.file = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*o.file) throw ValidationError("cannot open output file '" + path + "'");
  o.stream = o.file.get();
  return o;
}

struct Common {
  int precision = 9;
  std::string out;
};

struct GammaFlags {
  CLI::Option* raw = nullptr;
  CLI::Option* scaled = nullptr;
  double gamma = 0.0;
  double gamma_scaled = 0.0;

  void add(CLI::App* sub) {
    raw = sub->add_option("--gamma", gamma, "dephasing rate gamma [rad/time]")
              ->check(CLI::NonNegativeNumber);
    scaled = sub->add_option("--gamma-scaled", gamma_scaled, "scaled dephasing 2 gamma/(eps omega0)")
                 ->check(CLI::NonNegativeNumber);
    raw->excludes(scaled);
  }

  double resolve(double eps_omega0) const {
    return scaled->count() > 0 ? 0.5 * gamma_scaled * eps_omega0 : gamma;
  }
};

// ---------------------------------------------------------------------------

struct SweepArgs {
  double x_min = 0.0, x_max = 2.0, tau_max = 5.0;
  int x_steps = 20, tau_steps = 50;
};

void run_sweep(const SweepArgs& a, const Common& c, const Metadata& meta, std::ostream& fallback) {
  if (!(a.x_max >= a.x_min)) throw ValidationError("--x-max must be >= --x-min");
  Output o = open_output(c.out, fallback);
  std::ostringstream buf;
  CsvWriter w(buf, c.precision);
  w.metadata(meta);
  w.header({"x", "tau", "n_mean", "log10_n_mean", "regime"});
  for (double x : linspace(a.x_min, a.x_max, a.x_steps)) {
    const std::string regime(to_string(classify_regime(x)));
    for (double tau : linspace(0.0, a.tau_max, a.tau_steps)) {
      const double n = vacuum_photon_number(tau, x);
      w << x << tau << n << std::log10(n) << regime;
      w.end_row();
    }
  }
  *o.stream << buf.str();
}

// ---------------------------------------------------------------------------

struct EvolveArgs {
  double x = 0.0, tau_max = 3.0, eps_omega0 = 1.0, nbar = 0.0, leak_tol = 1e-10;
  int steps = 60, nmax = 0;
  std::string engine = "closed";
  GammaFlags gamma;
};

void run_evolve(const EvolveArgs& a, const Common& c, const Metadata& meta,
                std::ostream& fallback) {
  const double gamma = a.gamma.resolve(a.eps_omega0);
  const bool lindblad = a.engine == "lindblad", moments = a.engine == "moments";
  if (gamma > 0.0 && !lindblad && !moments) {
    throw ValidationError("gamma > 0 requires --engine lindblad or moments");
  }
  if (a.nbar > 0.0 && a.engine == "fock") {
    throw ValidationError("--nbar requires --engine closed, lindblad or moments");
  }
  if (a.nmax != 0 && (a.engine == "closed" || moments)) {
    throw ValidationError("--nmax applies only to the fock and lindblad engines");
  }
  const CavityParams p = CavityParams::from_ratio(a.x, a.eps_omega0, gamma, a.nbar);
  const std::vector<double> taus = linspace(0.0, a.tau_max, a.steps);
  std::vector<double> times;
  for (double t : taus) times.push_back(p.to_time(t));
  Output o = open_output(c.out, fallback);

  std::vector<double> n(taus.size()), leak;
  if (a.engine == "closed") {
    for (std::size_t k = 0; k < taus.size(); ++k) n[k] = thermal_photon_number(a.nbar, taus[k], a.x);
  } else if (moments) {
    const auto traj = evolve_moments(MomentState{a.nbar, {0.0, 0.0}, 0.0}, p, taus);
    for (std::size_t k = 0; k < taus.size(); ++k) n[k] = traj[k].n_mean;
  } else if (a.engine == "fock") {
    EvolveOptions eo;
    eo.leak_tol = a.leak_tol;
    const int J = a.nmax > 0 ? a.nmax : auto_truncate(p, a.tau_max, a.leak_tol);
    const auto res =
        evolve_sampled(AmplitudeVector::vacuum(J), build_even_hamiltonian(p, J), times, eo);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      n[k] = photon_number(res[k].psi);
      leak.push_back(res[k].leakage);
    }
  } else {
    const double nbar = a.nbar;
    const StateFactory make = [nbar](int N) {
      return nbar > 0.0 ? thermal_state(nbar, N) : DensityMatrix::vacuum(N);
    };
    LindbladOptions lo;
    lo.leak_tol = a.leak_tol;
    LindbladRun run;
    if (a.nmax > 0) {
      run = evolve_lindblad_sampled(make(a.nmax), p, times, lo);
    } else {
      run = evolve_lindblad_auto(make, p, times, lo).run;
    }
    for (std::size_t k = 0; k < taus.size(); ++k) {
      n[k] = run.samples[k].photon_number;
      leak.push_back(run.samples[k].leakage);
    }
  }

  std::ostringstream buf;
  CsvWriter w(buf, c.precision);
  w.metadata(meta);
  if (leak.empty()) {
    w.header({"tau", "n_mean"});
  } else {
    w.header({"tau", "n_mean", "leakage"});
  }
  for (std::size_t k = 0; k < taus.size(); ++k) {
    w << taus[k] << n[k];
    if (!leak.empty()) w << leak[k];
    w.end_row();
  }
  *o.stream << buf.str();
}

// ---------------------------------------------------------------------------

struct PropagateArgs {
  double c1 = 0.2, alpha = 0.5, z_max = 20.0;
  int z_steps = 100, sites = 200, input = 0;
  std::string convention;
};

void run_propagate(const PropagateArgs& a, const Common& c, const Metadata& meta,
                   std::ostream& fallback) {
  const LatticeSpec spec(a.c1, a.alpha, a.sites, parse_convention(a.convention));
  Output o = open_output(c.out, fallback);
  const FieldMap f = propagate(spec, a.input, linspace(0.0, a.z_max, a.z_steps));
  std::ostringstream buf;
  CsvWriter w(buf, c.precision);
  Metadata m = meta;
  m.emplace_back("x", format_number(spec.x(), c.precision));
  w.metadata(m);
  w.header({"z", "Z", "site", "intensity"});
  for (std::size_t k = 0; k < f.z.size(); ++k) {
    for (int s = 0; s < spec.N; ++s) {
      w << f.z[k] << f.Z[k] << s << f.intensity(static_cast<Eigen::Index>(k), s);
      w.end_row();
    }
  }
  *o.stream << buf.str();
}

// ---------------------------------------------------------------------------

struct DephaseArgs {
  double x = 1.25, g_min = 0.0, g_max = 0.2;
  int g_steps = 20, revivals = 3;
};

void run_dephase(const DephaseArgs& a, const Common& c, const Metadata& meta,
                 std::ostream& fallback) {
  if (!(a.x > 1.0)) throw ValidationError("dephase requires x > 1 (insulator phase)");
  if (!(a.g_max >= a.g_min)) throw ValidationError("--gamma-scaled-max must be >= min");
  const auto rev = revival_times(a.x, a.revivals);
  Output o = open_output(c.out, fallback);
  const auto rows = enhancement_curve(linspace(a.g_min, a.g_max, a.g_steps), a.x, rev);
  std::ostringstream buf;
  CsvWriter w(buf, c.precision);
  w.metadata(meta);
  w.header({"gamma_scaled", "revival_index", "tau", "n_mean"});
  for (const auto& r : rows) {
    w << r.gamma_scaled << r.tau_index << r.tau << r.n_mean;
    w.end_row();
  }
  *o.stream << buf.str();
}

// ---------------------------------------------------------------------------

struct TrajectoryArgs {
  double x = 1.25, tauc = 1.0, dt = 0.0, tau_max = 4.18879020478639, eps_omega0 = 1.0;
  int traj = 1000, tau_steps = 50, nmax = 0;
  unsigned threads = 0;
  std::uint64_t seed = 1;
  std::string noise = "white";
  GammaFlags gamma;
};

void run_trajectories(const TrajectoryArgs& a, const Common& c, const Metadata& meta,
                      std::ostream& fallback) {
  const double gamma = a.gamma.resolve(a.eps_omega0);
  const CavityParams p = CavityParams::from_ratio(a.x, a.eps_omega0, gamma);
  const double dt = a.dt > 0.0 ? a.dt : 0.01 / a.eps_omega0;
  const NoiseSpec spec = a.noise == "white"
                             ? NoiseSpec::white(gamma, a.seed)
                             : NoiseSpec::ornstein_uhlenbeck_matched(gamma, a.tauc, a.seed);
  std::vector<double> grid = linspace(0.0, a.tau_max, a.tau_steps);
  grid.erase(grid.begin());
  EnsembleOptions opts;
  opts.J = a.nmax;
  opts.threads = a.threads;
  Output o = open_output(c.out, fallback);
  const EnsembleResult r = ensemble_average(p, spec, a.traj, dt, grid, opts);
  std::ostringstream buf;
  CsvWriter w(buf, c.precision);
  Metadata m = meta;
  m.emplace_back("J", std::to_string(r.J));
  m.emplace_back("ensemble_leakage", format_number(r.leakage, c.precision));
  w.metadata(m);
  w.header({"tau", "mean", "stderr", "n_traj", "seed"});
  for (std::size_t k = 0; k < r.tau.size(); ++k) {
    w << r.tau[k] << r.mean[k] << r.std_error[k] << r.n_traj << std::to_string(r.seed);
    w.end_row();
  }
  *o.stream << buf.str();
}

// ---------------------------------------------------------------------------

struct DesignArgs {
  double c1 = 0.2, alpha = 0.5, d1 = 15.0, s = 5.0, dmin = 0.0;
  int sites = 20;
  std::string convention;
};

void run_design(const DesignArgs& a, const Common& c, std::ostream& fallback) {
  const LatticeSpec spec(a.c1, a.alpha, a.sites, parse_convention(a.convention));
  const Geometry g = synthesize_geometry(spec, a.d1, a.s, a.dmin);
  Output o = open_output(c.out, fallback);
  std::ostringstream buf;
  write_geometry(buf, spec, g, c.precision);
  *o.stream << buf.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamical Casimir photon production: closed form, Fock, open-system, "
               "stochastic and waveguide-lattice engines"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--precision", common.precision, "significant digits in CSV output")
      ->check(CLI::Range(1, 17));

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out,-o", common.out, "output CSV path ('-' for stdout)");
  };

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "closed-form photon number over an (x, tau) grid");
  sweep->add_option("--x-min", sw.x_min);
  sweep->add_option("--x-max", sw.x_max);
  sweep->add_option("--x-steps", sw.x_steps, "intervals in x")->check(CLI::NonNegativeNumber);
  sweep->add_option("--tau-max", sw.tau_max)->check(CLI::NonNegativeNumber);
  sweep->add_option("--tau-steps", sw.tau_steps, "intervals in tau")->check(CLI::NonNegativeNumber);
  add_out(sweep);

  EvolveArgs ev;
  auto* evolve_cmd = app.add_subcommand("evolve", "photon number versus tau from one engine");
  evolve_cmd->add_option("--x", ev.x, "detuning ratio K/(eps omega0)");
  evolve_cmd->add_option("--tau-max", ev.tau_max)->check(CLI::NonNegativeNumber);
  evolve_cmd->add_option("--steps", ev.steps, "intervals in tau")->check(CLI::PositiveNumber);
  evolve_cmd->add_option("--engine", ev.engine)
      ->check(CLI::IsMember({"closed", "fock", "lindblad", "moments"}));
  evolve_cmd->add_option("--eps-omega0", ev.eps_omega0)->check(CLI::PositiveNumber);
  ev.gamma.add(evolve_cmd);
  evolve_cmd->add_option("--nbar", ev.nbar, "initial thermal occupation")
      ->check(CLI::NonNegativeNumber);
  evolve_cmd->add_option("--nmax", ev.nmax, "truncation (J for fock, N for lindblad; 0 = auto)")
      ->check(CLI::NonNegativeNumber);
  evolve_cmd->add_option("--leak-tol", ev.leak_tol, "bound on top-10% population (fock, lindblad)")
      ->check(CLI::Range(1e-16, 1.0));
  add_out(evolve_cmd);

  PropagateArgs pr;
  auto* prop = app.add_subcommand("propagate", "waveguide-array intensities I_m(z)");
  prop->add_option("--c1", pr.c1, "coupling scale C1")->check(CLI::PositiveNumber);
  prop->add_option("--alpha", pr.alpha, "ramp constant alpha");
  prop->add_option("--convention", pr.convention, "alpha to K mapping")
      ->required()
      ->check(CLI::IsMember({"paper", "matched"}));
  prop->add_option("--z-max", pr.z_max)->check(CLI::NonNegativeNumber);
  prop->add_option("--z-steps", pr.z_steps, "intervals in z")->check(CLI::NonNegativeNumber);
  prop->add_option("--sites", pr.sites)->check(CLI::PositiveNumber);
  prop->add_option("--input", pr.input, "input site")->check(CLI::NonNegativeNumber);
  add_out(prop);

  DephaseArgs dp;
  auto* deph = app.add_subcommand("dephase", "photon number at revivals versus dephasing");
  deph->add_option("--x", dp.x);
  deph->add_option("--gamma-scaled-min", dp.g_min)->check(CLI::NonNegativeNumber);
  deph->add_option("--gamma-scaled-max", dp.g_max)->check(CLI::NonNegativeNumber);
  deph->add_option("--gamma-scaled-steps", dp.g_steps, "intervals")->check(CLI::NonNegativeNumber);
  deph->add_option("--revivals", dp.revivals)->check(CLI::PositiveNumber);
  add_out(deph);

  TrajectoryArgs tr;
  auto* traj = app.add_subcommand("trajectories", "noise-averaged photon number");
  traj->add_option("--x", tr.x);
  tr.gamma.add(traj);
  traj->add_option("--noise", tr.noise)->check(CLI::IsMember({"white", "ou"}));
  traj->add_option("--tauc", tr.tauc, "OU correlation time")->check(CLI::PositiveNumber);
  traj->add_option("--traj", tr.traj, "trajectory count")->check(CLI::Range(2, 100000000));
  traj->add_option("--seed", tr.seed);
  traj->add_option("--dt", tr.dt, "time step (0 = 0.01/(eps omega0))")
      ->check(CLI::NonNegativeNumber);
  traj->add_option("--tau-max", tr.tau_max)->check(CLI::PositiveNumber);
  traj->add_option("--tau-steps", tr.tau_steps, "grid points")->check(CLI::PositiveNumber);
  traj->add_option("--eps-omega0", tr.eps_omega0)->check(CLI::PositiveNumber);
  traj->add_option("--nmax", tr.nmax, "even-block truncation J (0 = auto)")
      ->check(CLI::NonNegativeNumber);
  traj->add_option("--threads", tr.threads, "worker threads (0 = all cores)");
  add_out(traj);

  DesignArgs ds;
  auto* design = app.add_subcommand("design", "waveguide separations from the coupling law");
  design->add_option("--c1", ds.c1)->check(CLI::PositiveNumber);
  design->add_option("--alpha", ds.alpha);
  design->add_option("--sites", ds.sites)->check(CLI::PositiveNumber);
  design->add_option("--d1", ds.d1, "first separation")->check(CLI::PositiveNumber);
  design->add_option("--s", ds.s, "coupling decay length")->check(CLI::PositiveNumber);
  design->add_option("--dmin", ds.dmin, "fabrication floor");
  design->add_option("--convention", ds.convention)
      ->required()
      ->check(CLI::IsMember({"paper", "matched"}));
  add_out(design);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Metadata meta = echo_options(*sub);
    meta.emplace_back("precision", std::to_string(common.precision));
    if (sub == sweep) {
      run_sweep(sw, common, meta, out);
    } else if (sub == evolve_cmd) {
      run_evolve(ev, common, meta, out);
    } else if (sub == prop) {
      run_propagate(pr, common, meta, out);
    } else if (sub == deph) {
      run_dephase(dp, common, meta, out);
    } else if (sub == traj) {
      run_trajectories(tr, common, meta, out);
    } else {
      run_design(ds, common, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DesignError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace dce
