#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dce/cli.hpp"
#include "dce/closed_form.hpp"
#include "doctest.h"

using namespace dce;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dce");
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Data rows as split fields; skips the metadata and header lines.
std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::vector<std::string>> table;
  int seen = 0;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (seen++ == 0) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    table.push_back(f);
  }
  return table;
}

std::string header_line(const std::string& csv, int index) {
  std::istringstream in(csv);
  std::string line;
  for (int i = 0; i <= index; ++i) std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("cli sweep") {
  const auto r = run({"sweep", "--x-min", "0", "--x-max", "2", "--x-steps", "4", "--tau-max", "3",
                      "--tau-steps", "3"});
  REQUIRE(r.code == kExitOk);
  CHECK(header_line(r.out, 0).find("command=sweep") != std::string::npos);
  CHECK(header_line(r.out, 0).find("version=") != std::string::npos);
  CHECK(header_line(r.out, 1) == "x,tau,n_mean,log10_n_mean,regime");
  const auto t = rows(r.out);
  REQUIRE(t.size() == 20);
  for (const auto& row : t) {
    const double x = std::stod(row[0]), tau = std::stod(row[1]), n = std::stod(row[2]);
    if (tau == 0.0) {
      CHECK(n == 0.0);
      CHECK(row[3] == "-inf");
    }
    CHECK(std::abs(n - vacuum_photon_number(tau, x)) <= 1e-8 * (1.0 + n));
    if (x == 1.0) CHECK(row[4] == "Threshold");
    if (x < 1.0) CHECK(row[4] == "Metal");
    if (x > 1.0) CHECK(row[4] == "Insulator");
  }
}

TEST_CASE("cli evolve: fock agrees with closed form") {
  const std::vector<std::string> base{"evolve", "--x", "1.25", "--tau-max", "4", "--steps", "8",
                                      "--precision", "15"};
  auto closed = base, fock = base;
  closed.insert(closed.end(), {"--engine", "closed"});
  fock.insert(fock.end(), {"--engine", "fock"});
  const auto a = run(closed), b = run(fock);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(header_line(b.out, 1) == "tau,n_mean,leakage");
  const auto ta = rows(a.out), tb = rows(b.out);
  REQUIRE(ta.size() == 9);
  REQUIRE(tb.size() == 9);
  for (std::size_t k = 0; k < ta.size(); ++k) {
    const double na = std::stod(ta[k][1]), nb = std::stod(tb[k][1]);
    CHECK(std::abs(na - nb) <= 1e-8 * std::max(1.0, na));
  }

  const auto m = run({"evolve", "--x", "0.5", "--tau-max", "1", "--steps", "2", "--engine",
                      "moments", "--nbar", "1", "--precision", "15"});
  REQUIRE(m.code == 0);
  const auto tm = rows(m.out);
  CHECK(std::abs(std::stod(tm[2][1]) - thermal_photon_number(1.0, 1.0, 0.5)) < 1e-8);
}

TEST_CASE("cli exit codes") {
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"nope"}).code == kExitValidation);
  CHECK(run({"sweep", "--x-steps", "abc"}).code == kExitValidation);
  CHECK(run({"sweep", "--x-min", "2", "--x-max", "1"}).code == kExitValidation);
  CHECK(run({"evolve", "--gamma", "0.1", "--gamma-scaled", "0.1", "--engine", "moments"}).code ==
        kExitValidation);
  CHECK(run({"evolve", "--gamma", "0.1"}).code == kExitValidation);
  CHECK(run({"evolve", "--gamma", "-1", "--engine", "moments"}).code == kExitValidation);
  CHECK(run({"evolve", "--engine", "fock", "--nbar", "1"}).code == kExitValidation);
  CHECK(run({"evolve", "--eps-omega0", "0"}).code == kExitValidation);
  CHECK(run({"evolve", "--engine", "fock", "--leak-tol", "0"}).code == kExitValidation);
  CHECK(run({"dephase", "--x", "0.8"}).code == kExitValidation);
  CHECK(run({"dephase", "--x", "1.0"}).code == kExitValidation);
  CHECK(run({"propagate", "--c1", "0.2"}).code == kExitValidation);  // convention required
  CHECK(run({"propagate", "--convention", "Paper"}).code == kExitValidation);
  CHECK(run({"design", "--convention", "paper", "--d1", "0.1"}).code == kExitValidation);
  CHECK(run({"sweep", "--out", "/nonexistent-dir/out.csv"}).code == kExitValidation);
  CHECK(run({"--help"}).code == kExitOk);

  // too few sites for the requested length: truncation is a numerical failure
  const auto r = run({"propagate", "--convention", "paper", "--c1", "0.26", "--sites", "12",
                      "--z-max", "11.5"});
  CHECK(r.code == kExitNumerical);
  CHECK(!r.err.empty());
}

TEST_CASE("cli output file and metadata echo") {
  const auto path = std::filesystem::temp_directory_path() / "dce_cli_test.csv";
  const auto r = run({"evolve", "--x", "0.5", "--gamma-scaled", "0.1", "--engine", "moments",
                      "--steps", "4", "--out", path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first.find("gamma-scaled=0.1") != std::string::npos);
  CHECK(first.find("engine=moments") != std::string::npos);
  CHECK(first.find("eps-omega0=1") != std::string::npos);
  CHECK(first.find(" gamma=") == std::string::npos);
  in.close();
  std::filesystem::remove(path);
}

TEST_CASE("cli propagate and design") {
  const auto z0 = run({"propagate", "--convention", "matched", "--sites", "5", "--z-max", "0",
                       "--z-steps", "0"});
  REQUIRE(z0.code == 0);
  CHECK(header_line(z0.out, 0).find("convention=matched") != std::string::npos);
  const auto t = rows(z0.out);
  REQUIRE(t.size() == 5);
  CHECK(t[0][3] == "1");
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i][3] == "0");

  const auto d = run({"design", "--convention", "paper", "--c1", "0.2", "--alpha", "0.5",
                      "--sites", "20", "--d1", "15", "--s", "5"});
  REQUIRE(d.code == 0);
  CHECK(header_line(d.out, 1) == "n,c_n,d_n,feasible");
  const auto g = rows(d.out);
  REQUIRE(g.size() == 19);
  CHECK(g[9][3] == "1");
  CHECK(g[10][3] == "0");
}

TEST_CASE("cli trajectories are reproducible") {
  const std::vector<std::string> args{"trajectories", "--x", "1.25", "--gamma-scaled", "0.04",
                                      "--traj", "16", "--seed", "7", "--tau-steps", "4",
                                      "--nmax", "128", "--precision", "17"};
  auto one = args, many = args;
  one.insert(one.end(), {"--threads", "1"});
  many.insert(many.end(), {"--threads", "3"});
  const auto a = run(one), b = run(many);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(rows(a.out) == rows(b.out));
  const auto t = rows(a.out);
  REQUIRE(t.size() == 4);
  CHECK(header_line(a.out, 1) == "tau,mean,stderr,n_traj,seed");
  CHECK(t[0][3] == "16");
  CHECK(t[0][4] == "7");

  auto ou = args;
  ou.insert(ou.end(), {"--noise", "ou", "--tauc", "0.05"});
  CHECK(run(ou).code == 0);
}
