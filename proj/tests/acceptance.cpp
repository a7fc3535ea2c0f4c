// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qsub/cli.hpp"
#include "qsub/qsub.hpp"

using namespace qsub;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

sdp::SolverConfig tight() {
  sdp::SolverConfig c;
  c.gap_tol = 1e-10;
  return c;
}

struct Solved {
  CovariantSdp cov;
  sdp::Solution sol;
};

Solved solve(const ObjectiveTable& t, double p) {
  Solved s{assemble(t, p), {}};
  s.sol = sdp::solve(s.cov.problem, tight());
  return s;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

Outcome closed_form_21() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto table = build_objective(2, 1);
  auto grid = uniform_grid(101);
  grid.push_back(kF21Branch);
  double worst = 0.0;
  for (double p : grid) {
    const auto s = solve(table, p);
    const double err = std::abs(s.sol.objective_value - f21_exact(p));
    worst = std::max(worst, err);
    o.require(s.sol.ok() && err <= 1e-6, "p=" + cli::fmt_num(p));
  }
  const double secs = seconds_since(t0);
  o.require(std::abs(solve(table, 0.0).sol.objective_value - 1.0) <= 1e-6, "p=0 spot");
  o.require(std::abs(solve(table, 1.0).sol.objective_value - 0.5) <= 1e-6, "p=1 spot");
  o.require(std::abs(solve(table, 0.5).sol.objective_value - 0.7870370) <= 1e-6, "p=0.5 spot");
  o.require(secs < 5.0, "runtime");
  o.detail << "max |err|=" << cli::fmt_num(worst) << " over 102 points, " << cli::fmt_num(secs) << " s";
  return o;
}

Outcome dn_identity() {
  Outcome o;
  double worst = 0.0;
  for (int n2 : {1, 2, 3}) {
    const auto table = build_objective(1, n2);
    for (int i = 0; i <= 10; ++i) {
      const double p = i / 10.0;
      const auto s = solve(table, p);
      const double err = std::abs(s.sol.objective_value - dn_fidelity(p));
      worst = std::max(worst, err);
      o.require(s.sol.ok() && err <= 1e-7, "n2=" + std::to_string(n2) + " p=" + cli::fmt_num(p));
    }
  }
  o.detail << "max |err|=" << cli::fmt_num(worst);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (auto [n1, n2] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}})
    for (double p : {0.25, 0.5, 0.9}) {
      const auto r = cli::verify_case(n1, n2, p, 1e-10);
      worst = std::max(worst, r.difference);
      o.require(r.pass, "(" + std::to_string(n1) + "," + std::to_string(n2) + ") p=" + cli::fmt_num(p));
    }
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime");
  o.detail << "max |diff|=" << cli::fmt_num(worst) << ", " << cli::fmt_num(secs) << " s";
  return o;
}

Outcome bounds_and_orderings() {
  Outcome o;
  int points = 0;
  for (int n1 = 1; n1 <= 6; ++n1)
    for (int n2 = 1; n2 <= 6; ++n2) {
      const auto table = build_objective(n1, n2);
      for (int i = 0; i <= 10; ++i) {
        const double p = i / 10.0;
        const auto s = solve(table, p);
        ++points;
        o.require(s.sol.ok() && s.sol.objective_value >= dn_fidelity(p) - 1e-8,
                  "lower bound at (" + std::to_string(n1) + "," + std::to_string(n2) + ") p=" + cli::fmt_num(p));
      }
    }
  for (double p : uniform_grid(101)) {
    if (p <= 0.0 || p >= 1.0) continue;
    o.require(mp_upper(p, 2) < dn_fidelity(p), "mp_upper < dn at p=" + cli::fmt_num(p));
    o.require(f21_exact(p) <= f2inf(p) + 1e-9, "f21 <= f2inf at p=" + cli::fmt_num(p));
    o.require(f21_exact(p) > dn_fidelity(p), "f21 > dn at p=" + cli::fmt_num(p));
  }
  o.detail << points << " solved points, orderings on 99 interior p";
  return o;
}

Outcome monotonicity() {
  Outcome o;
  const auto recs = cli::run_sweep(6, 6, {0.25, 0.5, 0.9}, cli::default_jobs(), 1e-10);
  int flagged = 0;
  for (const auto& r : recs) {
    o.require(r.status == sdp::Status::Optimal, "status");
    flagged += !r.monotone;
  }
  o.require(flagged == 0, std::to_string(flagged) + " non-monotone points");
  o.detail << recs.size() << " points, " << flagged << " violations";
  return o;
}

Outcome fig3_sweep() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto recs = cli::run_sweep(10, 10, {0.5, 0.9}, cli::default_jobs(), 1e-10);
  const double secs = seconds_since(t0);
  std::vector<std::string> b_points;
  for (const auto& r : recs) {
    o.require(r.status == sdp::Status::Optimal, "status");
    if (r.p == 0.5 && r.a_vs_b == "B") b_points.push_back("(" + std::to_string(r.n1) + "," + std::to_string(r.n2) + ")");
  }
  o.require(!b_points.empty(), "no point with F(n1,n2+1) > F(n1+1,n2) at p=0.5");
  o.require(secs < 600.0, "runtime");
  o.detail << cli::fmt_num(secs) << " s; p=0.5 points where adding a B copy wins:";
  for (const auto& s : b_points) o.detail << " " << s;
  if (b_points.empty()) o.detail << " none";
  return o;
}

Outcome structural() {
  Outcome o;
  double worst = 0.0;
  for (int t1 = 0; t1 <= 12; ++t1)
    for (int t2 = 0; t2 <= 12; ++t2) {
      const HalfInt j1 = half(t1), j2 = half(t2);
      const auto Js = spin_range(abs(j1 - j2), j1 + j2);
      for (HalfInt M : magnetic_range(j1 + j2))
        for (HalfInt J : Js)
          for (HalfInt Jp : Js) {
            if (abs(M) > J || abs(M) > Jp) continue;
            double sum = 0.0;
            for (HalfInt m1 : magnetic_range(j1)) {
              const HalfInt m2 = M - m1;
              if (abs(m2) > j2) continue;
              sum += cg(j1, m1, j2, m2, J, M) * cg(j1, m1, j2, m2, Jp, M);
            }
            worst = std::max(worst, std::abs(sum - (J == Jp ? 1.0 : 0.0)));
          }
    }
  o.require(worst <= 1e-10, "CG orthogonality");
  for (int n1 = 1; n1 <= 12; ++n1) {
    std::uint64_t dim = 0;
    for (HalfInt j1 : first_register_spins(n1)) dim += multiplicity(n1, j1) * static_cast<std::uint64_t>(j1.twice() + 1);
    o.require(dim == (std::uint64_t{1} << n1), "dimension sum n1=" + std::to_string(n1));
  }
  double row_worst = 0.0;
  for (int n1 = 1; n1 <= 6; ++n1)
    for (int n2 = 1; n2 <= 6; ++n2)
      for (const auto& row : build_constraints(n1, n2)) {
        double s = 0.0;
        for (const auto& t : row.terms) s += t.coefficient;
        row_worst = std::max(row_worst, std::abs(s - 2.0));
      }
  o.require(row_worst <= 1e-12, "row coefficient sum");
  double dn_worst = 0.0;
  for (auto [n1, n2] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 2}, {2, 3}, {3, 3}}) {
    const auto w = dn_w_values(n1, n2);
    const auto table = build_objective(n1, n2);
    for (int i = 0; i <= 10; ++i)
      dn_worst = std::max(dn_worst, std::abs(evaluate_objective(table, w, i / 10.0) - dn_fidelity(i / 10.0)));
  }
  o.require(dn_worst <= 1e-9, "DN extraction");
  o.detail << "CG orthogonality " << cli::fmt_num(worst) << ", row sums " << cli::fmt_num(row_worst) << ", DN "
           << cli::fmt_num(dn_worst);
  return o;
}

Outcome end_to_end() {
  Outcome o;
  for (auto [n1, n2] : {std::pair{1, 1}, {2, 1}}) {
    const std::string tag = "(" + std::to_string(n1) + "," + std::to_string(n2) + ")";
    const auto s = solve(build_objective(n1, n2), 0.5);
    const auto choi = reconstruct_choi(s.cov, s.sol);
    const auto kraus = kraus_from_choi(choi);
    const auto est = estimate_fidelity(kraus, n1, n2, 0.5, 100000, 42, cli::default_jobs());
    o.require(choi.min_eigenvalue() >= -1e-7, tag + " PSD");
    o.require(choi.tp_residual() <= 1e-8, tag + " TP");
    o.require(kraus.completeness_residual() <= 1e-8, tag + " completeness");
    o.require(std::abs(est.mean - s.sol.objective_value) <= 4 * est.std_error, tag + " Monte Carlo");
    o.detail << tag << " sdp=" << cli::fmt_num(s.sol.objective_value) << " mc=" << cli::fmt_num(est.mean) << "+-"
             << cli::fmt_num(est.std_error) << " ";
  }
  return o;
}

Outcome f2inf_regression() {
  Outcome o;
  o.require(std::abs(f2inf(0.0) - 1.0) <= 1e-9, "p=0");
  o.require(std::abs(f2inf(1.0) - 0.5) <= 1e-9, "p=1");
  const std::pair<double, double> frozen[] = {{0.1, 0.9608320024722984},
                                              {0.25, 0.9069815389042983},
                                              {0.5, 0.8083935597742792},
                                              {0.75, 0.6766907566304742},
                                              {0.9, 0.5764872349134297}};
  double worst = 0.0;
  for (auto [p, v] : frozen) {
    worst = std::max(worst, std::abs(f2inf(p) - v));
    o.require(std::abs(f2inf(p) - v) <= 1e-9, "p=" + cli::fmt_num(p));
  }
  o.detail << "max drift " << cli::fmt_num(worst);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"closed-form (2,1)", closed_form_21},        {"do-nothing identity (1,n2)", dn_identity},
      {"oracle equivalence", oracle_equivalence},   {"bounds and orderings", bounds_and_orderings},
      {"monotonicity 6x6", monotonicity},           {"10x10 sweep", fig3_sweep},
      {"structural checks", structural},            {"end-to-end channel", end_to_end},
      {"two-to-infinity regression", f2inf_regression},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures;
}
