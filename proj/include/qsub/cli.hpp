#pragma once

// Command-line front end: optimize | sweep | curves | verify | reconstruct | simulate.
// run_cli() is the whole program so tests can drive it in-process.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "qsub/channel.hpp"
#include "qsub/closed_forms.hpp"
#include "qsub/mcsim.hpp"
#include "qsub/objective.hpp"
#include "qsub/oracle.hpp"
#include "qsub/sdp.hpp"

namespace qsub::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidFlags = 2,
  kSolverFailure = 3,
  kUnwritablePath = 4,
  kVerifyMismatch = 5,
  kSchemaMismatch = 6,
};

struct Failure {
  int code;
  std::string message;
};

/// Shortest round-trip text for 12 significant digits, locale independent.
inline std::string fmt_num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

inline sdp::SolverConfig solver_config(double tol) {
  sdp::SolverConfig c;
  c.gap_tol = tol;
  return c;
}

constexpr double kDefaultGapTol = 1e-10;

struct Instance {
  CovariantSdp cov;
  sdp::Solution sol;
};

inline Instance solve_instance(const ObjectiveTable& table, double p, double tol) {
  Instance in{assemble(table, p), {}};
  in.sol = sdp::solve(in.cov.problem, solver_config(tol));
  spdlog::debug("solved n1={} n2={} p={} status={} F={} iterations={}", table.n1, table.n2, p,
                sdp::to_string(in.sol.status), in.sol.objective_value, in.sol.iterations);
  return in;
}

inline std::string residual_text(const sdp::Solution& s) {
  return "primal_residual=" + fmt_num(s.primal_residual) + " dual_residual=" + fmt_num(s.dual_residual) +
         " min_eigenvalue=" + fmt_num(s.min_eigenvalue) + " gap=" + fmt_num(s.gap_estimate);
}

inline void require_ok(const sdp::Solution& s, const std::string& what) {
  if (!s.ok()) throw Failure{kSolverFailure, what + ": solver status " + sdp::to_string(s.status) + " (" + residual_text(s) + ")"};
}

inline void check_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Failure{kInvalidFlags, "--p must lie in [0, 1]"};
}

inline void check_sizes(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw Failure{kInvalidFlags, "--n1 and --n2 must be >= 1"};
  if (n1 + n2 > kMaxTotalQubits) throw Failure{kInvalidFlags, "--n1 + --n2 must not exceed 24"};
}

/// Opens path for writing ("-" means the given stream).
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw Failure{kUnwritablePath, "cannot write to " + path};
    os_ = file_.get();
  }
  std::ostream& stream() { return *os_; }
  void close(const std::string& path) {
    if (!file_) return;
    file_->close();
    if (!*file_) throw Failure{kUnwritablePath, "failed writing " + path};
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

inline int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

template <class F>
void parallel_for(std::size_t count, int jobs, F&& body) {
  jobs = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

// ---- optimize ---------------------------------------------------------------

struct OptimizeArgs {
  int n1 = 0, n2 = 0;
  double p = 0.0;
  double tol = kDefaultGapTol;
  bool json = false;
};

inline int cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
  check_sizes(a.n1, a.n2);
  check_p(a.p);
  const auto table = build_objective(a.n1, a.n2);
  const auto in = solve_instance(table, a.p, a.tol);
  const auto cert = sdp::check_certificate(in.cov.problem, in.sol);
  const auto w = extract_w(in.cov, in.sol);
  if (a.json) {
    nlohmann::json j;
    j["n1"] = a.n1;
    j["n2"] = a.n2;
    j["p"] = a.p;
    j["f_max"] = in.sol.objective_value;
    j["f_dn"] = dn_fidelity(a.p);
    j["status"] = sdp::to_string(in.sol.status);
    j["iterations"] = in.sol.iterations;
    j["primal_residual"] = in.sol.primal_residual;
    j["dual_residual"] = in.sol.dual_residual;
    j["min_eigenvalue"] = in.sol.min_eigenvalue;
    j["gap"] = in.sol.gap_estimate;
    j["certificate"] = cert.pass;
    auto& arr = j["w"] = nlohmann::json::array();
    for (const auto& [s, v] : w)
      arr.push_back({{"j1", s.j1.str()}, {"j", s.j.str()}, {"jp", s.jp.str()}, {"q", s.q.str()}, {"value", v}});
    out << j.dump(2) << "\n";
  } else {
    out << "F_max " << fmt_num(in.sol.objective_value) << "\n";
    out << "F_dn " << fmt_num(dn_fidelity(a.p)) << "\n";
    out << "status " << sdp::to_string(in.sol.status) << " iterations " << in.sol.iterations << "\n";
    out << residual_text(in.sol) << "\n";
    out << "certificate " << (cert.pass ? "pass" : "fail") << "\n";
    out << "W (j1, j, j', q):\n";
    for (const auto& s : table.sectors)
      out << "  " << s.j1.str() << " " << s.j.str() << " " << s.jp.str() << " " << s.q.str() << " "
          << fmt_num(w.at(s)) << "\n";
  }
  require_ok(in.sol, "optimize");
  if (!cert.pass) throw Failure{kSolverFailure, "optimize: certificate check failed: " + cert.failures.front()};
  return kOk;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  int n1_max = 10, n2_max = 10;
  std::vector<double> ps{0.5};
  std::string out;
  int jobs = default_jobs();
  double tol = kDefaultGapTol;
};

struct SweepRecord {
  int n1 = 0, n2 = 0;
  double p = 0.0;
  double f_max = 0.0;
  double f_dn = 0.0;
  double gap = 0.0;
  sdp::Status status = sdp::Status::NumericalError;
  std::string a_vs_b;  // "A": F(n1+1,n2) larger, "B": F(n1,n2+1) larger
  bool monotone = true;
};

constexpr double kTieTol = 1e-9;
constexpr double kMonotoneTol = 1e-7;
constexpr int kSweepGuard = 10;

inline std::vector<SweepRecord> run_sweep(int n1_max, int n2_max, const std::vector<double>& ps, int jobs, double tol) {
  std::vector<std::pair<int, int>> sizes;
  for (int n1 = 1; n1 <= n1_max; ++n1)
    for (int n2 = 1; n2 <= n2_max; ++n2) sizes.emplace_back(n1, n2);
  std::vector<ObjectiveTable> tables(sizes.size());
  parallel_for(sizes.size(), jobs, [&](std::size_t i) { tables[i] = build_objective(sizes[i].first, sizes[i].second); });

  std::vector<SweepRecord> recs(sizes.size() * ps.size());
  parallel_for(recs.size(), jobs, [&](std::size_t idx) {
    const std::size_t pi = idx / sizes.size(), si = idx % sizes.size();
    const auto in = solve_instance(tables[si], ps[pi], tol);
    auto& r = recs[idx];
    r.n1 = sizes[si].first;
    r.n2 = sizes[si].second;
    r.p = ps[pi];
    r.f_max = in.sol.objective_value;
    r.f_dn = dn_fidelity(r.p);
    r.gap = r.f_max - r.f_dn;
    r.status = in.sol.status;
  });

  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    auto at = [&](int n1, int n2) -> const SweepRecord* {
      if (n1 < 1 || n2 < 1 || n1 > n1_max || n2 > n2_max) return nullptr;
      return &recs[pi * sizes.size() + static_cast<std::size_t>((n1 - 1) * n2_max + (n2 - 1))];
    };
    for (int n1 = 1; n1 <= n1_max; ++n1)
      for (int n2 = 1; n2 <= n2_max; ++n2) {
        auto& r = recs[pi * sizes.size() + static_cast<std::size_t>((n1 - 1) * n2_max + (n2 - 1))];
        const auto* a = at(n1 + 1, n2);
        const auto* b = at(n1, n2 + 1);
        if (a && b) {
          const double diff = a->f_max - b->f_max;
          r.a_vs_b = std::abs(diff) <= kTieTol ? "tie" : (diff > 0 ? "A" : "B");
        }
        for (const auto* prev : {at(n1 - 1, n2), at(n1, n2 - 1)})
          if (prev && r.f_max < prev->f_max - kMonotoneTol) r.monotone = false;
      }
  }
  return recs;
}

inline void write_sweep_csv(const std::vector<SweepRecord>& recs, std::ostream& os) {
  os << "n1,n2,p,f_max,f_dn,gap,status,a_vs_b,monotone\n";
  for (const auto& r : recs)
    os << r.n1 << "," << r.n2 << "," << fmt_num(r.p) << "," << fmt_num(r.f_max) << "," << fmt_num(r.f_dn) << ","
       << fmt_num(r.gap) << "," << sdp::to_string(r.status) << "," << r.a_vs_b << "," << (r.monotone ? 1 : 0) << "\n";
}

inline int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  if (a.n1_max < 1 || a.n2_max < 1) throw Failure{kInvalidFlags, "--n1-max and --n2-max must be >= 1"};
  if (a.n1_max > kSweepGuard || a.n2_max > kSweepGuard) throw Failure{kInvalidFlags, "--n1-max and --n2-max must be <= 10"};
  if (a.ps.empty()) throw Failure{kInvalidFlags, "--p needs at least one value"};
  for (double p : a.ps) check_p(p);
  Output o(a.out, out);
  const auto recs = run_sweep(a.n1_max, a.n2_max, a.ps, a.jobs, a.tol);
  write_sweep_csv(recs, o.stream());
  o.close(a.out);
  int failed = 0, flagged = 0;
  for (const auto& r : recs) {
    failed += r.status != sdp::Status::Optimal;
    flagged += !r.monotone;
  }
  if (flagged) spdlog::warn("sweep: {} grid points break monotonicity beyond {}", flagged, kMonotoneTol);
  for (double p : a.ps) {
    for (const auto& r : recs)
      if (r.p == p && r.a_vs_b == "B")
        spdlog::info("p={}: an extra B copy beats an extra A copy at n1={} n2={}", fmt_num(p), r.n1, r.n2);
  }
  if (failed) throw Failure{kSolverFailure, "sweep: " + std::to_string(failed) + " grid points did not reach optimality"};
  return kOk;
}

// ---- curves -----------------------------------------------------------------

struct CurvesArgs {
  int n1 = 2, n2 = 1;
  int p_steps = 101;
  std::string out;
  std::string format = "wide";
  double tol = kDefaultGapTol;
};

inline int cmd_curves(const CurvesArgs& a, std::ostream& out) {
  check_sizes(a.n1, a.n2);
  if (a.p_steps < 2) throw Failure{kInvalidFlags, "--p-steps must be >= 2"};
  if (a.format != "wide" && a.format != "long") throw Failure{kInvalidFlags, "--format must be wide or long"};
  const auto table = build_objective(a.n1, a.n2);
  const auto grid = uniform_grid(a.p_steps);
  std::vector<double> opt(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto in = solve_instance(table, grid[i], a.tol);
    require_ok(in.sol, "curves at p=" + fmt_num(grid[i]));
    opt[i] = in.sol.objective_value;
  }
  Output o(a.out, out);
  auto& os = o.stream();
  if (a.format == "wide") {
    os << "p,f_opt,f_dn,f_mp_upper,f_2inf\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double p = grid[i];
      os << fmt_num(p) << "," << fmt_num(opt[i]) << "," << fmt_num(dn_fidelity(p)) << "," << fmt_num(mp_upper(p, a.n1))
         << "," << fmt_num(f2inf(p)) << "\n";
    }
  } else {
    os << "p,label,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << fmt_num(grid[i]) << ",F_OPT," << fmt_num(opt[i]) << "\n";
      for (CurveLabel l : kAllCurves)
        os << fmt_num(grid[i]) << "," << to_string(l) << "," << fmt_num(curve_value(l, grid[i], a.n1)) << "\n";
    }
  }
  o.close(a.out);
  return kOk;
}

// ---- verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string cases = "2,1";
  double p = 0.5;
  double tol = kDefaultGapTol;
};

constexpr double kVerifyTol = 1e-5;

struct VerifyReport {
  double covariant = 0.0;
  double oracle = 0.0;
  double difference = 0.0;
  bool pass = false;
};

inline VerifyReport verify_case(int n1, int n2, double p, double tol) {
  const auto in = solve_instance(build_objective(n1, n2), p, tol);
  require_ok(in.sol, "verify (covariant)");
  const auto choi = solve_choi(twirl_objective(build_omega(n1, n2, p)), solver_config(tol));
  require_ok(choi, "verify (oracle)");
  VerifyReport r{in.sol.objective_value, choi.objective_value, 0.0, false};
  r.difference = std::abs(r.covariant - r.oracle);
  r.pass = r.difference <= kVerifyTol;
  return r;
}

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  int n1 = 0, n2 = 0;
  {
    const auto comma = a.cases.find(',');
    if (comma == std::string::npos) throw Failure{kInvalidFlags, "--case must look like n1,n2"};
    const auto s1 = a.cases.substr(0, comma), s2 = a.cases.substr(comma + 1);
    const auto r1 = std::from_chars(s1.data(), s1.data() + s1.size(), n1);
    const auto r2 = std::from_chars(s2.data(), s2.data() + s2.size(), n2);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != s1.data() + s1.size() ||
        r2.ptr != s2.data() + s2.size())
      throw Failure{kInvalidFlags, "--case must look like n1,n2"};
  }
  check_sizes(n1, n2);
  if (n1 + n2 > 5) throw Failure{kInvalidFlags, "--case needs n1 + n2 <= 5"};
  check_p(a.p);
  const auto r = verify_case(n1, n2, a.p, a.tol);
  out << "covariant " << fmt_num(r.covariant) << "\n";
  out << "oracle " << fmt_num(r.oracle) << "\n";
  out << "difference " << fmt_num(r.difference) << "\n";
  out << (r.pass ? "PASS" : "FAIL") << "\n";
  if (!r.pass) throw Failure{kVerifyMismatch, "verify: difference " + fmt_num(r.difference) + " exceeds 1e-05"};
  return kOk;
}

// ---- reconstruct ------------------------------------------------------------

struct ReconstructArgs {
  int n1 = 0, n2 = 0;
  double p = 0.0;
  std::string out;
  bool dn = false;
  double tol = kDefaultGapTol;
};

constexpr double kCompletenessTol = 1e-8;

inline int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream& report) {
  check_sizes(a.n1, a.n2);
  if (a.n1 + a.n2 > kMaxBasisQubits) throw Failure{kInvalidFlags, "reconstruct needs n1 + n2 <= 8"};
  check_p(a.p);
  KrausFile f;
  f.n1 = a.n1;
  f.n2 = a.n2;
  f.p = a.p;
  ChoiMatrix choi;
  if (a.dn) {
    choi = dn_channel(a.n1 + a.n2);
    f.reference = dn_fidelity(a.p);
    f.source = "do-nothing";
  } else {
    const auto in = solve_instance(build_objective(a.n1, a.n2), a.p, a.tol);
    require_ok(in.sol, "reconstruct");
    try {
      choi = reconstruct_choi(in.cov, in.sol);
    } catch (const std::runtime_error& e) {
      throw Failure{kSolverFailure, e.what()};
    }
    f.reference = in.sol.objective_value;
    f.source = "covariant-optimum";
  }
  f.kraus = kraus_from_choi(choi);
  const double completeness = f.kraus.completeness_residual();
  report << "operators " << f.kraus.operators.size() << "\n";
  report << "choi_min_eigenvalue " << fmt_num(choi.min_eigenvalue()) << "\n";
  report << "tp_residual " << fmt_num(choi.tp_residual()) << "\n";
  report << "completeness_residual " << fmt_num(completeness) << "\n";
  report << "reference_fidelity " << fmt_num(f.reference) << "\n";
  if (completeness > kCompletenessTol) throw Failure{kSolverFailure, "reconstruct: Kraus completeness residual too large"};
  Output o(a.out, out);
  o.stream() << to_json(f).dump(1) << "\n";
  o.close(a.out);
  return kOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string kraus;
  std::int64_t samples = 100000;
  std::uint64_t seed = 42;
  int jobs = default_jobs();
  std::string out;
};

constexpr double kSigmaFactor = 4.0;

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.samples < 2) throw Failure{kInvalidFlags, "--samples must be >= 2"};
  std::ifstream in(a.kraus);
  if (!in) throw Failure{kInvalidFlags, "cannot read " + a.kraus};
  KrausFile f;
  try {
    f = kraus_file_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Failure{kSchemaMismatch, std::string("kraus json: ") + e.what()};
  } catch (const SchemaError& e) {
    throw Failure{kSchemaMismatch, e.what()};
  }
  const auto est = estimate_fidelity(f.kraus, f.n1, f.n2, f.p, a.samples, a.seed, a.jobs);
  const bool pass = std::abs(est.mean - f.reference) <= kSigmaFactor * est.std_error;
  nlohmann::json j;
  j["mean"] = est.mean;
  j["std_error"] = est.std_error;
  j["samples"] = est.samples;
  j["seed"] = a.seed;
  j["reference_fidelity"] = f.reference;
  j["pass"] = pass;
  Output o(a.out, out);
  o.stream() << j.dump(2) << "\n";
  o.close(a.out);
  if (!pass) throw Failure{kVerifyMismatch, "simulate: estimate outside 4 standard errors of the reference"};
  return kOk;
}

// ---- entry ------------------------------------------------------------------

inline void configure_logging(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("qsub", sink);
  logger->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("QSUB_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  logger->set_level(level);
  spdlog::set_default_logger(logger);
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging(err);
  CLI::App app{"Optimal universal quantum subtracting machine for qubits"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "solve one instance");
  c_opt->add_option("--n1", opt.n1, "copies of the mixture")->required();
  c_opt->add_option("--n2", opt.n2, "copies of the reference")->required();
  c_opt->add_option("--p", opt.p, "mixing probability")->required();
  c_opt->add_option("--tol", opt.tol, "relative duality gap tolerance");
  c_opt->add_flag("--json", opt.json, "print JSON");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "grid of optimal fidelities");
  c_sw->add_option("--n1-max", sw.n1_max);
  c_sw->add_option("--n2-max", sw.n2_max);
  c_sw->add_option("--p", sw.ps, "one or more p values")->expected(1, -1);
  c_sw->add_option("--out", sw.out, "CSV path, - for stdout")->required();
  c_sw->add_option("--jobs", sw.jobs);
  c_sw->add_option("--tol", sw.tol);

  CurvesArgs cu;
  auto* c_cu = app.add_subcommand("curves", "optimal fidelity and baselines over p");
  c_cu->add_option("--n1", cu.n1);
  c_cu->add_option("--n2", cu.n2);
  c_cu->add_option("--p-steps", cu.p_steps);
  c_cu->add_option("--out", cu.out, "CSV path, - for stdout");
  c_cu->add_option("--format", cu.format, "wide or long");
  c_cu->add_option("--tol", cu.tol);

  VerifyArgs ve;
  auto* c_ve = app.add_subcommand("verify", "compare with the brute-force Choi SDP");
  c_ve->add_option("--case", ve.cases, "n1,n2")->required();
  c_ve->add_option("--p", ve.p)->required();
  c_ve->add_option("--tol", ve.tol);

  ReconstructArgs re;
  auto* c_re = app.add_subcommand("reconstruct", "write Kraus operators of the optimal channel");
  c_re->add_option("--n1", re.n1)->required();
  c_re->add_option("--n2", re.n2)->required();
  c_re->add_option("--p", re.p)->required();
  c_re->add_option("--out", re.out, "JSON path, - for stdout")->required();
  c_re->add_flag("--dn", re.dn, "export the do-nothing channel instead");
  c_re->add_option("--tol", re.tol);

  SimulateArgs si;
  auto* c_si = app.add_subcommand("simulate", "Monte-Carlo fidelity of a Kraus file");
  c_si->add_option("--kraus", si.kraus)->required();
  c_si->add_option("--samples", si.samples);
  c_si->add_option("--seed", si.seed);
  c_si->add_option("--jobs", si.jobs);
  c_si->add_option("--out", si.out, "JSON path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kInvalidFlags;
  }

  for (double* t : {&opt.tol, &sw.tol, &cu.tol, &ve.tol, &re.tol})
    if (!(*t > 0.0)) {
      err << "--tol must be positive\n";
      return kInvalidFlags;
    }
  if (sw.jobs < 1 || si.jobs < 1) {
    err << "--jobs must be >= 1\n";
    return kInvalidFlags;
  }

  try {
    if (*c_opt) return cmd_optimize(opt, out);
    if (*c_sw) return cmd_sweep(sw, out);
    if (*c_cu) return cmd_curves(cu, out);
    if (*c_ve) return cmd_verify(ve, out);
    if (*c_re) return cmd_reconstruct(re, out, err);
    if (*c_si) return cmd_simulate(si, out);
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace qsub::cli
