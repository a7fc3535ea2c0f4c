#pragma once

// Fidelity objective of the covariant N -> 1 qubit channel as polynomials in
// the mixing probability p, the trace-preservation rows, and their assembly
// into a block SDP whose blocks are indexed by (q, j1).

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsub/angular.hpp"
#include "qsub/sdp.hpp"

namespace qsub {

/// Polynomial of degree <= n in p, kept both in the Bernstein-like basis
/// sum_k binom(n,k) (1-p)^k p^(n-k) c_k and expanded to monomials.
class PolyInP {
 public:
  PolyInP() = default;

  static PolyInP from_bernstein(int n, std::vector<double> c) {
    if (static_cast<int>(c.size()) != n + 1) throw std::invalid_argument("PolyInP: need n+1 coefficients");
    PolyInP poly;
    poly.bernstein_ = std::move(c);
    poly.expand();
    return poly;
  }

  static PolyInP zero(int n) { return from_bernstein(n, std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0)); }

  int degree_bound() const { return static_cast<int>(bernstein_.size()) - 1; }
  const std::vector<double>& bernstein() const { return bernstein_; }
  /// monomial()[i] is the coefficient of p^i.
  const std::vector<double>& monomial() const { return monomial_; }

  double operator()(double p) const {
    double acc = 0.0;
    for (auto it = monomial_.rbegin(); it != monomial_.rend(); ++it) acc = acc * p + *it;
    return acc;
  }

  /// Copy with the k-th Bernstein term removed.
  PolyInP without_term(int k) const {
    auto c = bernstein_;
    c.at(static_cast<std::size_t>(k)) = 0.0;
    return from_bernstein(degree_bound(), std::move(c));
  }

  bool is_zero(double tol = 0.0) const {
    return std::all_of(bernstein_.begin(), bernstein_.end(), [tol](double v) { return std::abs(v) <= tol; });
  }

  PolyInP& operator+=(const PolyInP& o) {
    if (bernstein_.empty()) return *this = o;
    if (o.degree_bound() != degree_bound()) throw std::invalid_argument("PolyInP: degree mismatch");
    for (std::size_t k = 0; k < bernstein_.size(); ++k) bernstein_[k] += o.bernstein_[k];
    expand();
    return *this;
  }
  friend PolyInP operator+(PolyInP a, const PolyInP& b) { return a += b; }

 private:
  void expand() {
    const int n = degree_bound();
    monomial_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    // binom(n,k) (1-p)^k p^(n-k) = binom(n,k) sum_i binom(k,i) (-1)^i p^(n-k+i)
    for (int k = 0; k <= n; ++k) {
      const double ck = bernstein_[static_cast<std::size_t>(k)] * binomial(n, k);
      if (ck == 0.0) continue;
      for (int i = 0; i <= k; ++i) {
        const double term = ck * binomial(k, i) * ((i % 2 == 0) ? 1.0 : -1.0);
        monomial_[static_cast<std::size_t>(n - k + i)] += term;
      }
    }
  }

  static double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }

  std::vector<double> bernstein_;
  std::vector<double> monomial_;
};

/// Objective coefficients keyed by sector; off-diagonal (j < j') entries hold
/// C^{j,j'} + C^{j',j}.
struct ObjectiveTable {
  int n1 = 0;
  int n2 = 0;
  std::vector<SectorIndex> sectors;  // enumerate_sectors order
  std::map<SectorIndex, PolyInP> entries;

  const PolyInP& at(const SectorIndex& s) const {
    auto it = entries.find(s);
    if (it == entries.end()) throw std::out_of_range("ObjectiveTable: unknown sector " + to_string(s));
    return it->second;
  }
};

constexpr int kMaxTotalQubits = 24;

/// Unfolded coefficients C^{j,j'}_{q,j1}(p) for both orders (j, j').
inline std::map<SectorIndex, PolyInP> build_raw_objective(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("build_objective: n1 and n2 must be >= 1");
  if (n1 + n2 > kMaxTotalQubits) throw std::length_error("build_objective: n1 + n2 exceeds capacity");
  const int N = n1 + n2;
  const HalfInt b = half(n2);
  // Per sector, Bernstein coefficients c_k.
  std::map<SectorIndex, std::vector<double>> acc;

  for (int k = 0; k <= n1; ++k) {
    // k target copies |up>^k (spin k/2, m = k/2) and the symmetric block of
    // the remaining N-k qubits, split into its n1-k and n2 parts.
    const HalfInt up = half(k);
    const HalfInt a = half(n1 - k);
    const HalfInt S = half(N - k);
    const double weight = 1.0 / (N - k + 1);
    for (HalfInt j1 : spin_range(abs(up - a), half(n1))) {
      const auto js = coupled_spins(j1, n2);
      for (HalfInt Msym : magnetic_range(S)) {
        const HalfInt M = up + Msym;
        std::vector<double> amp(js.size(), 0.0);
        for (HalfInt m : magnetic_range(a)) {
          const HalfInt s = Msym - m;
          if (abs(s) > b) continue;
          const double c1 = cg(a, m, b, s, S, Msym);
          if (c1 == 0.0) continue;
          const double c2 = cg(up, up, a, m, j1, up + m);
          if (c2 == 0.0) continue;
          for (std::size_t ji = 0; ji < js.size(); ++ji) amp[ji] += c1 * c2 * cg(j1, up + m, b, s, js[ji], M);
        }
        for (std::size_t ji = 0; ji < js.size(); ++ji) {
          if (amp[ji] == 0.0) continue;
          for (std::size_t jpi = 0; jpi < js.size(); ++jpi) {
            if (amp[jpi] == 0.0) continue;
            const HalfInt j = js[ji], jp = js[jpi];
            for (HalfInt q : q_set(j, jp)) {
              const double val = weight * amp[ji] * amp[jpi] * cg(kHalf, kHalf, j, -M, q, kHalf - M) *
                                 cg(kHalf, kHalf, jp, -M, q, kHalf - M);
              auto& c = acc[SectorIndex{j1, j, jp, q}];
              if (c.empty()) c.assign(static_cast<std::size_t>(n1) + 1, 0.0);
              c[static_cast<std::size_t>(k)] += val;
            }
          }
        }
      }
    }
  }

  std::map<SectorIndex, PolyInP> out;
  for (HalfInt j1 : first_register_spins(n1)) {
    for (HalfInt j : coupled_spins(j1, n2)) {
      for (HalfInt jp : coupled_spins(j1, n2)) {
        for (HalfInt q : q_set(j, jp)) {
          const SectorIndex key{j1, j, jp, q};
          auto it = acc.find(key);
          out[key] = it == acc.end() ? PolyInP::zero(n1) : PolyInP::from_bernstein(n1, it->second);
        }
      }
    }
  }
  return out;
}

inline ObjectiveTable build_objective(int n1, int n2) {
  const auto raw = build_raw_objective(n1, n2);
  ObjectiveTable table;
  table.n1 = n1;
  table.n2 = n2;
  table.sectors = enumerate_sectors(n1, n2);
  for (const auto& s : table.sectors) {
    PolyInP v = raw.at(s);
    if (s.j != s.jp) v += raw.at(SectorIndex{s.j1, s.jp, s.j, s.q});
    table.entries.emplace(s, std::move(v));
  }
  return table;
}

struct ConstraintTerm {
  HalfInt q;
  double coefficient = 0.0;
};

/// (2+2j)/(1+2j) W^{jj}_{j+1/2,j1} + 2j/(1+2j) W^{jj}_{j-1/2,j1} = 1
struct TraceRow {
  HalfInt j;
  HalfInt j1;
  std::vector<ConstraintTerm> terms;
  double rhs = 1.0;
};

inline std::vector<TraceRow> build_constraints(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("build_constraints: n1 and n2 must be >= 1");
  std::vector<TraceRow> rows;
  for (HalfInt j1 : first_register_spins(n1)) {
    for (HalfInt j : coupled_spins(j1, n2)) {
      TraceRow row{j, j1, {}, 1.0};
      const double tj = j.twice();
      row.terms.push_back({j + kHalf, (2.0 + tj) / (1.0 + tj)});
      if (j.twice() > 0) row.terms.push_back({j - kHalf, tj / (1.0 + tj)});
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct BlockLabel {
  HalfInt q;
  HalfInt j1;
  std::vector<HalfInt> js;  // row labels, ascending
};

/// Covariant-channel SDP at a fixed p, with labels mapping blocks back to sectors.
struct CovariantSdp {
  int n1 = 0;
  int n2 = 0;
  double p = 0.0;
  sdp::Problem problem;
  std::vector<BlockLabel> blocks;
  std::vector<TraceRow> rows;

  /// Block and row/col of sector s inside the problem.
  std::tuple<int, int, int> locate(const SectorIndex& s) const {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].q != s.q || blocks[b].j1 != s.j1) continue;
      const auto& js = blocks[b].js;
      const auto r = std::find(js.begin(), js.end(), s.j);
      const auto c = std::find(js.begin(), js.end(), s.jp);
      if (r != js.end() && c != js.end()) {
        return {static_cast<int>(b), static_cast<int>(r - js.begin()), static_cast<int>(c - js.begin())};
      }
    }
    throw std::out_of_range("CovariantSdp: no block for sector " + to_string(s));
  }
};

inline CovariantSdp assemble(const ObjectiveTable& table, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("assemble: p must lie in [0, 1]");
  CovariantSdp out;
  out.n1 = table.n1;
  out.n2 = table.n2;
  out.p = p;
  for (HalfInt j1 : first_register_spins(table.n1)) {
    const auto js = coupled_spins(j1, table.n2);
    const HalfInt q_lo = js.front().twice() == 0 ? kHalf : js.front() - kHalf;
    for (HalfInt q : spin_range(q_lo, js.back() + kHalf)) {
      BlockLabel label{q, j1, {}};
      for (HalfInt j : {q - kHalf, q + kHalf}) {
        if (std::find(js.begin(), js.end(), j) != js.end()) label.js.push_back(j);
      }
      if (!label.js.empty()) out.blocks.push_back(std::move(label));
    }
  }
  auto& prob = out.problem;
  for (const auto& label : out.blocks) {
    const int d = static_cast<int>(label.js.size());
    prob.block_dims.push_back(d);
    sdp::Matrix c = sdp::Matrix::Zero(d, d);
    for (int r = 0; r < d; ++r) {
      for (int cc = r; cc < d; ++cc) {
        const double v = table.at(SectorIndex{label.j1, label.js[r], label.js[cc], label.q})(p);
        if (r == cc) c(r, r) = v;
        else c(r, cc) = c(cc, r) = 0.5 * v;
      }
    }
    prob.objective.push_back(std::move(c));
  }
  out.rows = build_constraints(table.n1, table.n2);
  for (const auto& row : out.rows) {
    sdp::LinearRow lr;
    lr.rhs = row.rhs;
    for (const auto& t : row.terms) {
      const auto [b, r, c] = out.locate(SectorIndex{row.j1, row.j, row.j, t.q});
      lr.terms.push_back({b, r, c, t.coefficient});
    }
    prob.equalities.push_back(std::move(lr));
  }
  return out;
}

/// W values keyed by sector (j <= j').
using WTable = std::map<SectorIndex, double>;

inline WTable extract_w(const CovariantSdp& cov, const sdp::Solution& sol) {
  WTable w;
  for (std::size_t b = 0; b < cov.blocks.size(); ++b) {
    const auto& label = cov.blocks[b];
    for (std::size_t r = 0; r < label.js.size(); ++r)
      for (std::size_t c = r; c < label.js.size(); ++c)
        w[SectorIndex{label.j1, label.js[r], label.js[c], label.q}] =
            sol.blocks[b](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return w;
}

/// sum over sectors of C(p) * W.
inline double evaluate_objective(const ObjectiveTable& table, const WTable& w, double p) {
  double f = 0.0;
  for (const auto& s : table.sectors) {
    auto it = w.find(s);
    if (it != w.end()) f += table.at(s)(p) * it->second;
  }
  return f;
}

/// Largest |residual| of the trace rows for the given W.
inline double trace_residual(const std::vector<TraceRow>& rows, const WTable& w) {
  double worst = 0.0;
  for (const auto& row : rows) {
    double s = 0.0;
    for (const auto& t : row.terms) {
      auto it = w.find(SectorIndex{row.j1, row.j, row.j, t.q});
      if (it != w.end()) s += t.coefficient * it->second;
    }
    worst = std::max(worst, std::abs(s - row.rhs));
  }
  return worst;
}

inline nlohmann::json to_json(const ObjectiveTable& table) {
  nlohmann::json j;
  j["n1"] = table.n1;
  j["n2"] = table.n2;
  j["labels"] = "twice-values";
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& s : table.sectors) {
    const auto& poly = table.at(s);
    arr.push_back({{"j1", s.j1.twice()},
                   {"j", s.j.twice()},
                   {"jp", s.jp.twice()},
                   {"q", s.q.twice()},
                   {"bernstein", poly.bernstein()},
                   {"monomial", poly.monomial()}});
  }
  return j;
}

}  // namespace qsub
