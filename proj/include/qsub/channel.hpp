#pragma once

// Coupled |j, m, g> basis, reconstruction of the covariant channel from its
// W parameters, Kraus factorization and W extraction from explicit channels.
// Choi conventions follow oracle.hpp.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "qsub/angular.hpp"
#include "qsub/mcsim.hpp"
#include "qsub/objective.hpp"
#include "qsub/oracle.hpp"

namespace qsub {

/// One spin multiplet of a register, states indexed by m = -j..j.
struct Multiplet {
  HalfInt j;
  int path = 0;
  std::vector<Eigen::VectorXd> states;
};

/// Couple n qubits left to right; paths are numbered in creation order per j.
inline std::vector<Multiplet> couple_sequentially(int n) {
  std::vector<Multiplet> cur;
  {
    Multiplet one{kHalf, 0, {}};
    one.states.push_back(Eigen::Vector2d(0.0, 1.0));  // m = -1/2
    one.states.push_back(Eigen::Vector2d(1.0, 0.0));  // m = +1/2
    cur.push_back(one);
  }
  for (int q = 1; q < n; ++q) {
    std::vector<Multiplet> next;
    std::map<int, int> paths;
    for (const auto& mu : cur) {
      for (HalfInt J : {mu.j - kHalf, mu.j + kHalf}) {
        if (J.twice() < 0) continue;
        Multiplet nu{J, paths[J.twice()]++, {}};
        const auto dim = mu.states.front().size() * 2;
        for (HalfInt M : magnetic_range(J)) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
          for (HalfInt s : {kHalf, -kHalf}) {
            const HalfInt m = M - s;
            if (abs(m) > mu.j) continue;
            const double c = cg(mu.j, m, kHalf, s, J, M);
            if (c == 0.0) continue;
            const Eigen::Vector2d e = s == kHalf ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
            v += c * Eigen::VectorXd(Eigen::kroneckerProduct(mu.states[static_cast<std::size_t>(whole(m + mu.j))], e));
          }
          nu.states.push_back(v);
        }
        next.push_back(std::move(nu));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

struct BasisColumn {
  HalfInt j;
  HalfInt m;
  HalfInt j1;
  int path_a = 0;
  HalfInt j2;
  int path_b = 0;
  int family = 0;  // index of g = (j1, path_a, j2, path_b)
  bool in_support = false;  // B register in its symmetric subspace
};

struct CoupledBasis {
  int n1 = 0;
  int n2 = 0;
  Eigen::MatrixXd isometry;  // columns |j, m, g>
  std::vector<BasisColumn> columns;
  int families = 0;
};

constexpr int kMaxBasisQubits = 8;

inline CoupledBasis build_coupled_basis(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("build_coupled_basis: n1 and n2 must be >= 1");
  if (n1 + n2 > kMaxBasisQubits) throw std::length_error("build_coupled_basis: n1 + n2 exceeds 8");
  const auto A = couple_sequentially(n1);
  const auto B = couple_sequentially(n2);
  CoupledBasis basis;
  basis.n1 = n1;
  basis.n2 = n2;
  const auto d = Eigen::Index{1} << (n1 + n2);
  basis.isometry = Eigen::MatrixXd::Zero(d, d);
  Eigen::Index col = 0;
  for (const auto& a : A) {
    for (const auto& b : B) {
      const int family = basis.families++;
      for (HalfInt j : spin_range(abs(a.j - b.j), a.j + b.j)) {
        for (HalfInt m : magnetic_range(j)) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
          for (HalfInt m1 : magnetic_range(a.j)) {
            const HalfInt m2 = m - m1;
            if (abs(m2) > b.j) continue;
            const double c = cg(a.j, m1, b.j, m2, j, m);
            if (c == 0.0) continue;
            v += c * Eigen::VectorXd(Eigen::kroneckerProduct(a.states[static_cast<std::size_t>(whole(m1 + a.j))],
                                                              b.states[static_cast<std::size_t>(whole(m2 + b.j))]));
          }
          basis.isometry.col(col++) = v;
          basis.columns.push_back({j, m, a.j, a.path, b.j, b.path, family, b.j == half(n2)});
        }
      }
    }
  }
  if (col != d) throw std::logic_error("build_coupled_basis: column count mismatch");
  return basis;
}

namespace detail {

inline int spin_index(HalfInt s) { return s == kHalf ? 0 : 1; }

// covariant amplitude without W: (-1)^{m-m'} <q,s-m|1/2 s; j -m> <q,s'-m'|1/2 s'; j' -m'>
inline double covariant_factor(HalfInt j, HalfInt m, HalfInt jp, HalfInt mp, HalfInt s, HalfInt sp, HalfInt q) {
  if (s - m != sp - mp) return 0.0;
  const int sign = whole(m - mp) % 2 == 0 ? 1 : -1;
  return sign * cg(kHalf, s, j, -m, q, s - m) * cg(kHalf, sp, jp, -mp, q, sp - mp);
}

}  // namespace detail

/// Real symmetric Choi matrix, input first.
struct ChoiMatrix {
  int n_in = 0;
  Eigen::MatrixXd matrix;

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// max |Tr_out J - I|
  double tp_residual() const {
    const auto d = matrix.rows() / 2;
    double worst = 0.0;
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        const double v = matrix(2 * a, 2 * b) + matrix(2 * a + 1, 2 * b + 1);
        worst = std::max(worst, std::abs(v - (a == b ? 1.0 : 0.0)));
      }
    return worst;
  }
};

/// L(rho) for a (possibly complex) input state.
inline Eigen::Matrix2cd apply_choi(const ChoiMatrix& choi, const MatrixXcd& rho) {
  const auto d = choi.matrix.rows() / 2;
  if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("apply_choi: dimension mismatch");
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp) {
      cplx acc = 0.0;
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) acc += choi.matrix(2 * a + s, 2 * b + sp) * rho(a, b);
      out(s, sp) = acc;
    }
  return out;
}

/// <up| L(Omega) |up> = Tr[J (Omega^T x |up><up|)].
inline double channel_fidelity(const ChoiMatrix& choi, const OmegaOperator& omega) {
  const auto d = omega.matrix.rows();
  if (choi.matrix.rows() != 2 * d) throw std::invalid_argument("channel_fidelity: dimension mismatch");
  double f = 0.0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) f += choi.matrix(2 * a, 2 * b) * omega.matrix(a, b);
  return f;
}

constexpr double kReconstructPsdTol = 1e-7;

/// Channel from W values on the Omega support, flat W = 1/2 elsewhere.
inline ChoiMatrix reconstruct_choi(const WTable& w, const CoupledBasis& basis) {
  const auto d = basis.isometry.rows();
  Eigen::MatrixXd jc = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  auto w_of = [&](const BasisColumn& c, HalfInt jp, HalfInt q) {
    if (!c.in_support) return c.j == jp ? 0.5 : 0.0;
    const SectorIndex key{c.j1, std::min(c.j, jp), std::max(c.j, jp), q};
    auto it = w.find(key);
    if (it == w.end()) throw std::out_of_range("reconstruct_choi: missing W for " + to_string(key));
    return it->second;
  };
  for (Eigen::Index al = 0; al < d; ++al) {
    const auto& ca = basis.columns[static_cast<std::size_t>(al)];
    for (Eigen::Index be = 0; be < d; ++be) {
      const auto& cb = basis.columns[static_cast<std::size_t>(be)];
      if (ca.family != cb.family) continue;
      const auto qs = q_set(ca.j, cb.j);
      if (qs.empty()) continue;
      for (HalfInt s : {kHalf, -kHalf})
        for (HalfInt sp : {kHalf, -kHalf}) {
          double v = 0.0;
          for (HalfInt q : qs) {
            const double f = detail::covariant_factor(ca.j, ca.m, cb.j, cb.m, s, sp, q);
            if (f != 0.0) v += f * w_of(ca, cb.j, q);
          }
          jc(2 * al + detail::spin_index(s), 2 * be + detail::spin_index(sp)) = v;
        }
    }
  }
  const Eigen::MatrixXd V = Eigen::kroneckerProduct(basis.isometry, Eigen::Matrix2d::Identity());
  ChoiMatrix out{basis.n1 + basis.n2, V * jc * V.transpose()};
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  const double lmin = out.min_eigenvalue();
  if (lmin < -kReconstructPsdTol)
    throw std::runtime_error("reconstruct_choi: Choi matrix not positive semidefinite (min eigenvalue " +
                             std::to_string(lmin) + ")");
  return out;
}

inline ChoiMatrix reconstruct_choi(const WTable& w, int n1, int n2) {
  return reconstruct_choi(w, build_coupled_basis(n1, n2));
}

inline ChoiMatrix reconstruct_choi(const CovariantSdp& cov, const sdp::Solution& sol) {
  return reconstruct_choi(extract_w(cov, sol), cov.n1, cov.n2);
}

constexpr double kKrausEigenCut = 1e-10;

inline KrausSet kraus_from_choi(const ChoiMatrix& choi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(choi.matrix);
  const auto d = choi.matrix.rows() / 2;
  KrausSet k;
  k.n_in = choi.n_in;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    const double lam = es.eigenvalues()(i);
    if (lam <= kKrausEigenCut) continue;
    MatrixXcd m(2, d);
    for (Eigen::Index a = 0; a < d; ++a)
      for (int s = 0; s < 2; ++s) m(s, a) = std::sqrt(lam) * es.eigenvectors()(2 * a + s, i);
    k.operators.push_back(std::move(m));
  }
  return k;
}

inline ChoiMatrix dn_channel(int N) { return {N, dn_choi(N)}; }

constexpr double kExtractionTol = 1e-9;

/// W values of the do-nothing channel, averaged over the A-register paths.
inline WTable dn_w_values(int n1, int n2) {
  if (n1 + n2 > kMaxOmegaQubits) throw std::length_error("dn_w_values: n1 + n2 exceeds 6");
  const auto basis = build_coupled_basis(n1, n2);
  const auto d = basis.isometry.rows();
  const auto half_d = d / 2;
  // reduced <s| Tr_rest |alpha><beta| |s'> for the first qubit
  auto reduced = [&](Eigen::Index al, Eigen::Index be, int s, int sp) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < half_d; ++r) acc += basis.isometry(s * half_d + r, al) * basis.isometry(sp * half_d + r, be);
    return acc;
  };

  std::map<SectorIndex, std::pair<double, int>> sums;
  std::map<int, std::vector<Eigen::Index>> by_family;
  for (Eigen::Index c = 0; c < d; ++c)
    if (basis.columns[static_cast<std::size_t>(c)].in_support)
      by_family[basis.columns[static_cast<std::size_t>(c)].family].push_back(c);

  for (const auto& [fam, cols] : by_family) {
    const HalfInt j1 = basis.columns[static_cast<std::size_t>(cols.front())].j1;
    for (HalfInt j : coupled_spins(j1, n2)) {
      for (HalfInt jp : coupled_spins(j1, n2)) {
        if (jp < j) continue;
        const auto qs = q_set(j, jp);
        std::vector<std::vector<double>> rows;
        std::vector<double> rhs;
        for (Eigen::Index al : cols) {
          const auto& ca = basis.columns[static_cast<std::size_t>(al)];
          if (ca.j != j) continue;
          for (Eigen::Index be : cols) {
            const auto& cb = basis.columns[static_cast<std::size_t>(be)];
            if (cb.j != jp) continue;
            for (HalfInt s : {kHalf, -kHalf})
              for (HalfInt sp : {kHalf, -kHalf}) {
                std::vector<double> row;
                for (HalfInt q : qs) row.push_back(detail::covariant_factor(j, ca.m, jp, cb.m, s, sp, q));
                rows.push_back(std::move(row));
                rhs.push_back(reduced(al, be, detail::spin_index(s), detail::spin_index(sp)));
              }
          }
        }
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(qs.size()));
        Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(qs.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
          for (std::size_t c = 0; c < qs.size(); ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        if (!qs.empty()) x = M.colPivHouseholderQr().solve(b);
        const double res = qs.empty() ? b.cwiseAbs().maxCoeff() : (M * x - b).cwiseAbs().maxCoeff();
        if (res > kExtractionTol)
          throw std::runtime_error("dn_w_values: extraction residual " + std::to_string(res) + " for j=" + j.str() +
                                   " j'=" + jp.str());
        for (std::size_t c = 0; c < qs.size(); ++c) {
          auto& acc = sums[SectorIndex{j1, j, jp, qs[c]}];
          acc.first += x(static_cast<Eigen::Index>(c));
          acc.second += 1;
        }
      }
    }
  }
  WTable w;
  for (const auto& [k, v] : sums) w[k] = v.first / v.second;
  return w;
}

constexpr const char* kKrausSchema = "qsub.kraus/1";

struct KrausFile {
  KrausSet kraus;
  int n1 = 0;
  int n2 = 0;
  double p = 0.0;
  double reference = 0.0;  // fidelity the channel is expected to reach
  std::string source;
};

inline nlohmann::json to_json(const KrausFile& f) {
  nlohmann::json j;
  j["schema"] = kKrausSchema;
  j["n_in_qubits"] = f.kraus.n_in;
  j["n1"] = f.n1;
  j["n2"] = f.n2;
  j["p"] = f.p;
  j["reference_fidelity"] = f.reference;
  j["source"] = f.source;
  auto& ops = j["operators"] = nlohmann::json::array();
  for (const auto& m : f.kraus.operators) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
      rows.push_back(std::move(row));
    }
    ops.push_back(std::move(rows));
  }
  return j;
}

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline KrausFile kraus_file_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw SchemaError(std::string("kraus json: missing field '") + key + "'");
    return j.at(key);
  };
  try {
    if (need("schema").get<std::string>() != kKrausSchema) throw SchemaError("kraus json: unsupported schema");
    KrausFile f;
    f.kraus.n_in = need("n_in_qubits").get<int>();
    f.n1 = need("n1").get<int>();
    f.n2 = need("n2").get<int>();
    f.p = need("p").get<double>();
    f.reference = need("reference_fidelity").get<double>();
    f.source = j.value("source", "");
    if (f.kraus.n_in < 1 || f.kraus.n_in > kMaxBasisQubits || f.n1 + f.n2 != f.kraus.n_in)
      throw SchemaError("kraus json: inconsistent qubit counts");
    const auto cols = Eigen::Index{1} << f.kraus.n_in;
    for (const auto& op : need("operators")) {
      if (op.size() != 2) throw SchemaError("kraus json: operator must have 2 rows");
      MatrixXcd m(2, cols);
      for (Eigen::Index r = 0; r < 2; ++r) {
        const auto& row = op.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError("kraus json: operator row length mismatch");
        for (Eigen::Index c = 0; c < cols; ++c) {
          const auto& z = row.at(static_cast<std::size_t>(c));
          if (!z.is_array() || z.size() != 2) throw SchemaError("kraus json: entries must be [re, im] pairs");
          m(r, c) = cplx(z[0].get<double>(), z[1].get<double>());
        }
      }
      f.kraus.operators.push_back(std::move(m));
    }
    if (f.kraus.operators.empty()) throw SchemaError("kraus json: no operators");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("kraus json: ") + e.what());
  }
}

}  // namespace qsub
