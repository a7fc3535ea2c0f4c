#pragma once

// Small dense semidefinite programs in the standard primal form
//
//   maximize   sum_b <C_b, X_b>
//   subject to sum_b <A_ib, X_b> = b_i,   X_b symmetric PSD,
//
// solved by an infeasible primal-dual interior-point method (HKM search
// direction, Mehrotra predictor-corrector). Blocks are real symmetric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace qsub::sdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One coefficient of a linear row: `value * X_block(row, col)`.
/// Off-diagonal entries refer to the single element X(row, col) = X(col, row).
struct Entry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct LinearRow {
  std::vector<Entry> terms;
  double rhs = 0.0;
};

struct Problem {
  std::vector<int> block_dims;
  std::vector<Matrix> objective;  // symmetric, one per block
  std::vector<LinearRow> equalities;

  int total_dim() const {
    int n = 0;
    for (int d : block_dims) n += d;
    return n;
  }

  void validate() const {
    if (block_dims.empty()) throw std::invalid_argument("sdp: problem has no blocks");
    if (objective.size() != block_dims.size()) throw std::invalid_argument("sdp: objective/block count mismatch");
    for (std::size_t b = 0; b < block_dims.size(); ++b) {
      if (block_dims[b] < 1) throw std::invalid_argument("sdp: block dimension must be >= 1");
      if (objective[b].rows() != block_dims[b] || objective[b].cols() != block_dims[b]) {
        throw std::invalid_argument("sdp: objective block has wrong shape");
      }
    }
    for (const auto& r : equalities) {
      for (const auto& e : r.terms) {
        if (e.block < 0 || e.block >= static_cast<int>(block_dims.size()) || e.row < 0 || e.col < 0 ||
            e.row >= block_dims[e.block] || e.col >= block_dims[e.block]) {
          throw std::invalid_argument("sdp: constraint entry out of range");
        }
      }
    }
  }
};

struct SolverConfig {
  double feas_tol = 1e-9;
  double psd_tol = 1e-9;
  double gap_tol = 1e-7;
  int max_iterations = 200;
  std::uint64_t seed = 0;  // reserved; the method is deterministic
};

enum class Status { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalError };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::DualInfeasible: return "dual_infeasible";
    case Status::MaxIterations: return "max_iterations";
    case Status::NumericalError: return "numerical_error";
  }
  return "unknown";
}

struct Solution {
  Status status = Status::NumericalError;
  std::vector<Matrix> blocks;
  Vector dual;
  double objective_value = 0.0;
  double dual_value = 0.0;
  double primal_residual = 0.0;  // max |A(X) - b|
  double dual_residual = 0.0;    // max |A^T y - Z - C|
  double min_eigenvalue = 0.0;   // most negative block eigenvalue, clipped at 0
  double gap_estimate = 0.0;     // |primal - dual| objective
  int iterations = 0;

  bool ok() const { return status == Status::Optimal; }
};

namespace detail {

// Constraint row expanded to symmetric form: A(r,c) = A(c,r) = value/2 off the diagonal.
struct SymEntry {
  int row;
  int col;
  double value;
};

struct BlockRow {
  int block;
  std::vector<SymEntry> entries;
};

using ExpandedRow = std::vector<BlockRow>;

inline std::vector<ExpandedRow> expand(const Problem& prob) {
  std::vector<ExpandedRow> rows;
  rows.reserve(prob.equalities.size());
  for (const auto& r : prob.equalities) {
    ExpandedRow er;
    auto block_row = [&er](int b) -> BlockRow& {
      for (auto& br : er)
        if (br.block == b) return br;
      er.push_back({b, {}});
      return er.back();
    };
    for (const auto& e : r.terms) {
      auto& br = block_row(e.block);
      if (e.row == e.col) {
        br.entries.push_back({e.row, e.col, e.value});
      } else {
        br.entries.push_back({e.row, e.col, 0.5 * e.value});
        br.entries.push_back({e.col, e.row, 0.5 * e.value});
      }
    }
    rows.push_back(std::move(er));
  }
  return rows;
}

inline double apply_row(const ExpandedRow& row, const std::vector<Matrix>& X) {
  double s = 0.0;
  for (const auto& br : row)
    for (const auto& e : br.entries) s += e.value * X[br.block](e.row, e.col);
  return s;
}

inline Vector apply_A(const std::vector<ExpandedRow>& rows, const std::vector<Matrix>& X) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = apply_row(rows[i], X);
  return out;
}

// A(M) for non-symmetric M (uses the symmetric part implicitly).
inline Vector apply_A_general(const std::vector<ExpandedRow>& rows, const std::vector<Matrix>& M) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = 0.0;
    for (const auto& br : rows[i])
      for (const auto& e : br.entries) s += e.value * M[br.block](e.col, e.row);
    out[static_cast<Eigen::Index>(i)] = s;
  }
  return out;
}

inline std::vector<Matrix> apply_At(const Problem& prob, const std::vector<ExpandedRow>& rows, const Vector& y) {
  std::vector<Matrix> out;
  out.reserve(prob.block_dims.size());
  for (int d : prob.block_dims) out.push_back(Matrix::Zero(d, d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double yi = y[static_cast<Eigen::Index>(i)];
    for (const auto& br : rows[i])
      for (const auto& e : br.entries) out[br.block](e.row, e.col) += yi * e.value;
  }
  return out;
}

inline double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

inline double frob(const std::vector<Matrix>& a) { return std::sqrt(inner(a, a)); }

inline double max_abs(const std::vector<Matrix>& a) {
  double m = 0.0;
  for (const auto& x : a) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

inline double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0);
  if (m.rows() == 2) {
    const double a = m(0, 0), c = m(1, 1), b = 0.5 * (m(0, 1) + m(1, 0));
    const double mid = 0.5 * (a + c), rad = std::hypot(0.5 * (a - c), b);
    return mid - rad;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double min_eigenvalue(const std::vector<Matrix>& a) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& x : a) m = std::min(m, min_eigenvalue(x));
  return m;
}

// Largest alpha with X + alpha dX PSD (infinity when unbounded).
inline double max_step(const Matrix& X, const Matrix& dX) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const Matrix L = llt.matrixL();
  Matrix W = L.triangularView<Eigen::Lower>().solve(dX);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).transpose();
  const double lmin = min_eigenvalue(W);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

inline double max_step(const std::vector<Matrix>& X, const std::vector<Matrix>& dX) {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < X.size(); ++k) a = std::min(a, max_step(X[k], dX[k]));
  return a;
}

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Schur complement O_ij = sum_b tr(A_ib X_b A_jb Zinv_b).
inline Matrix schur(const std::vector<ExpandedRow>& rows, const std::vector<Matrix>& X,
                    const std::vector<Matrix>& Zinv) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Matrix O = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      double s = 0.0;
      for (const auto& bi : rows[static_cast<std::size_t>(i)]) {
        for (const auto& bj : rows[static_cast<std::size_t>(j)]) {
          if (bi.block != bj.block) continue;
          const Matrix& Xb = X[bi.block];
          const Matrix& Zb = Zinv[bi.block];
          for (const auto& ei : bi.entries)
            for (const auto& ej : bj.entries) s += ei.value * ej.value * Xb(ei.col, ej.row) * Zb(ej.col, ei.row);
        }
      }
      O(i, j) = s;
      O(j, i) = s;
    }
  }
  return O;
}

class SchurSolver {
 public:
  explicit SchurSolver(const Matrix& O) {
    llt_.compute(O);
    use_llt_ = llt_.info() == Eigen::Success;
    if (!use_llt_) {
      const double reg = 1e-14 * std::max(1.0, O.diagonal().cwiseAbs().maxCoeff());
      ldlt_.compute(O + reg * Matrix::Identity(O.rows(), O.cols()));
    }
  }
  Vector solve(const Vector& r) const { return use_llt_ ? Vector(llt_.solve(r)) : Vector(ldlt_.solve(r)); }
  bool ok() const { return use_llt_ || ldlt_.info() == Eigen::Success; }

 private:
  Eigen::LLT<Matrix> llt_;
  Eigen::LDLT<Matrix> ldlt_;
  bool use_llt_ = false;
};

}  // namespace detail

/// Solve a block SDP; see the header comment for the problem form.
inline Solution solve(const Problem& prob, const SolverConfig& config = {}) {
  using namespace detail;
  prob.validate();
  if (!(config.feas_tol > 0 && config.psd_tol > 0 && config.gap_tol > 0)) {
    throw std::invalid_argument("sdp: tolerances must be positive");
  }
  const auto rows = expand(prob);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const std::size_t nb = prob.block_dims.size();
  const double n_total = prob.total_dim();

  Vector b(m);
  for (Eigen::Index i = 0; i < m; ++i) b[i] = prob.equalities[static_cast<std::size_t>(i)].rhs;
  const std::vector<Matrix>& C = prob.objective;

  // Initial point scaled to the data.
  double max_a_norm = 0.0, ratio = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double fn = 0.0;
    for (const auto& br : rows[static_cast<std::size_t>(i)])
      for (const auto& e : br.entries) fn += e.value * e.value;
    fn = std::sqrt(fn);
    max_a_norm = std::max(max_a_norm, fn);
    ratio = std::max(ratio, (1.0 + std::abs(b[i])) / (1.0 + fn));
  }
  const double c_norm = frob(C);
  const double b_norm = b.norm();
  const double x0 = std::max(1.0, n_total * ratio);
  const double z0 = std::max(1.0, (1.0 + std::max(max_a_norm, c_norm)) / std::sqrt(n_total));

  std::vector<Matrix> X, Z;
  for (int d : prob.block_dims) {
    X.push_back(x0 * Matrix::Identity(d, d));
    Z.push_back(z0 * Matrix::Identity(d, d));
  }
  Vector y = Vector::Zero(m);

  Solution sol;
  auto finish = [&](Status st, int iters) {
    sol.status = st;
    sol.blocks = X;
    sol.dual = y;
    sol.objective_value = inner(C, X);
    sol.dual_value = b.dot(y);
    const Vector rp = apply_A(rows, X) - b;
    sol.primal_residual = m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;
    auto Fd = apply_At(prob, rows, y);
    for (std::size_t k = 0; k < nb; ++k) Fd[k] -= Z[k] + C[k];
    sol.dual_residual = max_abs(Fd);
    sol.min_eigenvalue = std::min(0.0, min_eigenvalue(X));
    sol.gap_estimate = std::abs(sol.objective_value - sol.dual_value);
    sol.iterations = iters;
    return sol;
  };

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const Vector Ax = apply_A(rows, X);
    const Vector rp = b - Ax;
    std::vector<Matrix> Fd = apply_At(prob, rows, y);
    for (std::size_t k = 0; k < nb; ++k) Fd[k] -= Z[k] + C[k];

    const double pobj = inner(C, X);
    const double dobj = b.dot(y);
    const double mu = inner(X, Z) / n_total;
    const double pinf = rp.norm() / (1.0 + b_norm);
    const double dinf = frob(Fd) / (1.0 + c_norm);
    const double rgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (pinf < config.feas_tol && dinf < config.feas_tol && rgap < config.gap_tol &&
        min_eigenvalue(X) >= -config.psd_tol) {
      return finish(Status::Optimal, iter);
    }

    // Infeasibility certificates from diverging iterates.
    const double y_norm = y.norm();
    if (y_norm > 1e8 && dobj < 0.0) {
      auto Aty = apply_At(prob, rows, y);
      if (min_eigenvalue(Aty) / std::abs(dobj) > -1e-6 && -dobj / y_norm > 1e-8 * (1.0 + b_norm)) {
        return finish(Status::PrimalInfeasible, iter);
      }
    }
    double x_norm = frob(X);
    if (x_norm > 1e8 && pobj > 0.0) {
      if ((Ax).norm() / pobj < 1e-6 && pobj / x_norm > 1e-8) return finish(Status::DualInfeasible, iter);
    }

    std::vector<Matrix> Zinv(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> llt(Z[k]);
      if (llt.info() != Eigen::Success) return finish(Status::NumericalError, iter);
      Zinv[k] = llt.solve(Matrix::Identity(Z[k].rows(), Z[k].cols()));
      Zinv[k] = sym(Zinv[k]);
    }

    const Matrix O = schur(rows, X, Zinv);
    const SchurSolver solver(O);
    if (!solver.ok()) return finish(Status::NumericalError, iter);

    // Direction for target sigma*mu with optional second-order term R.
    auto direction = [&](double target, const std::vector<Matrix>* R, std::vector<Matrix>& dX, Vector& dy,
                         std::vector<Matrix>& dZ) {
      std::vector<Matrix> G(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        Matrix g = target * Zinv[k] - X[k] * Fd[k] * Zinv[k];
        if (R) g -= (*R)[k] * Zinv[k];
        G[k] = g;
      }
      const Vector rhs = apply_A_general(rows, G) - b;
      dy = solver.solve(rhs);
      dZ = apply_At(prob, rows, dy);
      for (std::size_t k = 0; k < nb; ++k) dZ[k] += Fd[k];
      dX.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        Matrix d = target * Zinv[k] - X[k] - X[k] * dZ[k] * Zinv[k];
        if (R) d -= (*R)[k] * Zinv[k];
        dX[k] = sym(d);
      }
    };

    std::vector<Matrix> dXa, dZa;
    Vector dya;
    direction(0.0, nullptr, dXa, dya, dZa);
    const double ap_a = std::min(1.0, max_step(X, dXa));
    const double ad_a = std::min(1.0, max_step(Z, dZa));
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mu_aff += ((X[k] + ap_a * dXa[k]).cwiseProduct(Z[k] + ad_a * dZa[k])).sum();
    mu_aff /= n_total;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    std::vector<Matrix> R(nb);
    for (std::size_t k = 0; k < nb; ++k) R[k] = dXa[k] * dZa[k];
    std::vector<Matrix> dX, dZ;
    Vector dy;
    direction(sigma * mu, &R, dX, dy, dZ);

    const double ap = std::min(1.0, 0.95 * max_step(X, dX));
    const double ad = std::min(1.0, 0.95 * max_step(Z, dZ));
    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) || !std::isfinite(ad)) {
      return finish(Status::NumericalError, iter);
    }
    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * dX[k]);
      Z[k] = sym(Z[k] + ad * dZ[k]);
    }
    y += ad * dy;
  }
  return finish(Status::MaxIterations, config.max_iterations);
}

struct CertificateReport {
  bool pass = false;
  double primal_residual = 0.0;
  double min_eigenvalue = 0.0;
  double objective_value = 0.0;
  std::vector<std::string> failures;
};

/// Independent feasibility audit of a solution: residuals recomputed from the
/// sparse rows, 2x2 blocks by the diagonal/determinant test, larger blocks by
/// eigenvalues.
inline CertificateReport check_certificate(const Problem& prob, const Solution& sol, double tol = 1e-8) {
  CertificateReport rep;
  rep.pass = true;
  if (sol.blocks.size() != prob.block_dims.size()) {
    rep.pass = false;
    rep.failures.push_back("block count mismatch");
    return rep;
  }
  for (std::size_t i = 0; i < prob.equalities.size(); ++i) {
    const auto& r = prob.equalities[i];
    double s = 0.0;
    for (const auto& e : r.terms) s += e.value * sol.blocks[static_cast<std::size_t>(e.block)](e.row, e.col);
    const double res = std::abs(s - r.rhs);
    rep.primal_residual = std::max(rep.primal_residual, res);
    if (res > tol) {
      rep.pass = false;
      rep.failures.push_back("equality " + std::to_string(i) + " violated by " + std::to_string(res));
    }
  }
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sol.blocks.size(); ++k) {
    const Matrix& x = sol.blocks[k];
    bool ok = true;
    if (x.rows() == 1) {
      ok = x(0, 0) >= -tol;
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, x(0, 0));
    } else if (x.rows() == 2) {
      const double a = x(0, 0), c = x(1, 1), b = x(0, 1);
      ok = a >= -tol && c >= -tol && b * b <= a * c + tol;
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, detail::min_eigenvalue(x));
    } else {
      const double lmin = detail::min_eigenvalue(x);
      ok = lmin >= -tol;
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, lmin);
    }
    if (!ok) {
      rep.pass = false;
      rep.failures.push_back("block " + std::to_string(k) + " is not positive semidefinite");
    }
  }
  double obj = 0.0;
  for (std::size_t k = 0; k < sol.blocks.size(); ++k) obj += prob.objective[k].cwiseProduct(sol.blocks[k]).sum();
  rep.objective_value = obj;
  return rep;
}

}  // namespace qsub::sdp
