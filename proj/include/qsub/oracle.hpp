#pragma once

// Symmetry-free verification path: Omega in the computational basis, the
// exact SU(2) twirl of the fidelity operator through the permutation
// commutant, and the unrestricted Choi-matrix SDP.
//
// Conventions: qubit 0 is the most significant bit, |0> = |up>. A Choi
// matrix is indexed (a, s) -> 2 a + s with the N-qubit input a first:
//   J[(a,s),(b,s')] = <s| L(|a><b|) |s'>,  Tr[J (rho^T x B)] = Tr[L(rho) B].
// Every operator built here is real in that basis.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qsub/mcsim.hpp"
#include "qsub/sdp.hpp"

namespace qsub {

using Eigen::MatrixXd;

namespace detail {

inline double binomial_d(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Bits of x at the positions set in mask (MSB-first qubit order), packed.
inline std::uint32_t gather_bits(std::uint32_t x, std::uint32_t mask) {
  std::uint32_t out = 0;
  for (int b = 31; b >= 0; --b) {
    if (!((mask >> b) & 1u)) continue;
    out = (out << 1) | ((x >> b) & 1u);
  }
  return out;
}

}  // namespace detail

/// Projector onto the symmetric subspace of m qubits.
inline MatrixXd sym_projector(int m) {
  if (m < 1 || m > 7) throw std::domain_error("sym_projector: m must lie in [1, 7]");
  const int d = 1 << m;
  MatrixXd P = MatrixXd::Zero(d, d);
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y) {
      const int w = std::popcount(static_cast<unsigned>(x));
      if (w == std::popcount(static_cast<unsigned>(y))) P(x, y) = 1.0 / detail::binomial_d(m, w);
    }
  return P;
}

struct OmegaOperator {
  int n1 = 0;
  int n2 = 0;
  double p = 0.0;
  MatrixXd matrix;
};

constexpr int kMaxOmegaQubits = 6;

/// Omega = sum_k (1-p)^k p^(n1-k) sum_{S in A, |S|=k} |up><up|_S x Psym(rest)/(N-k+1),
/// where the rest is the complement of S in A together with all of B.
inline OmegaOperator build_omega(int n1, int n2, double p) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("build_omega: n1 and n2 must be >= 1");
  if (n1 + n2 > kMaxOmegaQubits) throw std::length_error("build_omega: n1 + n2 exceeds dense limit");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("build_omega: p must lie in [0, 1]");
  const int N = n1 + n2;
  const std::uint32_t d = 1u << N;
  const std::uint32_t all = d - 1;
  OmegaOperator om{n1, n2, p, MatrixXd::Zero(d, d)};
  for (std::uint32_t s = 0; s < (1u << n1); ++s) {
    const int k = std::popcount(s);
    const double weight = std::pow(1.0 - p, k) * std::pow(p, n1 - k);
    if (weight == 0.0) continue;
    const std::uint32_t up_mask = s << n2;  // A occupies the top n1 bits
    const std::uint32_t rest = all & ~up_mask;
    const int m = N - k;
    for (std::uint32_t x = 0; x < d; ++x) {
      if (x & up_mask) continue;
      const int wx = std::popcount(detail::gather_bits(x, rest));
      for (std::uint32_t y = 0; y < d; ++y) {
        if (y & up_mask) continue;
        if (std::popcount(detail::gather_bits(y, rest)) != wx) continue;
        om.matrix(x, y) += weight / (detail::binomial_d(m, wx) * (m + 1));
      }
    }
  }
  return om;
}

/// Permutations of {0..m-1} in lexicographic order.
inline std::vector<std::vector<int>> permutations(int m) {
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline int cycle_count(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  int cycles = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    ++cycles;
    for (auto j = i; !seen[j]; j = static_cast<std::size_t>(perm[j])) seen[j] = true;
  }
  return cycles;
}

/// Basis index reached by moving qubit i of x to position perm[i].
inline std::uint32_t permute_bits(std::uint32_t x, const std::vector<int>& perm) {
  const int m = static_cast<int>(perm.size());
  std::uint32_t y = 0;
  for (int i = 0; i < m; ++i) {
    const std::uint32_t bit = (x >> (m - 1 - i)) & 1u;
    y |= bit << (m - 1 - perm[static_cast<std::size_t>(i)]);
  }
  return y;
}

/// Dense permutation operator P|x> = |perm . x>.
inline MatrixXd permutation_operator(const std::vector<int>& perm) {
  const std::uint32_t d = 1u << perm.size();
  MatrixXd P = MatrixXd::Zero(d, d);
  for (std::uint32_t x = 0; x < d; ++x) P(permute_bits(x, perm), x) = 1.0;
  return P;
}

struct TwirlResult {
  MatrixXd matrix;
  double gram_residual = 0.0;
};

/// Orthogonal projection of X onto span{P_sigma} (the u^{x m} commutant).
inline TwirlResult permutation_twirl(const MatrixXd& X, int m) {
  if (m < 1 || m > 6) throw std::length_error("permutation_twirl: m must lie in [1, 6]");
  const std::uint32_t d = 1u << m;
  if (X.rows() != d || X.cols() != d) throw std::invalid_argument("permutation_twirl: dimension mismatch");
  const auto perms = permutations(m);
  const auto np = static_cast<Eigen::Index>(perms.size());
  std::vector<std::vector<std::uint32_t>> images(perms.size(), std::vector<std::uint32_t>(d));
  for (std::size_t i = 0; i < perms.size(); ++i)
    for (std::uint32_t x = 0; x < d; ++x) images[i][x] = permute_bits(x, perms[i]);

  MatrixXd G(np, np);
  Eigen::VectorXd t(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    // Tr[P_i^T P_j] counts x with perm_i . x == perm_j . x
    for (Eigen::Index j = i; j < np; ++j) {
      std::uint32_t c = 0;
      for (std::uint32_t x = 0; x < d; ++x) c += images[i][x] == images[j][x];
      G(i, j) = G(j, i) = c;
    }
    double s = 0.0;
    for (std::uint32_t x = 0; x < d; ++x) s += X(images[i][x], x);
    t(i) = s;
  }
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(G);
  const Eigen::VectorXd c = cod.solve(t);
  TwirlResult out;
  out.gram_residual = (G * c - t).norm() / std::max(1.0, t.norm());
  out.matrix = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < np; ++i)
    for (std::uint32_t x = 0; x < d; ++x) out.matrix(images[static_cast<std::size_t>(i)][x], x) += c(i);
  return out;
}

/// (Y x I) X (Y x I) with Y = sigma_y^{x n} on the leading n qubits of n + tail qubits.
inline MatrixXd spin_flip_leading(const MatrixXd& X, int n, int tail) {
  const std::uint32_t d = 1u << (n + tail);
  const std::uint32_t flip = ((1u << n) - 1) << tail;
  MatrixXd out(d, d);
  for (std::uint32_t a = 0; a < d; ++a)
    for (std::uint32_t b = 0; b < d; ++b) {
      const int sign = (std::popcount(a & flip) + std::popcount(b & flip)) % 2 == 0 ? 1 : -1;
      out(a, b) = sign * X(a ^ flip, b ^ flip);
    }
  return out;
}

struct TwirledObjective {
  int n_in = 0;
  MatrixXd matrix;  // 2^(N+1) square, input first
  double gram_residual = 0.0;
};

/// F(L) = Tr[J(L) O] for every channel L, with O twirled over u-bar^{x N} x u.
inline TwirledObjective twirl_objective(const OmegaOperator& omega) {
  const int N = omega.n1 + omega.n2;
  if (N + 1 > 6) throw std::length_error("twirl_objective: N + 1 exceeds the permutation-group limit");
  MatrixXd up = MatrixXd::Zero(2, 2);
  up(0, 0) = 1.0;
  MatrixXd X = Eigen::kroneckerProduct(omega.matrix.transpose(), up);
  const auto tw = permutation_twirl(spin_flip_leading(X, N, 1), N + 1);
  if (tw.gram_residual > 1e-8) throw std::runtime_error("twirl_objective: Gram system residual too large");
  return {N, spin_flip_leading(tw.matrix, N, 1), tw.gram_residual};
}

/// Sample mean of (u-bar^{x N} x u) X (...)^dagger over Haar u; a slow cross-check of twirl_objective.
inline TwirledObjective twirl_objective_mc(const OmegaOperator& omega, std::int64_t samples, std::uint64_t seed) {
  const int N = omega.n1 + omega.n2;
  MatrixXd up = MatrixXd::Zero(2, 2);
  up(0, 0) = 1.0;
  const MatrixXcd X = Eigen::kroneckerProduct(omega.matrix.transpose(), up).eval().cast<cplx>();
  const auto D = X.rows();
  HaarSampler sampler(seed);
  MatrixXcd acc = MatrixXcd::Zero(D, D);
  for (std::int64_t i = 0; i < samples; ++i) {
    const Eigen::Matrix2cd u = sampler.sample_su2();
    MatrixXcd g = MatrixXcd::Identity(1, 1);
    for (int k = 0; k < N; ++k) g = Eigen::kroneckerProduct(g, u.conjugate()).eval();
    g = Eigen::kroneckerProduct(g, u).eval();
    acc += g * X * g.adjoint();
  }
  return {N, (acc.real() / static_cast<double>(samples)).eval(), 0.0};
}

/// Choi matrix of "keep qubit 0, discard the rest" on N input qubits.
inline MatrixXd dn_choi(int N) {
  const std::uint32_t d = 1u << N;
  const std::uint32_t low = (1u << (N - 1)) - 1;
  MatrixXd J = MatrixXd::Zero(2 * d, 2 * d);
  for (std::uint32_t a = 0; a < d; ++a)
    for (std::uint32_t b = 0; b < d; ++b) {
      if ((a & low) != (b & low)) continue;
      const std::uint32_t s = a >> (N - 1), sp = b >> (N - 1);
      J(2 * a + s, 2 * b + sp) = 1.0;
    }
  return J;
}

inline double choi_objective(const MatrixXd& J, const TwirledObjective& obj) {
  return J.cwiseProduct(obj.matrix).sum();
}

/// Choi SDP: max Tr[J O] over J >= 0 with Tr_out J = identity.
inline sdp::Problem choi_problem(const TwirledObjective& obj) {
  const auto D = obj.matrix.rows();
  if (D > 128) throw std::length_error("choi_problem: dimension above 128");
  const int d = static_cast<int>(D / 2);
  sdp::Problem prob;
  prob.block_dims = {static_cast<int>(D)};
  prob.objective = {0.5 * (obj.matrix + obj.matrix.transpose())};
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      sdp::LinearRow row;
      row.rhs = a == b ? 1.0 : 0.0;
      for (int s = 0; s < 2; ++s) row.terms.push_back({0, 2 * a + s, 2 * b + s, 1.0});
      prob.equalities.push_back(std::move(row));
    }
  return prob;
}

inline sdp::Solution solve_choi(const TwirledObjective& obj, const sdp::SolverConfig& config = {}) {
  return sdp::solve(choi_problem(obj), config);
}

}  // namespace qsub
