#pragma once

// Monte-Carlo estimate of the average fidelity of a Kraus channel over
// Haar-random target and reference states.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace qsub {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::Vector2cd;

/// Counter-based SplitMix64 stream: draw i depends only on (seed, i).
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform in (0, 1].
inline double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

class HaarSampler {
 public:
  static constexpr std::uint64_t kDrawsPerState = 4;

  explicit HaarSampler(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  /// Normalized complex Gaussian 2-vector (Box-Muller on four draws).
  Vector2cd sample_state() {
    double g[4];
    for (int i = 0; i < 2; ++i) {
      const double r = std::sqrt(-2.0 * std::log(to_unit(next())));
      const double th = 2.0 * std::numbers::pi * to_unit(next());
      g[2 * i] = r * std::cos(th);
      g[2 * i + 1] = r * std::sin(th);
    }
    Vector2cd v(cplx(g[0], g[1]), cplx(g[2], g[3]));
    return v / v.norm();
  }

  /// SU(2) element whose first column is a Haar state.
  Eigen::Matrix2cd sample_su2() {
    const Vector2cd v = sample_state();
    Eigen::Matrix2cd u;
    u << v(0), -std::conj(v(1)), v(1), std::conj(v(0));
    return u;
  }

 private:
  std::uint64_t next() { return splitmix64(seed_, counter_++); }

  std::uint64_t seed_;
  std::uint64_t counter_;
};

struct KrausSet {
  int n_in = 0;
  std::vector<MatrixXcd> operators;  // each 2 x 2^n_in

  /// max |sum M^dagger M - I|
  double completeness_residual() const {
    const auto d = Eigen::Index{1} << n_in;
    MatrixXcd s = MatrixXcd::Zero(d, d);
    for (const auto& m : operators) s += m.adjoint() * m;
    return (s - MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
  }
};

inline MatrixXcd apply_kraus(const KrausSet& k, const MatrixXcd& rho) {
  const auto d = Eigen::Index{1} << k.n_in;
  if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("apply_kraus: dimension mismatch");
  MatrixXcd out = MatrixXcd::Zero(2, 2);
  for (const auto& m : k.operators) out += m * rho * m.adjoint();
  return out;
}

/// rho_mix^{x n1} x (phi phi^dagger)^{x n2}, rho_mix = (1-p) psi psi^dagger + p phi phi^dagger.
inline MatrixXcd input_state(const Vector2cd& psi, const Vector2cd& phi, int n1, int n2, double p) {
  const Eigen::Matrix2cd ref = phi * phi.adjoint();
  const Eigen::Matrix2cd mix = (1.0 - p) * (psi * psi.adjoint()) + p * ref;
  MatrixXcd rho = MatrixXcd::Identity(1, 1);
  for (int i = 0; i < n1; ++i) rho = Eigen::kroneckerProduct(rho, mix).eval();
  for (int i = 0; i < n2; ++i) rho = Eigen::kroneckerProduct(rho, ref).eval();
  return rho;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

namespace detail {
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const auto h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}
}  // namespace detail

/// Sample i draws psi then phi from counters [8 i, 8 i + 8) of the seed's stream,
/// so the estimate does not depend on the number of jobs.
inline McEstimate estimate_fidelity(const KrausSet& kraus, int n1, int n2, double p, std::int64_t samples,
                                    std::uint64_t seed, int jobs = 1) {
  if (kraus.n_in != n1 + n2) throw std::invalid_argument("estimate_fidelity: Kraus input size differs from n1 + n2");
  for (const auto& m : kraus.operators)
    if (m.rows() != 2 || m.cols() != (Eigen::Index{1} << kraus.n_in))
      throw std::invalid_argument("estimate_fidelity: Kraus operator shape mismatch");
  if (samples < 2) throw std::invalid_argument("estimate_fidelity: need at least two samples");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("estimate_fidelity: p must lie in [0, 1]");

  std::vector<double> values(static_cast<std::size_t>(samples));
  auto work = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      HaarSampler s(seed, static_cast<std::uint64_t>(i) * 2 * HaarSampler::kDrawsPerState);
      const Vector2cd psi = s.sample_state();
      const Vector2cd phi = s.sample_state();
      const MatrixXcd out = apply_kraus(kraus, input_state(psi, phi, n1, n2, p));
      values[static_cast<std::size_t>(i)] = std::real(psi.dot(out * psi));
    }
  };
  jobs = std::clamp<int>(jobs, 1, static_cast<int>(std::min<std::int64_t>(samples, 256)));
  if (jobs == 1) {
    work(0, samples);
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work, samples * j / jobs, samples * (j + 1) / jobs);
  }

  McEstimate est;
  est.samples = samples;
  est.mean = detail::pairwise_sum(values) / static_cast<double>(samples);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [&](double v) { return (v - est.mean) * (v - est.mean); });
  const double var = detail::pairwise_sum(dev) / static_cast<double>(samples - 1);
  est.std_error = std::sqrt(var / static_cast<double>(samples));
  return est;
}

}  // namespace qsub
