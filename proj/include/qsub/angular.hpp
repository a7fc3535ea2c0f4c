#pragma once

// Angular-momentum bookkeeping for spin-1/2 registers: exact half-integer
// labels, Clebsch-Gordan coefficients (Condon-Shortley phase), S_n
// multiplicities and the (j1, j, j', q) sectors of the covariant channel
// parametrisation.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace qsub {

/// Half-integer stored as twice its value.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  constexpr explicit HalfInt(int whole) : twice_(2 * whole) {}

  static constexpr HalfInt from_twice(int twice) {
    HalfInt h;
    h.twice_ = twice;
    return h;
  }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  constexpr HalfInt operator-() const { return from_twice(-twice_); }
  constexpr HalfInt& operator+=(HalfInt o) {
    twice_ += o.twice_;
    return *this;
  }
  constexpr HalfInt& operator-=(HalfInt o) {
    twice_ -= o.twice_;
    return *this;
  }
  friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return a += b; }
  friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return a -= b; }
  friend constexpr auto operator<=>(HalfInt, HalfInt) = default;

  std::string str() const {
    if (is_integer()) return std::to_string(twice_ / 2);
    return std::to_string(twice_) + "/2";
  }

 private:
  int twice_ = 0;
};

constexpr HalfInt half(int twice) { return HalfInt::from_twice(twice); }
constexpr HalfInt kHalf = half(1);

constexpr HalfInt abs(HalfInt h) { return h.twice() < 0 ? -h : h; }

/// Integer value of a half-integer known to be whole.
constexpr int whole(HalfInt h) { return h.twice() / 2; }

/// {lo, lo+1, ..., hi}; empty when lo > hi.
inline std::vector<HalfInt> spin_range(HalfInt lo, HalfInt hi) {
  std::vector<HalfInt> out;
  for (int t = lo.twice(); t <= hi.twice(); t += 2) out.push_back(half(t));
  return out;
}

/// Magnetic labels -j, -j+1, ..., j.
inline std::vector<HalfInt> magnetic_range(HalfInt j) { return spin_range(-j, j); }

struct CgKey {
  HalfInt j1, m1, j2, m2, J, M;
};

namespace detail {

inline bool triangle(HalfInt a, HalfInt b, HalfInt c) {
  return c >= abs(a - b) && c <= a + b && ((a + b + c).is_integer());
}

inline bool cg_selection(const CgKey& k) {
  if (k.j1.twice() < 0 || k.j2.twice() < 0 || k.J.twice() < 0) return false;
  if (abs(k.m1) > k.j1 || abs(k.m2) > k.j2 || abs(k.M) > k.J) return false;
  if (!(k.j1 - k.m1).is_integer() || !(k.j2 - k.m2).is_integer() || !(k.J - k.M).is_integer()) {
    return false;
  }
  if (k.m1 + k.m2 != k.M) return false;
  return triangle(k.j1, k.j2, k.J);
}

constexpr int kLogFactorialTableSize = 1024;

inline const std::array<long double, kLogFactorialTableSize>& log_factorials() {
  static const auto table = [] {
    std::array<long double, kLogFactorialTableSize> t{};
    t[0] = 0.0L;
    for (int i = 1; i < kLogFactorialTableSize; ++i) t[i] = t[i - 1] + std::log(static_cast<long double>(i));
    return t;
  }();
  return table;
}

inline long double log_fact(int n) {
  if (n < 0 || n >= kLogFactorialTableSize) throw std::out_of_range("log_fact argument out of range");
  return log_factorials()[n];
}

}  // namespace detail

/// Clebsch-Gordan coefficient <J M | j1 m1; j2 m2> by the Racah formula.
/// Returns 0 whenever a selection rule fails.
inline double cg(const CgKey& k) {
  using detail::log_fact;
  if (!detail::cg_selection(k)) return 0.0;
  // All combinations below are integers once the selection rules hold.
  const int a = whole(k.j1 + k.j2 - k.J);
  const int b = whole(k.j1 - k.m1);
  const int c = whole(k.j2 + k.m2);
  const int d = whole(k.J - k.j2 + k.m1);
  const int e = whole(k.J - k.j1 - k.m2);

  const long double log_pref =
      0.5L * (std::log(static_cast<long double>(k.J.twice() + 1)) + log_fact(whole(k.J + k.j1 - k.j2)) +
              log_fact(whole(k.J - k.j1 + k.j2)) + log_fact(a) - log_fact(whole(k.j1 + k.j2 + k.J) + 1) +
              log_fact(whole(k.J + k.M)) + log_fact(whole(k.J - k.M)) + log_fact(whole(k.j1 - k.m1)) +
              log_fact(whole(k.j1 + k.m1)) + log_fact(whole(k.j2 - k.m2)) + log_fact(whole(k.j2 + k.m2)));

  const int t_min = std::max({0, -d, -e});
  const int t_max = std::min({a, b, c});
  long double sum = 0.0L;
  for (int t = t_min; t <= t_max; ++t) {
    const long double log_den = log_fact(t) + log_fact(a - t) + log_fact(b - t) + log_fact(c - t) +
                                log_fact(d + t) + log_fact(e + t);
    const long double term = std::exp(log_pref - log_den);
    sum += (t % 2 == 0) ? term : -term;
  }
  return static_cast<double>(sum);
}

inline double cg(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  return cg(CgKey{j1, m1, j2, m2, J, M});
}

/// Exact coefficient as sign * sqrt(square).
struct ExactCg {
  int sign = 0;
  boost::multiprecision::cpp_rational square{0};

  double to_double() const {
    if (sign == 0) return 0.0;
    const auto v = static_cast<long double>(square);
    return static_cast<double>(sign * std::sqrt(v));
  }
};

namespace detail {
inline boost::multiprecision::cpp_int factorial_exact(int n) {
  boost::multiprecision::cpp_int r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}
}  // namespace detail

/// Racah formula in exact rational arithmetic.
inline ExactCg cg_exact(const CgKey& k) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  using detail::factorial_exact;
  ExactCg out;
  if (!detail::cg_selection(k)) return out;
  const int a = whole(k.j1 + k.j2 - k.J);
  const int b = whole(k.j1 - k.m1);
  const int c = whole(k.j2 + k.m2);
  const int d = whole(k.J - k.j2 + k.m1);
  const int e = whole(k.J - k.j1 - k.m2);

  const cpp_rational pref2 =
      cpp_rational(cpp_int(k.J.twice() + 1) * factorial_exact(whole(k.J + k.j1 - k.j2)) *
                       factorial_exact(whole(k.J - k.j1 + k.j2)) * factorial_exact(a),
                   factorial_exact(whole(k.j1 + k.j2 + k.J) + 1)) *
      cpp_rational(factorial_exact(whole(k.J + k.M)) * factorial_exact(whole(k.J - k.M)) *
                   factorial_exact(whole(k.j1 - k.m1)) * factorial_exact(whole(k.j1 + k.m1)) *
                   factorial_exact(whole(k.j2 - k.m2)) * factorial_exact(whole(k.j2 + k.m2)));

  cpp_rational sum = 0;
  const int t_min = std::max({0, -d, -e});
  const int t_max = std::min({a, b, c});
  for (int t = t_min; t <= t_max; ++t) {
    const cpp_int den = factorial_exact(t) * factorial_exact(a - t) * factorial_exact(b - t) *
                        factorial_exact(c - t) * factorial_exact(d + t) * factorial_exact(e + t);
    const cpp_rational term(1, den);
    if (t % 2 == 0) sum += term;
    else sum -= term;
  }
  if (sum == 0) return out;
  out.sign = sum > 0 ? 1 : -1;
  out.square = pref2 * sum * sum;
  return out;
}

/// Number of copies of the spin-j1 irrep in n1 qubits:
/// n1! (2 j1 + 1) / ((n1/2 - j1)! (n1/2 + j1 + 1)!).
inline std::uint64_t multiplicity(int n1, HalfInt j1) {
  if (n1 < 0) throw std::domain_error("multiplicity: n1 must be non-negative");
  if (j1.twice() < 0 || j1.twice() > n1) throw std::domain_error("multiplicity: j1 outside [0, n1/2]");
  if ((n1 - j1.twice()) % 2 != 0) throw std::domain_error("multiplicity: parity of 2*j1 and n1 differ");
  if (n1 > 120) throw std::domain_error("multiplicity: n1 too large");
  const int lower = (n1 - j1.twice()) / 2;
  // binom(n1, lower) * (2 j1 + 1) / (n1/2 + j1 + 1); the division is exact.
  boost::multiprecision::cpp_int binom = 1;
  for (int i = 0; i < lower; ++i) {
    binom *= (n1 - i);
    binom /= (i + 1);
  }
  const boost::multiprecision::cpp_int r = binom * (j1.twice() + 1) / (lower + j1.twice() + 1);
  return static_cast<std::uint64_t>(r);
}

/// Q_{j,j'} = {j +- 1/2} ∩ {j' +- 1/2}, negative labels removed, ascending.
inline std::vector<HalfInt> q_set(HalfInt j, HalfInt jp) {
  std::vector<HalfInt> out;
  for (HalfInt q : {j - kHalf, j + kHalf}) {
    if (q.twice() < 0) continue;
    if (q == jp - kHalf || q == jp + kHalf) out.push_back(q);
  }
  return out;
}

/// First-register spins n1/2, n1/2 - 1, ..., (0 or 1/2), descending.
inline std::vector<HalfInt> first_register_spins(int n1) {
  std::vector<HalfInt> out;
  for (int t = n1; t >= 0; t -= 2) out.push_back(half(t));
  return out;
}

/// Total spins reachable by coupling j1 with the symmetric n2-qubit register.
inline std::vector<HalfInt> coupled_spins(HalfInt j1, int n2) {
  const HalfInt b = half(n2);
  return spin_range(abs(j1 - b), j1 + b);
}

struct SectorIndex {
  HalfInt j1;
  HalfInt j;
  HalfInt jp;
  HalfInt q;

  friend constexpr auto operator<=>(const SectorIndex&, const SectorIndex&) = default;
};

inline std::string to_string(const SectorIndex& s) {
  return "(j1=" + s.j1.str() + ", j=" + s.j.str() + ", j'=" + s.jp.str() + ", q=" + s.q.str() + ")";
}

/// All (j1, j, j', q) with j <= j' carrying a covariant-channel parameter,
/// ordered by j1 descending, then q, j, j' ascending.
inline std::vector<SectorIndex> enumerate_sectors(int n1, int n2) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("enumerate_sectors: n1 and n2 must be >= 1");
  std::vector<SectorIndex> out;
  for (HalfInt j1 : first_register_spins(n1)) {
    const auto js = coupled_spins(j1, n2);
    // q runs over half-odd or integer labels adjacent to some valid j.
    const HalfInt q_lo = js.front().twice() == 0 ? kHalf : js.front() - kHalf;
    for (HalfInt q : spin_range(q_lo, js.back() + kHalf)) {
      for (HalfInt j : js) {
        for (HalfInt jp : js) {
          if (jp < j) continue;
          const auto qs = q_set(j, jp);
          if (std::find(qs.begin(), qs.end(), q) != qs.end()) out.push_back({j1, j, jp, q});
        }
      }
    }
  }
  return out;
}

}  // namespace qsub
