#pragma once

// Analytic fidelity curves: the do-nothing baseline, the exact (2,1) optimum,
// the measure-and-prepare upper bound, CEM, F_{1,n2} and F_{2,inf}.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsub {

namespace detail {
inline void check_p(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error(std::string(who) + ": p must lie in [0, 1]");
}
}  // namespace detail

inline double dn_fidelity(double p, int d = 2) {
  detail::check_p(p, "dn_fidelity");
  if (d < 2) throw std::domain_error("dn_fidelity: d must be >= 2");
  return 1.0 - p * (d - 1) / d;
}

inline double cem_fidelity(double p) {
  detail::check_p(p, "cem_fidelity");
  return 1.0 - p / 2.0;
}

inline double f1n2(double p) {
  detail::check_p(p, "f1n2");
  return 1.0 - p / 2.0;
}

constexpr double kF21Branch = 3.0 / 8.0;

inline double f21_exact(double p) {
  detail::check_p(p, "f21_exact");
  const double q = 1.0 - p;
  const double head = q * (51.0 + 23.0 * p) / 54.0 + p * p / 2.0;
  if (p <= kF21Branch) return head + q * (3.0 + p) * (3.0 + p) / (27.0 * (6.0 - 7.0 * p));
  return head + p * q / 3.0;
}

inline double mp_upper(double p, int n1) {
  detail::check_p(p, "mp_upper");
  if (n1 < 1) throw std::domain_error("mp_upper: n1 must be >= 1");
  double sum = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= n1; ++k) {
    sum += binom * (k + 1.0) / (k + 2.0) * std::pow(1.0 - p, k) * std::pow(p, n1 - k);
    binom = binom * (n1 - k) / (k + 1);
  }
  return sum;
}

/// Reduced one-variable objective of the n1=2, n2=inf problem.
inline double f2inf_g(double p, double t) {
  const double q = 1.0 - p;
  const double s2 = std::sqrt(2.0);
  const double rest = std::sqrt(std::max(0.0, 1.0 - t * t));
  return q * (1.0 + p) / 6.0 * (1.0 - t * t) + q / 6.0 * t * t + q * q / (3.0 * s2) * t +
         q * (1.0 + p) / (3.0 * s2) * rest;
}

inline double f2inf_constant(double p) {
  const double q = 1.0 - p;
  return p * q / 3.0 + (3.0 + 2.0 * p + p * p) / 12.0 + q * q / 4.0;
}

/// argmax of f2inf_g over [0,1] by golden-section search, endpoints included.
inline double f2inf_argmax(double p, double tol = 1e-10) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f2inf_g(p, c), fd = f2inf_g(p, d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f2inf_g(p, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f2inf_g(p, d);
    }
  }
  double best = 0.5 * (a + b);
  for (double t : {0.0, 1.0}) {
    if (f2inf_g(p, t) > f2inf_g(p, best)) best = t;
  }
  return best;
}

inline double f2inf(double p) {
  detail::check_p(p, "f2inf");
  return f2inf_constant(p) + f2inf_g(p, f2inf_argmax(p));
}

enum class CurveLabel { DN, F11, F1N2, F21, MP_UPPER_N1, CEM, F2INF };

inline std::string to_string(CurveLabel l) {
  switch (l) {
    case CurveLabel::DN: return "DN";
    case CurveLabel::F11: return "F11";
    case CurveLabel::F1N2: return "F1n2";
    case CurveLabel::F21: return "F21";
    case CurveLabel::MP_UPPER_N1: return "MP_UPPER_N1";
    case CurveLabel::CEM: return "CEM";
    case CurveLabel::F2INF: return "F2INF";
  }
  return "?";
}

constexpr std::array<CurveLabel, 7> kAllCurves = {CurveLabel::DN,          CurveLabel::F11, CurveLabel::F1N2,
                                                  CurveLabel::F21,         CurveLabel::MP_UPPER_N1,
                                                  CurveLabel::CEM,         CurveLabel::F2INF};

struct FidelityCurvePoint {
  double p = 0.0;
  double value = 0.0;
  CurveLabel label = CurveLabel::DN;
};

/// n1 is only used by MP_UPPER_N1.
inline double curve_value(CurveLabel l, double p, int n1 = 2) {
  switch (l) {
    case CurveLabel::DN: return dn_fidelity(p, 2);
    case CurveLabel::F11: return f1n2(p);
    case CurveLabel::F1N2: return f1n2(p);
    case CurveLabel::F21: return f21_exact(p);
    case CurveLabel::MP_UPPER_N1: return mp_upper(p, n1);
    case CurveLabel::CEM: return cem_fidelity(p);
    case CurveLabel::F2INF: return f2inf(p);
  }
  throw std::invalid_argument("curve_value: unknown label");
}

/// points uniform samples of [0,1] (points >= 2); the last one is exactly 1.
inline std::vector<double> uniform_grid(int points = 101) {
  if (points < 2) throw std::domain_error("uniform_grid: need at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  return g;
}

inline std::vector<FidelityCurvePoint> sample_curves(const std::vector<double>& grid, int n1 = 2) {
  std::vector<FidelityCurvePoint> out;
  out.reserve(grid.size() * kAllCurves.size());
  for (double p : grid)
    for (CurveLabel l : kAllCurves) out.push_back({p, curve_value(l, p, n1), l});
  return out;
}

}  // namespace qsub
