#include <cmath>

#include <gtest/gtest.h>

#include "qsub/closed_forms.hpp"

using namespace qsub;

TEST(ClosedForms, DoNothing) {
  EXPECT_DOUBLE_EQ(dn_fidelity(0.5, 2), 0.75);
  EXPECT_DOUBLE_EQ(dn_fidelity(0.0, 5), 1.0);
  EXPECT_NEAR(dn_fidelity(1.0, 3), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(dn_fidelity(1.2, 2), std::domain_error);
  EXPECT_THROW(dn_fidelity(0.5, 1), std::domain_error);
}

TEST(ClosedForms, F21) {
  EXPECT_NEAR(f21_exact(0.0), 1.0, 1e-15);
  EXPECT_NEAR(f21_exact(1.0), 0.5, 1e-15);
  const double expect = 0.75 * 56.75 / 54.0 + 0.75 * 10.5625 / (27.0 * 4.25) + 0.03125;
  EXPECT_NEAR(f21_exact(0.25), expect, 1e-15);
  EXPECT_NEAR(f21_exact(0.25), 0.8884803922, 1e-10);
  EXPECT_NEAR(f21_exact(0.5), 0.787037037037037, 1e-14);
}

TEST(ClosedForms, F21BranchContinuity) {
  const double q = 1.0 - kF21Branch;
  const double left = q * (3.0 + kF21Branch) * (3.0 + kF21Branch) / (27.0 * (6.0 - 7.0 * kF21Branch));
  EXPECT_NEAR(left, kF21Branch * q / 3.0, 1e-12);
  for (double eps : {1e-6, 1e-8, 1e-10})
    EXPECT_LE(std::abs(f21_exact(kF21Branch - eps) - f21_exact(kF21Branch + eps)), 10 * eps);
}

TEST(ClosedForms, MeasureAndPrepare) {
  EXPECT_NEAR(mp_upper(0.0, 2), 0.75, 1e-15);
  EXPECT_NEAR(mp_upper(0.5, 2), 7.75 / 12.0, 1e-15);
  for (int n : {1, 2, 5}) EXPECT_NEAR(mp_upper(1.0, n), 0.5, 1e-15);
  for (double p : uniform_grid(21)) EXPECT_NEAR(mp_upper(p, 2), (9.0 - 2.0 * p - p * p) / 12.0, 1e-12);
}

TEST(ClosedForms, CemAndF1n2) {
  EXPECT_NEAR(cem_fidelity(0.4), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(cem_fidelity(0.0), 1.0);
  EXPECT_DOUBLE_EQ(cem_fidelity(1.0), 0.5);
  EXPECT_NEAR(f1n2(0.2), 0.9, 1e-15);
  EXPECT_DOUBLE_EQ(f1n2(0.0), 1.0);
  EXPECT_DOUBLE_EQ(f1n2(1.0), 0.5);
  for (double p : uniform_grid(11)) EXPECT_EQ(cem_fidelity(p), dn_fidelity(p, 2));
}

TEST(ClosedForms, F2InfEndpointsAndFrozenValues) {
  EXPECT_NEAR(f2inf(0.0), 1.0, 1e-9);
  EXPECT_NEAR(f2inf(1.0), 0.5, 1e-9);
  EXPECT_NEAR(f2inf(0.1), 0.9608320024722984, 1e-9);
  EXPECT_NEAR(f2inf(0.25), 0.9069815389042983, 1e-9);
  EXPECT_NEAR(f2inf(0.5), 0.8083935597742792, 1e-9);
  EXPECT_NEAR(f2inf(0.75), 0.6766907566304742, 1e-9);
  EXPECT_NEAR(f2inf(0.9), 0.5764872349134297, 1e-9);
}

TEST(ClosedForms, F2InfGoldenSectionFindsMaximum) {
  for (double p : {0.0, 0.3, 0.7, 1.0}) {
    const double t = f2inf_argmax(p);
    for (int i = 0; i <= 1000; ++i) EXPECT_LE(f2inf_g(p, i / 1000.0), f2inf_g(p, t) + 1e-12);
  }
}

TEST(ClosedForms, Orderings) {
  for (double p : uniform_grid(101)) {
    if (p <= 0.0 || p >= 1.0) continue;
    EXPECT_LT(mp_upper(p, 2), dn_fidelity(p, 2)) << p;
    EXPECT_GT(f21_exact(p), dn_fidelity(p, 2)) << p;
    EXPECT_LE(f21_exact(p), f2inf(p) + 1e-9) << p;
  }
}

TEST(ClosedForms, CurvesStayInUnitInterval) {
  const auto pts = sample_curves(uniform_grid(101));
  EXPECT_EQ(pts.size(), 101u * kAllCurves.size());
  for (const auto& pt : pts) {
    EXPECT_GE(pt.value, 0.0);
    EXPECT_LE(pt.value, 1.0 + 1e-12) << to_string(pt.label) << " " << pt.p;
  }
}
