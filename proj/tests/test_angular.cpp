#include <cmath>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "qsub/angular.hpp"
#include "spin_ops.hpp"

using namespace qsub;

namespace {

// Number of spin-j multiplets of n qubits from the J^2 spectrum.
int count_multiplets(int n, HalfInt j) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qsub_test::total_j2(n));
  const double target = j.value() * (j.value() + 1.0);
  int hits = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) - target) < 1e-8) ++hits;
  return hits / (j.twice() + 1);
}

}  // namespace

TEST(HalfInt, ArithmeticIsExact) {
  const HalfInt a = half(3), b = half(1);
  EXPECT_EQ((a + b).twice(), 4);
  EXPECT_EQ((a - b).twice(), 2);
  EXPECT_EQ((-a).twice(), -3);
  EXPECT_TRUE((a + b).is_integer());
  EXPECT_FALSE(a.is_integer());
  EXPECT_LT(b, a);
  EXPECT_EQ(HalfInt(2), half(4));
  EXPECT_EQ(a.str(), "3/2");
  EXPECT_EQ(HalfInt(1).str(), "1");
}

TEST(Cg, StretchedState) { EXPECT_NEAR(cg(half(1), half(1), HalfInt(1), HalfInt(1), half(3), half(3)), 1.0, 1e-15); }

TEST(Cg, SingletCondonShortley) {
  EXPECT_NEAR(cg(half(1), half(1), half(1), half(-1), HalfInt(0), HalfInt(0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(cg(half(1), half(-1), half(1), half(1), HalfInt(0), HalfInt(0)), -1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cg, MatchesJ2DiagonalizationOracle) {
  // |1/2,1/2> in 1/2 x 1: restrict J^2 to the three-qubit subspace spanned by
  // qubit 0 times the symmetric pair (qubits 1,2), M = 1/2.
  // Basis: |up>|T0>, |dn>|T+>.
  const Eigen::MatrixXd j2 = qsub_test::total_j2(3);
  Eigen::VectorXd up_t0 = Eigen::VectorXd::Zero(8), dn_tp = Eigen::VectorXd::Zero(8);
  up_t0(0b001) = up_t0(0b010) = 1.0 / std::sqrt(2.0);
  dn_tp(0b100) = 1.0;
  Eigen::Matrix2d red;
  red << up_t0.dot(j2 * up_t0), up_t0.dot(j2 * dn_tp), dn_tp.dot(j2 * up_t0), dn_tp.dot(j2 * dn_tp);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(red);
  ASSERT_NEAR(es.eigenvalues()(0), 0.75, 1e-12);
  Eigen::Vector2d v = es.eigenvectors().col(0);
  // Condon-Shortley fixes <1/2 -1/2; 1 1 | 1/2 1/2> < 0 here.
  if (v(1) > 0) v = -v;
  EXPECT_NEAR(cg(half(1), half(1), HalfInt(1), HalfInt(0), half(1), half(1)), v(0), 1e-12);
  EXPECT_NEAR(cg(half(1), half(-1), HalfInt(1), HalfInt(1), half(1), half(1)), v(1), 1e-12);
  EXPECT_NEAR(v(0), 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Cg, SelectionRulesGiveZero) {
  EXPECT_EQ(cg(half(1), half(1), half(1), half(1), HalfInt(0), HalfInt(0)), 0.0);
  EXPECT_EQ(cg(HalfInt(1), HalfInt(0), HalfInt(1), HalfInt(0), HalfInt(3), HalfInt(0)), 0.0);
  EXPECT_EQ(cg(HalfInt(1), HalfInt(2), HalfInt(1), HalfInt(-2), HalfInt(0), HalfInt(0)), 0.0);
}

TEST(Cg, Orthogonality) {
  double worst = 0.0;
  for (int t1 = 0; t1 <= 12; ++t1) {
    for (int t2 = 0; t2 <= 12; ++t2) {
      const HalfInt j1 = half(t1), j2 = half(t2);
      const auto Js = spin_range(abs(j1 - j2), j1 + j2);
      for (HalfInt M : magnetic_range(j1 + j2)) {
        for (HalfInt J : Js) {
          for (HalfInt Jp : Js) {
            double s = 0.0;
            for (HalfInt m1 : magnetic_range(j1)) s += cg(j1, m1, j2, M - m1, J, M) * cg(j1, m1, j2, M - m1, Jp, M);
            const bool present = abs(M) <= J && abs(M) <= Jp;
            const double expect = (J == Jp && present) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(s - expect));
          }
        }
      }
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Cg, SymmetryRelation) {
  double worst = 0.0;
  for (int t1 = 0; t1 <= 12; ++t1)
    for (int t2 = 0; t2 <= 12; ++t2) {
      const HalfInt j1 = half(t1), j2 = half(t2);
      for (HalfInt J : spin_range(abs(j1 - j2), j1 + j2))
        for (HalfInt m1 : magnetic_range(j1))
          for (HalfInt M : magnetic_range(J)) {
            const HalfInt m2 = M - m1;
            if (abs(m2) > j2) continue;
            const int phase = whole(j1 - m1) % 2 == 0 ? 1 : -1;
            const double rhs = phase * std::sqrt((J.twice() + 1.0) / (j2.twice() + 1.0)) * cg(j1, m1, J, -M, j2, -m2);
            worst = std::max(worst, std::abs(cg(j1, m1, j2, m2, J, M) - rhs));
          }
    }
  EXPECT_LT(worst, 1e-10);
}

TEST(Cg, DoubleMatchesExactUpToJ30) {
  double worst = 0.0;
  const std::vector<std::tuple<int, int, int>> triples = {{60, 1, 59}, {30, 30, 60}, {30, 30, 0}, {20, 40, 30},
                                                          {59, 2, 59}, {41, 19, 40}, {25, 35, 50}, {10, 50, 60}};
  for (const auto& [a, b, c] : triples) {
    const HalfInt j1 = half(a), j2 = half(b), J = half(c);
    for (HalfInt m1 : magnetic_range(j1)) {
      for (int step = 0; step <= j2.twice(); step += std::max(1, j2.twice() / 3)) {
        const HalfInt m2 = half(-j2.twice() + 2 * (step / 2));
        const HalfInt M = m1 + m2;
        if (abs(M) > J) continue;
        const CgKey key{j1, m1, j2, m2, J, M};
        const double exact = cg_exact(key).to_double();
        const double approx = cg(key);
        if (exact == 0.0) {
          worst = std::max(worst, std::abs(approx));
        } else {
          worst = std::max(worst, std::abs(approx - exact) / std::abs(exact));
        }
      }
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Multiplicity, SpecExamples) {
  EXPECT_EQ(multiplicity(2, HalfInt(1)), 1u);
  EXPECT_EQ(multiplicity(3, half(1)), 2u);
  EXPECT_EQ(multiplicity(4, HalfInt(0)), 2u);
}

TEST(Multiplicity, AgreesWithJ2Spectrum) {
  for (int n = 1; n <= 6; ++n)
    for (HalfInt j : first_register_spins(n))
      EXPECT_EQ(static_cast<int>(multiplicity(n, j)), count_multiplets(n, j)) << "n=" << n << " j=" << j.str();
}

TEST(Multiplicity, DimensionSum) {
  for (int n = 1; n <= 12; ++n) {
    std::uint64_t total = 0;
    for (HalfInt j : first_register_spins(n)) total += multiplicity(n, j) * static_cast<std::uint64_t>(j.twice() + 1);
    EXPECT_EQ(total, std::uint64_t{1} << n) << "n=" << n;
  }
}

TEST(Multiplicity, RejectsBadLabels) {
  EXPECT_THROW(multiplicity(3, HalfInt(1)), std::domain_error);
  EXPECT_THROW(multiplicity(2, HalfInt(2)), std::domain_error);
  EXPECT_THROW(multiplicity(2, half(-2)), std::domain_error);
}

TEST(QSet, Examples) {
  EXPECT_EQ(q_set(half(1), half(1)), (std::vector<HalfInt>{HalfInt(0), HalfInt(1)}));
  EXPECT_EQ(q_set(half(3), half(1)), (std::vector<HalfInt>{HalfInt(1)}));
  EXPECT_TRUE(q_set(HalfInt(2), half(1)).empty());
  EXPECT_EQ(q_set(HalfInt(0), HalfInt(0)), (std::vector<HalfInt>{half(1)}));
}

TEST(QSet, SymmetricAndEmptyExactlyWhenExpected) {
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; b <= 10; ++b) {
      const auto qs = q_set(half(a), half(b));
      EXPECT_EQ(qs, q_set(half(b), half(a)));
      const bool expect_empty = std::abs(a - b) > 2 || (a - b) % 2 != 0;
      EXPECT_EQ(qs.empty(), expect_empty) << a << " " << b;
    }
}

TEST(Sectors, TwoOne) {
  const auto s = enumerate_sectors(2, 1);
  const std::vector<SectorIndex> expect = {
      {HalfInt(1), half(1), half(1), HalfInt(0)}, {HalfInt(1), half(1), half(1), HalfInt(1)},
      {HalfInt(1), half(1), half(3), HalfInt(1)}, {HalfInt(1), half(3), half(3), HalfInt(1)},
      {HalfInt(1), half(3), half(3), HalfInt(2)}, {HalfInt(0), half(1), half(1), HalfInt(0)},
      {HalfInt(0), half(1), half(1), HalfInt(1)}};
  EXPECT_EQ(s, expect);
}

TEST(Sectors, OneOne) {
  for (const auto& s : enumerate_sectors(1, 1)) {
    EXPECT_EQ(s.j1, half(1));
    EXPECT_LE(s.jp.twice(), 2);
  }
  EXPECT_EQ(enumerate_sectors(1, 1).size(), 4u);
}

TEST(Sectors, MatchBruteForceCount) {
  for (int n1 = 1; n1 <= 6; ++n1)
    for (int n2 = 1; n2 <= 6; ++n2) {
      std::set<std::tuple<int, int, int, int>> brute;
      for (int tj1 = n1 % 2; tj1 <= n1; tj1 += 2)
        for (int tj = 0; tj <= 20; ++tj)
          for (int tjp = tj; tjp <= 20; ++tjp)
            for (int tq = 0; tq <= 22; ++tq) {
              auto valid = [&](int t) { return t >= std::abs(tj1 - n2) && t <= tj1 + n2 && (t - tj1 - n2) % 2 == 0; };
              if (!valid(tj) || !valid(tjp)) continue;
              if (std::abs(tq - tj) != 1 || std::abs(tq - tjp) != 1) continue;
              brute.insert({tj1, tj, tjp, tq});
            }
      const auto s = enumerate_sectors(n1, n2);
      EXPECT_EQ(s.size(), brute.size()) << n1 << "," << n2;
      std::set<SectorIndex> uniq(s.begin(), s.end());
      EXPECT_EQ(uniq.size(), s.size());
    }
}

TEST(Sectors, RejectsEmptyRegisters) {
  EXPECT_THROW(enumerate_sectors(0, 1), std::domain_error);
  EXPECT_THROW(enumerate_sectors(1, 0), std::domain_error);
}
