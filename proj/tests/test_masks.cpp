#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "maskbf/error.hpp"
#include "maskbf/masks.hpp"
#include "test_support.hpp"

using namespace maskbf;

namespace {

// Single-channel, single-bin spectrograms from explicit cell values.
Spectrogram cells(std::initializer_list<std::complex<double>> values) {
  Eigen::MatrixXcd row(1, values.size());
  Eigen::Index t = 0;
  for (auto v : values) row(0, t++) = v;
  return test_support::spectrogram_from_bins({row, row});
}

Eigen::ArrayXXd random_nonneg(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Eigen::ArrayXXd m(rows, cols);
  for (auto& v : m.reshaped()) v = u(rng);
  return m;
}

}  // namespace

TEST(Irm, Examples) {
  const std::complex<double> r3(std::sqrt(3.0), 0);
  const MaskSet m1 = irm(cells({1.0, r3, 0.0}), cells({1.0, 1.0, 0.0}), 0, 1.0);
  EXPECT_DOUBLE_EQ((*m1.ms)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ((*m1.mn)(0, 0), 0.5);
  EXPECT_NEAR((*m1.ms)(0, 1), 0.75, 1e-15);
  EXPECT_NEAR((*m1.mn)(0, 1), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ((*m1.ms)(0, 2), 0.5);  // silent cell

  const MaskSet m2 = irm(cells({1.0, 0.0}), cells({1.0, 0.0}), 0, 0.5);
  EXPECT_NEAR((*m2.ms)(0, 0), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR((*m2.mn)(0, 0), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR((*m2.ms)(0, 1), std::pow(0.5, 0.5), 1e-15);
}

TEST(Irm, PowersSumToOne) {
  std::mt19937_64 rng(1);
  const Spectrogram s = test_support::spectrogram_from_bins({test_support::random_complex(3, 40, rng),
                                                       test_support::random_complex(3, 40, rng)});
  const Spectrogram n = test_support::spectrogram_from_bins({test_support::random_complex(3, 40, rng),
                                                       test_support::random_complex(3, 40, rng)});
  for (double beta : {1.0, 0.5, 2.0}) {
    const MaskSet m = irm(s, n, 2, beta);
    const Eigen::ArrayXXd sum = m.ms->pow(1 / beta) + m.mn->pow(1 / beta);
    EXPECT_LT((sum - 1).abs().maxCoeff(), beta == 1.0 ? 1e-15 : 1e-12);
  }
}

TEST(Irm, ShapeMismatchIsRejected) {
  std::mt19937_64 rng(2);
  const Spectrogram a = test_support::spectrogram_from_bins({test_support::random_complex(1, 4, rng), test_support::random_complex(1, 4, rng)});
  const Spectrogram b = test_support::spectrogram_from_bins({test_support::random_complex(1, 5, rng), test_support::random_complex(1, 5, rng)});
  EXPECT_THROW(irm(a, b, 0, 1.0), InvalidInput);
  EXPECT_THROW(smm(a, b, 0), InvalidInput);
}

TEST(Smm, Examples) {
  const MaskSet clean = smm(cells({1.0, {0.0, 2.0}}), cells({0.0, 0.0}), 0);
  EXPECT_DOUBLE_EQ((*clean.ms)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ((*clean.ms)(0, 1), 1.0);
  EXPECT_DOUBLE_EQ((*clean.mn)(0, 0), 0.0);

  const MaskSet over = smm(cells({1.0, 1.0}), cells({-0.5, -1.0}), 0);
  EXPECT_DOUBLE_EQ((*over.ms)(0, 0), 2.0);
  EXPECT_DOUBLE_EQ((*over.mn)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ((*over.ms)(0, 1), 0.0);  // |s + n| = 0
  EXPECT_DOUBLE_EQ((*over.mn)(0, 1), 0.0);
}

TEST(Smm, RatioMatchesMagnitudes) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXcd sb = test_support::random_complex(2, 30, rng), nb = test_support::random_complex(2, 30, rng);
  const MaskSet m = smm(test_support::spectrogram_from_bins({sb, sb}), test_support::spectrogram_from_bins({nb, nb}), 1);
  for (int t = 0; t < 30; ++t)
    EXPECT_NEAR((*m.ms)(0, t) / (*m.mn)(0, t), std::abs(sb(1, t)) / std::abs(nb(1, t)), 1e-12);
}

TEST(Conversion, Examples) {
  Eigen::ArrayXXd mn(1, 3);
  mn << 0, 1, 0.5;
  Eigen::ArrayXXd expected(1, 3);
  expected << 1, 0, 0.5;
  EXPECT_TRUE(ms_from_mn(mn).isApprox(expected));
  EXPECT_EQ(mn_from_ms(Eigen::ArrayXXd::Constant(2, 4, 0.3)).abs().maxCoeff(), 0.0);
  EXPECT_THROW(ms_from_mn(Eigen::ArrayXXd(2, 0)), InvalidInput);
}

TEST(Conversion, SumIsConstantAndRoundTrip) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::ArrayXXd m = random_nonneg(5, 17, rng);
    for (int f = 0; f < 5; ++f) m(f, (trial + f) % 17) = 0.0;
    const Eigen::ArrayXXd other = mn_from_ms(m);
    EXPECT_GE(other.minCoeff(), 0.0);
    const Eigen::ArrayXXd sum = m + other;
    for (int f = 0; f < 5; ++f) EXPECT_LT((sum.row(f) - m.row(f).maxCoeff()).abs().maxCoeff(), 1e-15);
    EXPECT_LT((ms_from_mn(other) - m).abs().maxCoeff(), 1e-15);
  }
}

TEST(Projection, Examples) {
  Eigen::ArrayXXd ones = Eigen::ArrayXXd::Ones(1, 4);
  EXPECT_TRUE(project_constraints(ones).isApprox(ones));
  Eigen::ArrayXXd m(1, 4);
  m << -1, 2, 0, 0;
  Eigen::ArrayXXd expected(1, 4);
  expected << 0, 2, 0, 0;
  EXPECT_LT((project_constraints(m) - expected).abs().maxCoeff(), 1e-15);
  EXPECT_LT((project_constraints(Eigen::ArrayXXd::Zero(1, 4)) - ones).abs().maxCoeff(), 1e-15);
  Eigen::ArrayXXd negative = -Eigen::ArrayXXd::Ones(2, 3);
  EXPECT_LT((project_constraints(negative) - 1).abs().maxCoeff(), 1e-15);
}

TEST(Projection, IdempotentAndDirectionPreserving) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::ArrayXXd m(4, 25);
    for (auto& v : m.reshaped()) v = g(rng);
    const Eigen::ArrayXXd p = project_constraints(m);
    EXPECT_GE(p.minCoeff(), 0.0);
    for (int f = 0; f < 4; ++f) EXPECT_NEAR(p.row(f).square().mean(), 1.0, 1e-10);
    EXPECT_LT((project_constraints(p) - p).abs().maxCoeff(), 1e-14);

    const Eigen::ArrayXXd pos = random_nonneg(4, 25, rng);
    const Eigen::ArrayXXd pp = project_constraints(pos);
    for (int f = 0; f < 4; ++f) {
      const double c = pp(f, 0) / pos(f, 0);
      EXPECT_GT(c, 0.0);
      EXPECT_LT((pp.row(f) - c * pos.row(f)).abs().maxCoeff(), 1e-12);
    }
  }
}

TEST(MaskSetValidate, RejectsNegativeAndMismatched) {
  MaskSet ok{Eigen::ArrayXXd::Ones(2, 3), Eigen::ArrayXXd::Ones(2, 3)};
  EXPECT_NO_THROW(ok.validate());
  MaskSet neg{Eigen::ArrayXXd::Constant(2, 3, -1.0), std::nullopt};
  EXPECT_THROW(neg.validate(), ConstraintViolation);
  MaskSet nan{Eigen::ArrayXXd::Constant(2, 3, std::nan("")), std::nullopt};
  EXPECT_THROW(nan.validate(), ConstraintViolation);
  MaskSet shape{Eigen::ArrayXXd::Ones(2, 3), Eigen::ArrayXXd::Ones(2, 4)};
  EXPECT_THROW(shape.validate(), InvalidInput);
}

TEST(MaskKind, Labels) {
  EXPECT_EQ(MaskKind::irm(1.0).label(), "IRM(b=1)");
  EXPECT_EQ(MaskKind::irm(0.5).label(), "IRM(b=0.5)");
  EXPECT_EQ(MaskKind::smm().label(), "SMM");
  EXPECT_EQ(MaskKind::optimized().label(), "Optimized");
  EXPECT_EQ(uniform_mask(3, 5).size(), 15);
}
