#include <random>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "maskbf/beamformers.hpp"
#include "maskbf/error.hpp"
#include "test_support.hpp"

using namespace maskbf;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

struct Mixture {
  Spectrogram x, s, n;
};

// Point target (rank one per bin) plus full-rank noise.
Mixture random_mixture(int channels, int bins, int frames, std::mt19937_64& rng, double noise_gain = 0.7) {
  std::vector<MatrixXcd> xs, ss, ns;
  for (int f = 0; f < bins; ++f) {
    const MatrixXcd d = test_support::random_complex(channels, 1, rng);
    const MatrixXcd a = test_support::random_complex(1, frames, rng);
    const MatrixXcd s = d * a;
    const MatrixXcd n = noise_gain * test_support::random_complex(channels, frames, rng);
    ss.push_back(s);
    ns.push_back(n);
    xs.push_back(s + n);
  }
  return {test_support::spectrogram_from_bins(xs), test_support::spectrogram_from_bins(ss), test_support::spectrogram_from_bins(ns)};
}

// argmin_w <|b(t) - w^H x(t)|^2>_t by dense least squares on conj(w).
VectorXcd least_squares_filter(const MatrixXcd& x, const VectorXcd& b) {
  return x.transpose().householderQr().solve(b).conjugate();
}

double mse(const MatrixXcd& x, const VectorXcd& w, const VectorXcd& b) {
  return (b.transpose() - w.adjoint() * x).squaredNorm() / double(x.cols());
}

double collinearity(const VectorXcd& a, const VectorXcd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

double scaled_mse(const BeamformerFilter& filter, const Mixture& m, int k, int f) {
  const MatrixXcd target = m.s.channel(k);
  const ScaledOutput out = ideal_scale(apply_filter(filter, m.x), target);
  return (target.row(f) - out.y.row(f)).squaredNorm() / double(target.cols());
}

}  // namespace

TEST(Methods, RolesAndNames) {
  EXPECT_TRUE(uses_target_mask(MethodId::MaxSnr) && uses_interference_mask(MethodId::MaxSnr));
  EXPECT_TRUE(uses_target_mask(MethodId::MaskMwf) && !uses_interference_mask(MethodId::MaskMwf));
  EXPECT_TRUE(uses_target_mask(MethodId::MaxSor) && !uses_interference_mask(MethodId::MaxSor));
  EXPECT_TRUE(!uses_target_mask(MethodId::MinNor) && uses_interference_mask(MethodId::MinNor));
  EXPECT_TRUE(!uses_target_mask(MethodId::IdealMwf) && !uses_interference_mask(MethodId::IdealMwf));
  for (auto m : {MethodId::MaskMwf, MethodId::IdealMwf, MethodId::MaxSnr, MethodId::MaxSor, MethodId::MinNor})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("maxsnr"), MethodId::MaxSnr);
  EXPECT_EQ(parse_method("MWF"), MethodId::MaskMwf);
  EXPECT_THROW(parse_method("mvdr"), InvalidInput);
}

TEST(MaskMwf, HandSolvedExample) {
  MatrixXcd x(2, 2);
  x << 1, 0, 0, 1;
  const BinData bin(x, 0.0);
  const VectorXcd w = mask_mwf_weights(bin, Eigen::ArrayXd::Ones(2), 0);
  EXPECT_LT((w - VectorXcd::Unit(2, 0)).norm(), 1e-15);
  EXPECT_EQ(mask_mwf_weights(bin, Eigen::ArrayXd::Zero(2), 0).norm(), 0.0);
}

TEST(MaskMwf, MatchesLeastSquaresOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const MatrixXcd x = test_support::random_complex(n, 30, rng);
    const Eigen::ArrayXd m = test_support::random_mask(30, rng);
    const int k = trial % n;
    const VectorXcd b = (m * x.row(k).transpose().array()).matrix();
    const VectorXcd w = mask_mwf_weights(BinData(x, 0.0), m, k);
    EXPECT_LT((w - least_squares_filter(x, b)).norm(), 1e-9 * w.norm());
  }
}

TEST(IdealMwf, Examples) {
  std::mt19937_64 rng(2);
  const MatrixXcd s = test_support::random_complex(1, 20, rng);
  const VectorXcd w = ideal_mwf_weights(BinData(s, 0.0), s.row(0).transpose());
  EXPECT_NEAR(std::abs(w(0) - 1.0), 0.0, 1e-12);
  const MatrixXcd x = test_support::random_complex(3, 20, rng);
  EXPECT_EQ(ideal_mwf_weights(BinData(x, 0.0), VectorXcd::Zero(20)).norm(), 0.0);
}

TEST(IdealMwf, MatchesLeastSquaresOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const MatrixXcd x = test_support::random_complex(n, 25, rng);
    const VectorXcd s = test_support::random_complex(25, 1, rng);
    const VectorXcd w = ideal_mwf_weights(BinData(x, 0.0), s);
    const VectorXcd oracle = least_squares_filter(x, s);
    EXPECT_LE(mse(x, w, s), mse(x, oracle, s) * (1 + 1e-9));
  }
}

TEST(IdealMwf, NoiseFreeOutputNeedsNoScaling) {
  std::mt19937_64 rng(4);
  const Mixture m = random_mixture(3, 4, 30, rng, 0.0);
  // Full-rank observation so the least-squares fit is exact.
  Spectrogram x = m.s;
  for (int f = 0; f < x.num_bins(); ++f) x.bin(f) = test_support::random_complex(3, 30, rng);
  const BeamformerFilter filter = filter_ideal_mwf(x, x, 1, 0.0);
  const ScaledOutput out = ideal_scale(apply_filter(filter, x), x.channel(1));
  EXPECT_LT((out.gamma.array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(GevFilters, SeparatedSourcesGiveCanonicalAxis) {
  const int frames = 40;
  MatrixXcd x = MatrixXcd::Zero(2, frames);
  Eigen::ArrayXd ms = Eigen::ArrayXd::Zero(frames), mn = Eigen::ArrayXd::Zero(frames);
  std::mt19937_64 rng(5);
  const MatrixXcd values = test_support::random_complex(1, frames, rng);
  for (int t = 0; t < frames; ++t) {
    if (t < frames / 2) {
      x(0, t) = values(0, t);
      ms(t) = 1;
    } else {
      x(1, t) = values(0, t);
      mn(t) = 1;
    }
  }
  const BinData bin(x, kDefaultLoading);
  for (const VectorXcd& w : {max_snr_weights(bin, ms, mn), max_sor_weights(bin, ms), min_nor_weights(bin, mn)})
    EXPECT_GT(collinearity(w, VectorXcd::Unit(2, 0)), 1 - 1e-8);
}

TEST(GevFilters, IrmBetaOneMakesTheThreeCollinear) {
  std::mt19937_64 rng(6);
  const Mixture m = random_mixture(4, 6, 60, rng);
  const MaskSet irm1 = irm(m.s, m.n, 0, 1.0);
  const auto snr = filter_max_snr(m.x, *irm1.ms, *irm1.mn);
  const auto sor = filter_max_sor(m.x, *irm1.ms);
  const auto nor = filter_min_nor(m.x, *irm1.mn);
  for (int f = 0; f < 6; ++f) {
    EXPECT_GT(collinearity(snr.weights.col(f), sor.weights.col(f)), 1 - 1e-8);
    EXPECT_GT(collinearity(sor.weights.col(f), nor.weights.col(f)), 1 - 1e-8);
  }
}

TEST(GevFilters, SumIsConstantMakesSorAndNorCollinear) {
  std::mt19937_64 rng(7);
  const Mixture m = random_mixture(4, 5, 50, rng);
  Eigen::ArrayXXd ms(5, 50);
  for (int f = 0; f < 5; ++f) ms.row(f) = test_support::random_mask(50, rng).transpose();
  const auto sor = filter_max_sor(m.x, ms);
  const auto nor = filter_min_nor(m.x, mn_from_ms(ms));
  for (int f = 0; f < 5; ++f) EXPECT_LT((sor.weights.col(f) - nor.weights.col(f)).norm(), 1e-8);
}

TEST(GevFilters, MaskScaleDoesNotChangeCanonicalFilter) {
  std::mt19937_64 rng(8);
  const Mixture m = random_mixture(3, 4, 40, rng);
  const MaskSet masks = irm(m.s, m.n, 0, 0.5);
  const Eigen::ArrayXXd ms2 = 3.7 * *masks.ms, mn2 = 0.2 * *masks.mn;
  EXPECT_LT((filter_max_sor(m.x, *masks.ms).weights - filter_max_sor(m.x, ms2).weights).norm(), 1e-10);
  EXPECT_LT((filter_min_nor(m.x, *masks.mn).weights - filter_min_nor(m.x, mn2).weights).norm(), 1e-10);
  EXPECT_LT((filter_max_snr(m.x, *masks.ms, *masks.mn).weights - filter_max_snr(m.x, ms2, 3.7 * *masks.mn).weights).norm(),
            1e-10);
  const auto snr = filter_max_snr(m.x, *masks.ms, *masks.mn);
  for (int f = 0; f < 4; ++f) EXPECT_NEAR(snr.weights.col(f).norm(), 1.0, 1e-12);
}

TEST(ApplyFilter, SelectorZeroAndLinearity) {
  std::mt19937_64 rng(9);
  const Mixture m = random_mixture(3, 4, 20, rng);
  BeamformerFilter sel{MatrixXcd::Zero(3, 4), MethodId::MaskMwf, 0, {}};
  sel.weights.row(2).setOnes();
  EXPECT_LT((apply_filter(sel, m.x) - m.x.channel(2)).norm(), 1e-15);
  BeamformerFilter zero{MatrixXcd::Zero(3, 4), MethodId::MaskMwf, 0, {}};
  EXPECT_EQ(apply_filter(zero, m.x).norm(), 0.0);
  BeamformerFilter w{test_support::random_complex(3, 4, rng), MethodId::MaskMwf, 0, {}};
  EXPECT_LT((apply_filter(w, m.x) - apply_filter(w, m.s) - apply_filter(w, m.n)).norm(), 1e-12);
}

TEST(IdealScale, Examples) {
  std::mt19937_64 rng(10);
  const MatrixXcd s = test_support::random_complex(3, 15, rng);
  const ScaledOutput same = ideal_scale(s, s);
  EXPECT_LT((same.gamma.array() - 1.0).abs().maxCoeff(), 1e-14);
  const ScaledOutput twice = ideal_scale(2 * s, s);
  EXPECT_LT((twice.gamma.array() - 0.5).abs().maxCoeff(), 1e-14);
  EXPECT_LT((twice.y - s).norm(), 1e-13);
  const ScaledOutput silent = ideal_scale(MatrixXcd::Zero(3, 15), s);
  EXPECT_EQ(silent.gamma.norm(), 0.0);
}

TEST(IdealScale, GammaIsLocallyOptimal) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXcd y = test_support::random_complex(1, 20, rng), s = test_support::random_complex(1, 20, rng);
    const std::complex<double> g = ideal_scale(y, s).gamma(0);
    const double best = (s - g * y).squaredNorm();
    for (std::complex<double> d : {std::complex<double>(1.01), std::complex<double>(0.99),
                                   std::complex<double>(1, 0.01), std::complex<double>(1, -0.01)})
      EXPECT_GT((s - g * d * y).squaredNorm(), best);
  }
}

TEST(UpperBound, IdealMwfBeatsEveryMaskFilter) {
  std::mt19937_64 rng(12);
  const Mixture m = random_mixture(2, 3, 30, rng, 1.0);
  const BeamformerFilter ideal = filter_ideal_mwf(m.x, m.s, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::ArrayXXd ms(3, 30), mn(3, 30);
    for (int f = 0; f < 3; ++f) {
      ms.row(f) = test_support::random_mask(30, rng).transpose();
      mn.row(f) = test_support::random_mask(30, rng).transpose();
    }
    for (const BeamformerFilter& other : {filter_mask_mwf(m.x, ms, 0), filter_max_snr(m.x, ms, mn),
                                          filter_max_sor(m.x, ms), filter_min_nor(m.x, mn)})
      for (int f = 0; f < 3; ++f) EXPECT_LE(scaled_mse(ideal, m, 0, f), scaled_mse(other, m, 0, f) + 1e-9);
  }
}

TEST(ScaledOutput, InvariantToGlobalMaskScale) {
  std::mt19937_64 rng(13);
  const Mixture m = random_mixture(3, 4, 40, rng);
  const MaskSet a = irm(m.s, m.n, 0, 0.5);
  const MaskSet b{*a.ms * 5.0, *a.mn * 5.0};
  const MatrixXcd target = m.s.channel(0);
  for (auto method : {MethodId::MaskMwf, MethodId::MaxSnr, MethodId::MaxSor, MethodId::MinNor}) {
    const MatrixXcd ya = ideal_scale(apply_filter(estimate_filter(method, m.x, a, nullptr, 0), m.x), target).y;
    const MatrixXcd yb = ideal_scale(apply_filter(estimate_filter(method, m.x, b, nullptr, 0), m.x), target).y;
    EXPECT_LT((ya - yb).norm(), 1e-9 * ya.norm()) << to_string(method);
  }
}

TEST(EstimateFilter, MissingInputsAreRejected) {
  std::mt19937_64 rng(14);
  const Mixture m = random_mixture(2, 3, 10, rng);
  const MaskSet only_ms{Eigen::ArrayXXd::Ones(3, 10), std::nullopt};
  EXPECT_THROW(estimate_filter(MethodId::MinNor, m.x, only_ms, nullptr, 0), InvalidInput);
  EXPECT_THROW(estimate_filter(MethodId::MaxSnr, m.x, only_ms, nullptr, 0), InvalidInput);
  EXPECT_THROW(estimate_filter(MethodId::IdealMwf, m.x, {}, nullptr, 0), InvalidInput);
  EXPECT_NO_THROW(estimate_filter(MethodId::IdealMwf, m.x, {}, &m.s, 0));
}

TEST(EstimateFilter, SingularBinIsZeroedWithWarning) {
  std::mt19937_64 rng(15);
  Mixture m = random_mixture(2, 3, 10, rng);
  m.x.bin(1).setZero();
  const BeamformerFilter f = estimate_filter(MethodId::MaxSor, m.x, {Eigen::ArrayXXd::Ones(3, 10), std::nullopt}, nullptr, 0);
  EXPECT_EQ(f.weights.col(1).norm(), 0.0);
  EXPECT_GT(f.weights.col(0).norm(), 0.0);
  ASSERT_EQ(f.warnings.size(), 1u);
}
