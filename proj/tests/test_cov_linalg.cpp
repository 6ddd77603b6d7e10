#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "maskbf/cov_linalg.hpp"
#include "maskbf/error.hpp"
#include "test_support.hpp"

using namespace maskbf;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

MatrixXcd naive_covariance(const MatrixXcd& x, const Eigen::ArrayXd& m) {
  MatrixXcd out = MatrixXcd::Zero(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      for (Eigen::Index t = 0; t < x.cols(); ++t) out(i, j) += m(t) * x(i, t) * std::conj(x(j, t));
  return out / double(x.cols());
}

double residual(const MatrixXcd& a, const MatrixXcd& b_loaded, const GevResult<double>& r) {
  return (a * r.eigenvector - r.eigenvalue * b_loaded * r.eigenvector).norm();
}

}  // namespace

TEST(WeightedCovariance, SingleFrame) {
  MatrixXcd x(2, 1);
  x << 1, 0;
  const MatrixXcd c = weighted_covariance(x, Eigen::ArrayXd::Ones(1));
  MatrixXcd expected(2, 2);
  expected << 1, 0, 0, 0;
  EXPECT_EQ(c, expected);
}

TEST(WeightedCovariance, ZeroMaskGivesZero) {
  std::mt19937_64 rng(1);
  const MatrixXcd x = test_support::random_complex(3, 10, rng);
  EXPECT_EQ(weighted_covariance(x, Eigen::ArrayXd::Zero(10)).norm(), 0.0);
}

TEST(WeightedCovariance, MatchesNaiveSummation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXcd x = test_support::random_complex(2, 3, rng);
    const Eigen::ArrayXd m = test_support::random_mask(3, rng);
    EXPECT_LT((weighted_covariance(x, m) - naive_covariance(x, m)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(WeightedCovariance, IsExactlyHermitianAndLinearInMask) {
  std::mt19937_64 rng(3);
  const MatrixXcd x = test_support::random_complex(4, 50, rng);
  const Eigen::ArrayXd m1 = test_support::random_mask(50, rng), m2 = test_support::random_mask(50, rng);
  const MatrixXcd c = weighted_covariance(x, m1);
  EXPECT_EQ((c - c.adjoint()).cwiseAbs().maxCoeff(), 0.0);
  const MatrixXcd sum = weighted_covariance(x, (m1 + m2).eval());
  EXPECT_LT((sum - c - weighted_covariance(x, m2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedCovariance, RejectsBadMasks) {
  std::mt19937_64 rng(4);
  const MatrixXcd x = test_support::random_complex(2, 4, rng);
  EXPECT_THROW(weighted_covariance(x, Eigen::ArrayXd::Ones(3)), InvalidInput);
  Eigen::ArrayXd m = Eigen::ArrayXd::Ones(4);
  m(2) = -0.1;
  EXPECT_THROW(weighted_covariance(x, m), ConstraintViolation);
}

TEST(SolveLoaded, Examples) {
  VectorXcd b(2);
  b << 3, 4;
  EXPECT_LT((solve_loaded(MatrixXcd::Identity(2, 2), b, 0.0) - b).norm(), 1e-15);
  MatrixXcd a = MatrixXcd::Zero(2, 2);
  a(0, 0) = 2;
  a(1, 1) = 4;
  VectorXcd b2(2);
  b2 << 2, 4;
  EXPECT_LT((solve_loaded(a, b2, 0.0) - VectorXcd::Ones(2)).norm(), 1e-15);
}

TEST(SolveLoaded, ResidualOnRandomSystems) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 7;
    const MatrixXcd a = test_support::random_pd(n, rng);
    const VectorXcd b = test_support::random_complex(n, 1, rng);
    const double eps = trial % 2 ? 1e-6 : 1e-2;
    const MatrixXcd al = loaded(a, eps);
    EXPECT_LT((al * solve_loaded(a, b, eps) - b).norm() / b.norm(), 1e-10);
  }
}

TEST(SolveLoaded, IndefiniteMatrixIsRejected) {
  MatrixXcd a = MatrixXcd::Identity(2, 2);
  a(1, 1) = -1;
  EXPECT_THROW(solve_loaded(a, VectorXcd::Ones(2), 0.0), NumericalError);
}

TEST(Gev, DiagonalExample) {
  MatrixXcd a = MatrixXcd::Zero(2, 2);
  a(0, 0) = 2;
  a(1, 1) = 1;
  const auto hi = gev_max(a, MatrixXcd::Identity(2, 2), 0.0);
  const auto lo = gev_min(a, MatrixXcd::Identity(2, 2), 0.0);
  EXPECT_NEAR(hi.eigenvalue, 2.0, 1e-14);
  EXPECT_NEAR(lo.eigenvalue, 1.0, 1e-14);
  EXPECT_LT((hi.eigenvector - VectorXcd::Unit(2, 0)).norm(), 1e-14);
  EXPECT_LT((lo.eigenvector - VectorXcd::Unit(2, 1)).norm(), 1e-14);
}

TEST(Gev, DegenerateSpectrum) {
  const MatrixXcd i3 = MatrixXcd::Identity(3, 3);
  const auto r = gev_max(i3, i3, 0.0);
  EXPECT_NEAR(r.eigenvalue, 1.0, 1e-14);
  EXPECT_NEAR(r.eigenvector.norm(), 1.0, 1e-14);
  EXPECT_LT(residual(i3, i3, r), 1e-14);
}

TEST(Gev, ResidualAndCanonicalFormOnRandomInstances) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 7;
    const MatrixXcd a = test_support::random_hermitian(n, rng);
    const MatrixXcd b = test_support::random_pd(n, rng);
    const MatrixXcd bl = loaded(b, kDefaultLoading);
    for (const auto& r : {gev_max(a, b), gev_min(a, b)}) {
      EXPECT_LT(residual(a, bl, r), 1e-10 * a.norm());
      EXPECT_NEAR(r.eigenvector.norm(), 1.0, 1e-12);
      Eigen::Index k;
      r.eigenvector.cwiseAbs().maxCoeff(&k);
      EXPECT_EQ(r.eigenvector(k).imag(), 0.0);
      EXPECT_GE(r.eigenvector(k).real(), 0.0);
    }
    EXPECT_GE(gev_max(a, b).eigenvalue, gev_min(a, b).eigenvalue);
  }
}

TEST(Gev, AgreesWithEigenGeneralizedSolver) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    const MatrixXcd a = test_support::random_hermitian(n, rng);
    const MatrixXcd b = test_support::random_pd(n, rng);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXcd> ref(a, loaded(b, 1e-6));
    const auto dec = gev_decompose(a, b, 1e-6);
    EXPECT_LT((dec.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10 * a.norm());
    const MatrixXcd gram = dec.eigenvectors.adjoint() * loaded(b, 1e-6) * dec.eigenvectors;
    EXPECT_LT((gram - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Gev, ScaleEquivariance) {
  std::mt19937_64 rng(8);
  const MatrixXcd a = test_support::random_pd(4, rng), b = test_support::random_pd(4, rng);
  const auto r1 = gev_max(a, b), r2 = gev_max((3.5 * a).eval(), b);
  EXPECT_NEAR(r2.eigenvalue, 3.5 * r1.eigenvalue, 1e-10 * r2.eigenvalue);
  EXPECT_LT((r1.eigenvector - r2.eigenvector).norm(), 1e-10);
}

TEST(Gev, MaxOfPairIsMinOfSwappedPair) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXcd a = test_support::random_pd(4, rng), b = test_support::random_pd(4, rng);
    const auto hi = gev_max(a, b, 0.0), lo = gev_min(b, a, 0.0);
    EXPECT_NEAR(hi.eigenvalue * lo.eigenvalue, 1.0, 1e-9);
    EXPECT_LT((hi.eigenvector - lo.eigenvector).norm(), 1e-8);
  }
}

TEST(Gev, SingularRightHandSideIsRejected) {
  const MatrixXcd a = MatrixXcd::Identity(2, 2);
  EXPECT_THROW(gev_max(a, MatrixXcd::Zero(2, 2), 0.0), NumericalError);
  EXPECT_THROW(gev_max(a, MatrixXcd::Zero(2, 2), 1e-6), NumericalError);
}

TEST(Gev, FloatInstantiation) {
  Eigen::MatrixXcf a = Eigen::MatrixXcf::Identity(3, 3);
  a(0, 0) = 3;
  const auto r = gev_max(a, Eigen::MatrixXcf::Identity(3, 3), 0.0);
  EXPECT_NEAR(r.eigenvalue, 3.0f, 1e-5f);
}

TEST(CanonicalizePhase, LargestComponentReal) {
  VectorXcd w(3);
  w << std::complex<double>(0, 1), std::complex<double>(0, -3), 0.5;
  const VectorXcd c = canonicalize_phase(w);
  EXPECT_NEAR(c.norm(), 1.0, 1e-15);
  EXPECT_EQ(c(1).imag(), 0.0);
  EXPECT_GT(c(1).real(), 0.0);
  EXPECT_LT((canonicalize_phase((std::complex<double>(0.3, -2.0) * w).eval()) - c).norm(), 1e-14);
}
