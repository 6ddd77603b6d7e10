#pragma once

// Mask-weighted covariance statistics and small dense Hermitian linear
// algebra (loaded solves, extreme generalized eigenpairs). Everything is
// templated on the real scalar type; the library instantiates double.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "maskbf/error.hpp"
#include "maskbf/tf_transform.hpp"

namespace maskbf {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using HermitianMatrix = CMatrix<double>;

/// Default relative diagonal loading for inverses and GEV right-hand sides.
inline constexpr double kDefaultLoading = 1e-6;

template <typename Real>
struct GevResult {
  Real eigenvalue{};
  CVector<Real> eigenvector;  // unit norm, canonical phase
};

/// Full generalized decomposition A v = lambda B' v. Eigenvalues ascending,
/// eigenvectors B'-orthonormal (V^H B' V = I).
template <typename Real>
struct GevDecomposition {
  RVector<Real> eigenvalues;
  CMatrix<Real> eigenvectors;
};

/// (A + A^H) / 2.
template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h = a;
  h = (0.5 * (h + h.adjoint())).eval();
  for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) = Scalar(h(i, i).real(), 0);
  return h;
}

/// <m(t) x(t) x(t)^H>_t for x given as channels x frames.
template <typename Derived, typename MaskDerived>
auto weighted_covariance(const Eigen::MatrixBase<Derived>& x,
                         const Eigen::DenseBase<MaskDerived>& mask) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  if (mask.size() != x.cols())
    throw InvalidInput("weighted_covariance: mask length " + std::to_string(mask.size()) +
                       " != frame count " + std::to_string(x.cols()));
  for (Eigen::Index t = 0; t < mask.size(); ++t) {
    if (!(mask(t) >= 0)) throw ConstraintViolation("weighted_covariance: negative mask entry");
  }
  const Eigen::Index frames = x.cols();
  if (frames == 0) return CMatrix<Real>::Zero(x.rows(), x.rows()).eval();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weighted =
      x * mask.derived().template cast<Scalar>().matrix().asDiagonal();
  return hermitian_part(weighted * x.adjoint() / Real(frames)).eval();
}

/// Unit-weight covariance <x(t) x(t)^H>_t.
template <typename Derived>
auto covariance(const Eigen::MatrixBase<Derived>& x) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Eigen::Index frames = std::max<Eigen::Index>(x.cols(), 1);
  return hermitian_part(x * x.adjoint() / Real(frames)).eval();
}

/// A + eps * (trace(A) / N) * I.
template <typename Derived>
auto loaded(const Eigen::MatrixBase<Derived>& a, double eps) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = a;
  if (a.rows() == 0) return out;
  const auto shift = eps * a.trace().real() / double(a.rows());
  out.diagonal().array() += Scalar(shift);
  return out;
}

namespace detail {

// Cholesky factor of a Hermitian matrix, rejecting matrices that are not
// numerically positive definite.
template <typename Real>
Eigen::LLT<CMatrix<Real>> checked_cholesky(const CMatrix<Real>& b, const char* who) {
  Eigen::LLT<CMatrix<Real>> llt(b);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(who) + ": matrix not PD");
  const auto diag = llt.matrixLLT().diagonal().real().eval();
  const Real hi = diag.maxCoeff(), lo = diag.minCoeff();
  if (!(lo > 0) || !std::isfinite(hi) || lo * lo < Real(1e-14) * hi * hi)
    throw NumericalError(std::string(who) + ": matrix not numerically PD");
  return llt;
}

/// Cyclic Jacobi eigen solver for a Hermitian matrix. On return `a` is
/// diagonal (eigenvalues) and `v` holds orthonormal eigenvectors as columns.
template <typename Real>
void hermitian_jacobi(CMatrix<Real>& a, CMatrix<Real>& v, int max_sweeps = 100) {
  using C = std::complex<Real>;
  const Eigen::Index n = a.rows();
  v = CMatrix<Real>::Identity(n, n);
  const Real total = a.norm();
  if (total == Real(0)) return;
  const Real tol = Real(1e-14) * total;

  auto off_norm = [&] {
    Real acc = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) acc += std::norm(a(i, j));
    return std::sqrt(acc);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() >= tol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Real mag = std::abs(a(p, q));
        if (mag <= std::numeric_limits<Real>::min()) continue;
        const C phase = a(p, q) / mag;  // e^{i phi}
        const Real app = a(p, p).real(), aqq = a(q, q).real();
        // Real rotation on [[app, mag], [mag, aqq]] after removing the phase.
        const Real theta = (aqq - app) / (2 * mag);
        const Real t = (theta >= 0 ? Real(1) : Real(-1)) /
                       (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Real c = 1 / std::sqrt(t * t + 1);
        const Real s = t * c;
        // G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q).
        const C gqp = -s * std::conj(phase), gqq = c * std::conj(phase);
        for (Eigen::Index r = 0; r < n; ++r) {
          const C ap = a(r, p), aq = a(r, q);
          a(r, p) = c * ap + gqp * aq;
          a(r, q) = s * ap + gqq * aq;
        }
        for (Eigen::Index col = 0; col < n; ++col) {
          const C ap = a(p, col), aq = a(q, col);
          a(p, col) = c * ap + std::conj(gqp) * aq;
          a(q, col) = s * ap + std::conj(gqq) * aq;
        }
        a(p, q) = a(q, p) = C(0);
        a(p, p) = C(a(p, p).real(), 0);
        a(q, q) = C(a(q, q).real(), 0);
        for (Eigen::Index r = 0; r < n; ++r) {
          const C vp = v(r, p), vq = v(r, q);
          v(r, p) = c * vp + gqp * vq;
          v(r, q) = s * vp + gqq * vq;
        }
      }
    }
  }
}

}  // namespace detail

/// Unit norm, largest-magnitude component real and nonnegative (first index
/// wins ties). A zero vector is returned unchanged.
template <typename Derived>
auto canonicalize_phase(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = w;
  const auto norm = out.norm();
  if (norm == 0) return out;
  out /= norm;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < out.size(); ++i)
    if (std::abs(out(i)) > std::abs(out(best)) * (1 + 1e-12)) best = i;
  out *= std::conj(out(best)) / std::abs(out(best));
  out(best) = Scalar(std::abs(out(best)), 0);
  return out;
}

/// (A + eps * trace(A)/N * I)^{-1} b by Cholesky.
template <typename DerivedA, typename DerivedB>
auto solve_loaded(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                  double eps = kDefaultLoading) {
  using Real = typename Eigen::NumTraits<typename DerivedA::Scalar>::Real;
  if (a.rows() != a.cols() || a.rows() != b.rows()) throw InvalidInput("solve_loaded: shape mismatch");
  if (eps < 0) throw InvalidInput("solve_loaded: negative loading");
  const CMatrix<Real> al = loaded(hermitian_part(a), eps);
  const auto llt = detail::checked_cholesky<Real>(al, "solve_loaded");
  CVector<Real> x = llt.solve(b.template cast<std::complex<Real>>());
  if (!x.allFinite()) throw NumericalError("solve_loaded: non-finite solution");
  return x;
}

/// All generalized eigenpairs of (A, B + eps*trace(B)/N*I).
template <typename DerivedA, typename DerivedB>
auto gev_decompose(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                   double eps = kDefaultLoading) {
  using Real = typename Eigen::NumTraits<typename DerivedA::Scalar>::Real;
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n) throw InvalidInput("gev: shape mismatch");
  if (n == 0) throw InvalidInput("gev: empty matrices");
  if (eps < 0) throw InvalidInput("gev: negative loading");

  const CMatrix<Real> bl = loaded(hermitian_part(b), eps);
  const auto llt = detail::checked_cholesky<Real>(bl, "gev");
  // C = L^{-1} A L^{-H}
  CMatrix<Real> c = llt.matrixL().solve(hermitian_part(a));
  c = llt.matrixL().solve(c.adjoint().eval()).adjoint().eval();
  c = hermitian_part(c);

  CMatrix<Real> u;
  detail::hermitian_jacobi(c, u);

  GevDecomposition<Real> out;
  out.eigenvalues.resize(n);
  Eigen::VectorXi order(n);
  for (Eigen::Index i = 0; i < n; ++i) order(i) = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return c(i, i).real() < c(j, j).real(); });
  CMatrix<Real> sorted(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = c(order(i), order(i)).real();
    sorted.col(i) = u.col(order(i));
  }
  out.eigenvectors = llt.matrixU().solve(sorted);  // L^{-H} u
  return out;
}

/// Eigenvector of the largest generalized eigenvalue of (A, B').
template <typename DerivedA, typename DerivedB>
auto gev_max(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
             double eps = kDefaultLoading) {
  using Real = typename Eigen::NumTraits<typename DerivedA::Scalar>::Real;
  const auto dec = gev_decompose(a, b, eps);
  const Eigen::Index last = dec.eigenvalues.size() - 1;
  return GevResult<Real>{dec.eigenvalues(last), canonicalize_phase(dec.eigenvectors.col(last))};
}

/// Eigenvector of the smallest generalized eigenvalue of (A, B').
template <typename DerivedA, typename DerivedB>
auto gev_min(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
             double eps = kDefaultLoading) {
  using Real = typename Eigen::NumTraits<typename DerivedA::Scalar>::Real;
  const auto dec = gev_decompose(a, b, eps);
  return GevResult<Real>{dec.eigenvalues(0), canonicalize_phase(dec.eigenvectors.col(0))};
}

/// Mask-weighted covariance of frequency bin f of a spectrogram.
inline HermitianMatrix weighted_covariance(const Spectrogram& spec,
                                           const Eigen::Ref<const Eigen::VectorXd>& mask, int f) {
  return weighted_covariance(spec.bin(f), mask);
}

/// Unit-weight covariance of frequency bin f.
inline HermitianMatrix weighted_covariance(const Spectrogram& spec, int f) {
  return covariance(spec.bin(f));
}

}  // namespace maskbf
