#pragma once

#include <algorithm>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "maskbf/tf_transform.hpp"

namespace maskbf::test_support {

inline Eigen::MatrixXcd random_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXcd a = random_complex(n, n, rng);
  return 0.5 * (a + a.adjoint());
}

/// Well-conditioned Hermitian positive definite matrix.
inline Eigen::MatrixXcd random_pd(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXcd a = random_complex(n, 2 * n + 2, rng);
  return a * a.adjoint() / double(a.cols()) + 0.1 * Eigen::MatrixXcd::Identity(n, n);
}

inline Eigen::ArrayXd random_mask(int frames, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::ArrayXd m(frames);
  for (auto& v : m) v = u(rng);
  return m;
}

inline TimeSignal random_signal(int channels, Eigen::Index length, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd s(channels, length);
  for (Eigen::Index j = 0; j < s.cols(); ++j)
    for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, j) = g(rng);
  return {s, 16000};
}

/// Spectrogram holding arbitrary per-bin data, for kernels that do not care
/// whether it came from a real signal.
inline Spectrogram spectrogram_from_bins(const std::vector<Eigen::MatrixXcd>& bins) {
  const int half = std::max(1, static_cast<int>(bins.size()) - 1);
  const StftConfig cfg{2 * half, std::max(1, half / 2), WindowKind::Hann};
  Spectrogram spec(static_cast<int>(bins.front().rows()), static_cast<int>(bins.size()),
                   static_cast<int>(bins.front().cols()), cfg, 16000, 0);
  for (int f = 0; f < spec.num_bins(); ++f) spec.bin(f) = bins[f];
  return spec;
}

}  // namespace maskbf::test_support
