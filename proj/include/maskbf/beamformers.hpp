#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "maskbf/cov_linalg.hpp"
#include "maskbf/masks.hpp"
#include "maskbf/tf_transform.hpp"

namespace maskbf {

enum class MethodId { MaskMwf, IdealMwf, MaxSnr, MaxSor, MinNor };

std::string_view to_string(MethodId method);
/// Accepts the enumerator names case-insensitively ("maxsnr", "MaskMwf", ...).
MethodId parse_method(std::string_view name);

constexpr bool uses_target_mask(MethodId m) {
  return m == MethodId::MaskMwf || m == MethodId::MaxSnr || m == MethodId::MaxSor;
}
constexpr bool uses_interference_mask(MethodId m) {
  return m == MethodId::MaxSnr || m == MethodId::MinNor;
}
constexpr bool is_gev_method(MethodId m) {
  return m == MethodId::MaxSnr || m == MethodId::MaxSor || m == MethodId::MinNor;
}

/// Per-frequency weights, column f is w_f (channels x bins).
struct BeamformerFilter {
  Eigen::MatrixXcd weights;
  MethodId method = MethodId::MaskMwf;
  int ref_mic = 0;
  std::vector<std::string> warnings;  // per-bin failures, bin zeroed

  int num_bins() const { return static_cast<int>(weights.cols()); }
};

struct ScaledOutput {
  Eigen::MatrixXcd y;      // bins x frames, already multiplied by gamma
  Eigen::VectorXcd gamma;  // per bin
};

/// Observation statistics of one frequency bin shared by every filter.
struct BinData {
  Eigen::MatrixXcd x;     // channels x frames
  HermitianMatrix phi_x;  // unloaded <x x^H>
  double tau = 0;         // trace(phi_x) / N
  double loading = kDefaultLoading;

  BinData() = default;
  BinData(Eigen::MatrixXcd obs, double eps);

  int channels() const { return static_cast<int>(x.rows()); }
  int frames() const { return static_cast<int>(x.cols()); }
};

/// Mask-weighted covariance with the diagonal load spread over the frames:
/// <m(t) (x x^H + eps*tau*I)>_t. With unit weights this is phi_x loaded by
/// eps, and it stays linear in the mask, so m_s + m_n = alpha implies
/// Phi_s + Phi_n = alpha * Phi_x for the loaded matrices too.
HermitianMatrix loaded_masked_covariance(const BinData& bin, const Eigen::Ref<const Eigen::ArrayXd>& mask);

// Per-bin filter kernels. Throw NumericalError on singular statistics.
Eigen::VectorXcd mask_mwf_weights(const BinData& bin, const Eigen::Ref<const Eigen::ArrayXd>& ms, int ref_mic);
Eigen::VectorXcd ideal_mwf_weights(const BinData& bin, const Eigen::Ref<const Eigen::VectorXcd>& target_ref);
Eigen::VectorXcd max_snr_weights(const BinData& bin, const Eigen::Ref<const Eigen::ArrayXd>& ms,
                                 const Eigen::Ref<const Eigen::ArrayXd>& mn);
Eigen::VectorXcd max_sor_weights(const BinData& bin, const Eigen::Ref<const Eigen::ArrayXd>& ms);
Eigen::VectorXcd min_nor_weights(const BinData& bin, const Eigen::Ref<const Eigen::ArrayXd>& mn);

// Whole-spectrogram filters. A bin whose statistics are singular gets a
// zero filter and a warning.
BeamformerFilter filter_mask_mwf(const Spectrogram& x, const MaskArray& ms, int ref_mic,
                                 double loading = kDefaultLoading);
BeamformerFilter filter_ideal_mwf(const Spectrogram& x, const Spectrogram& s, int ref_mic,
                                  double loading = kDefaultLoading);
BeamformerFilter filter_max_snr(const Spectrogram& x, const MaskArray& ms, const MaskArray& mn,
                                double loading = kDefaultLoading);
BeamformerFilter filter_min_nor(const Spectrogram& x, const MaskArray& mn,
                                double loading = kDefaultLoading);
BeamformerFilter filter_max_sor(const Spectrogram& x, const MaskArray& ms,
                                double loading = kDefaultLoading);

/// Dispatches on `method`. `target` is required for IdealMwf only; masks
/// required by the method must be present (InvalidInput otherwise).
BeamformerFilter estimate_filter(MethodId method, const Spectrogram& x, const MaskSet& masks,
                                 const Spectrogram* target, int ref_mic,
                                 double loading = kDefaultLoading);

/// y(f, t) = w_f^H x_f(t), bins x frames.
Eigen::MatrixXcd apply_filter(const BeamformerFilter& filter, const Spectrogram& x);

/// gamma_f = <s_k y^*>_t / <|y|^2>_t (zero when the output is silent).
ScaledOutput ideal_scale(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& target_ref);

}  // namespace maskbf
