#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "maskbf/tf_transform.hpp"

namespace maskbf {

/// Real mask, one row per frequency bin, one column per frame.
using MaskArray = Eigen::ArrayXXd;

/// Target mask m_s and/or interference mask m_n.
struct MaskSet {
  std::optional<MaskArray> ms;
  std::optional<MaskArray> mn;

  bool has_ms() const { return ms.has_value(); }
  bool has_mn() const { return mn.has_value(); }

  /// Throws ConstraintViolation on a negative or non-finite entry and
  /// InvalidInput when two present masks disagree in shape.
  void validate() const;
};

struct MaskKind {
  enum class Type { Irm, Smm, Optimized, Uniform };
  Type type = Type::Uniform;
  double beta = 1.0;  // Irm only

  static MaskKind irm(double beta) { return {Type::Irm, beta}; }
  static MaskKind smm() { return {Type::Smm, 1.0}; }
  static MaskKind optimized() { return {Type::Optimized, 1.0}; }
  static MaskKind uniform() { return {Type::Uniform, 1.0}; }

  /// "IRM(b=1)", "IRM(b=0.5)", "SMM", "Optimized", "Uniform".
  std::string label() const;
};

/// Ideal ratio masks on microphone `ref_mic`. Silent cells (both powers
/// zero) get 0.5^beta in both masks.
MaskSet irm(const Spectrogram& target, const Spectrogram& interference, int ref_mic, double beta);

/// Spectral magnitude masks |s_k|/|x_k| and |n_k|/|x_k|; zero where |x_k| = 0.
/// Values above one are kept.
MaskSet smm(const Spectrogram& target, const Spectrogram& interference, int ref_mic);

/// m_s(t) = max_t' m_n(t') - m_n(t), per frequency bin.
MaskArray ms_from_mn(const MaskArray& mn);
/// m_n(t) = max_t' m_s(t') - m_s(t), per frequency bin.
MaskArray mn_from_ms(const MaskArray& ms);

/// Clamp to >= 0 and scale so the mean square over frames is one. A bin
/// that is all zero after clamping becomes all ones.
void project_row(Eigen::Ref<Eigen::ArrayXd> row);
MaskArray project_constraints(const MaskArray& mask);

MaskArray uniform_mask(int bins, int frames);

}  // namespace maskbf
