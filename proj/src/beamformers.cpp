#include "maskbf/beamformers.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

using MaskRow = Eigen::Ref<const Eigen::ArrayXd>;

void check_mask_shape(const Spectrogram& x, const MaskArray& m, const char* name) {
  if (m.rows() != x.num_bins() || m.cols() != x.num_frames())
    throw InvalidInput(std::string(name) + " shape does not match the spectrogram");
}

void check_row(const BinData& bin, const MaskRow& m) {
  if (m.size() != bin.frames()) throw InvalidInput("mask length != frame count");
  if (m.size() > 0 && !(m.minCoeff() >= 0)) throw ConstraintViolation("mask has negative entries");
}

BeamformerFilter per_bin(const Spectrogram& x, MethodId method, int ref_mic, double loading,
                         const std::function<Eigen::VectorXcd(const BinData&, int)>& kernel) {
  BeamformerFilter out;
  out.method = method;
  out.ref_mic = ref_mic;
  out.weights = Eigen::MatrixXcd::Zero(x.num_channels(), x.num_bins());
  for (int f = 0; f < x.num_bins(); ++f) {
    const BinData bin(x.bin(f), loading);
    try {
      out.weights.col(f) = kernel(bin, f);
    } catch (const NumericalError& e) {
      out.warnings.push_back("bin " + std::to_string(f) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(MethodId method) {
  switch (method) {
    case MethodId::MaskMwf: return "MaskMwf";
    case MethodId::IdealMwf: return "IdealMwf";
    case MethodId::MaxSnr: return "MaxSnr";
    case MethodId::MaxSor: return "MaxSor";
    case MethodId::MinNor: return "MinNor";
  }
  return "?";
}

MethodId parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto m : {MethodId::MaskMwf, MethodId::IdealMwf, MethodId::MaxSnr, MethodId::MaxSor,
                 MethodId::MinNor}) {
    std::string candidate(to_string(m));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (candidate == lower) return m;
  }
  if (lower == "mwf") return MethodId::MaskMwf;
  throw InvalidInput("unknown beamformer method '" + std::string(name) + "'");
}

BinData::BinData(Eigen::MatrixXcd obs, double eps) : x(std::move(obs)), loading(eps) {
  if (eps < 0) throw InvalidInput("loading must be nonnegative");
  phi_x = covariance(x);
  tau = x.rows() > 0 ? phi_x.trace().real() / double(x.rows()) : 0.0;
}

HermitianMatrix loaded_masked_covariance(const BinData& bin, const MaskRow& mask) {
  HermitianMatrix c = weighted_covariance(bin.x, mask);
  c.diagonal().array() += bin.loading * bin.tau * mask.mean();
  return c;
}

Eigen::VectorXcd mask_mwf_weights(const BinData& bin, const MaskRow& ms, int ref_mic) {
  check_row(bin, ms);
  if (ref_mic < 0 || ref_mic >= bin.channels()) throw InvalidInput("ref_mic out of range");
  const Eigen::VectorXcd rhs =
      bin.x * (ms.cast<std::complex<double>>() * bin.x.row(ref_mic).transpose().conjugate().array())
                  .matrix() /
      double(bin.frames());
  return solve_loaded(bin.phi_x, rhs, bin.loading);
}

Eigen::VectorXcd ideal_mwf_weights(const BinData& bin, const Eigen::Ref<const Eigen::VectorXcd>& target_ref) {
  if (target_ref.size() != bin.frames()) throw InvalidInput("target length != frame count");
  const Eigen::VectorXcd rhs = bin.x * target_ref.conjugate() / double(bin.frames());
  return solve_loaded(bin.phi_x, rhs, bin.loading);
}

Eigen::VectorXcd max_snr_weights(const BinData& bin, const MaskRow& ms, const MaskRow& mn) {
  check_row(bin, ms);
  check_row(bin, mn);
  return gev_max(loaded_masked_covariance(bin, ms), loaded_masked_covariance(bin, mn), 0.0).eigenvector;
}

Eigen::VectorXcd max_sor_weights(const BinData& bin, const MaskRow& ms) {
  check_row(bin, ms);
  return gev_max(loaded_masked_covariance(bin, ms), loaded(bin.phi_x, bin.loading), 0.0).eigenvector;
}

Eigen::VectorXcd min_nor_weights(const BinData& bin, const MaskRow& mn) {
  check_row(bin, mn);
  return gev_min(loaded_masked_covariance(bin, mn), loaded(bin.phi_x, bin.loading), 0.0).eigenvector;
}

BeamformerFilter filter_mask_mwf(const Spectrogram& x, const MaskArray& ms, int ref_mic, double loading) {
  check_mask_shape(x, ms, "m_s");
  return per_bin(x, MethodId::MaskMwf, ref_mic, loading, [&](const BinData& bin, int f) {
    return mask_mwf_weights(bin, ms.row(f).transpose(), ref_mic);
  });
}

BeamformerFilter filter_ideal_mwf(const Spectrogram& x, const Spectrogram& s, int ref_mic, double loading) {
  if (!x.same_shape(s)) throw InvalidInput("ideal MWF: target spectrogram shape mismatch");
  if (ref_mic < 0 || ref_mic >= x.num_channels()) throw InvalidInput("ref_mic out of range");
  return per_bin(x, MethodId::IdealMwf, ref_mic, loading, [&](const BinData& bin, int f) {
    return ideal_mwf_weights(bin, s.bin(f).row(ref_mic).transpose());
  });
}

BeamformerFilter filter_max_snr(const Spectrogram& x, const MaskArray& ms, const MaskArray& mn, double loading) {
  check_mask_shape(x, ms, "m_s");
  check_mask_shape(x, mn, "m_n");
  return per_bin(x, MethodId::MaxSnr, 0, loading, [&](const BinData& bin, int f) {
    return max_snr_weights(bin, ms.row(f).transpose(), mn.row(f).transpose());
  });
}

BeamformerFilter filter_min_nor(const Spectrogram& x, const MaskArray& mn, double loading) {
  check_mask_shape(x, mn, "m_n");
  return per_bin(x, MethodId::MinNor, 0, loading, [&](const BinData& bin, int f) {
    return min_nor_weights(bin, mn.row(f).transpose());
  });
}

BeamformerFilter filter_max_sor(const Spectrogram& x, const MaskArray& ms, double loading) {
  check_mask_shape(x, ms, "m_s");
  return per_bin(x, MethodId::MaxSor, 0, loading, [&](const BinData& bin, int f) {
    return max_sor_weights(bin, ms.row(f).transpose());
  });
}

BeamformerFilter estimate_filter(MethodId method, const Spectrogram& x, const MaskSet& masks,
                                 const Spectrogram* target, int ref_mic, double loading) {
  masks.validate();
  if (uses_target_mask(method) && !masks.has_ms())
    throw InvalidInput(std::string(to_string(method)) + " requires m_s");
  if (uses_interference_mask(method) && !masks.has_mn())
    throw InvalidInput(std::string(to_string(method)) + " requires m_n");
  BeamformerFilter out;
  switch (method) {
    case MethodId::MaskMwf: return filter_mask_mwf(x, *masks.ms, ref_mic, loading);
    case MethodId::IdealMwf:
      if (target == nullptr) throw InvalidInput("IdealMwf requires the target spectrogram");
      return filter_ideal_mwf(x, *target, ref_mic, loading);
    case MethodId::MaxSnr: out = filter_max_snr(x, *masks.ms, *masks.mn, loading); break;
    case MethodId::MaxSor: out = filter_max_sor(x, *masks.ms, loading); break;
    case MethodId::MinNor: out = filter_min_nor(x, *masks.mn, loading); break;
  }
  out.ref_mic = ref_mic;
  return out;
}

Eigen::MatrixXcd apply_filter(const BeamformerFilter& filter, const Spectrogram& x) {
  if (filter.weights.rows() != x.num_channels() || filter.weights.cols() != x.num_bins())
    throw InvalidInput("apply_filter: filter shape does not match spectrogram");
  Eigen::MatrixXcd y(x.num_bins(), x.num_frames());
  for (int f = 0; f < x.num_bins(); ++f) y.row(f) = filter.weights.col(f).adjoint() * x.bin(f);
  return y;
}

ScaledOutput ideal_scale(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& target_ref) {
  if (y.rows() != target_ref.rows() || y.cols() != target_ref.cols())
    throw InvalidInput("ideal_scale: shape mismatch");
  ScaledOutput out{y, Eigen::VectorXcd::Zero(y.rows())};
  for (Eigen::Index f = 0; f < y.rows(); ++f) {
    const double power = y.row(f).squaredNorm();
    // <s y^*> = sum_t s(t) conj(y(t))
    const std::complex<double> cross = (target_ref.row(f).array() * y.row(f).array().conjugate()).sum();
    out.gamma(f) = power > 0 ? cross / power : std::complex<double>(0);
    out.y.row(f) *= out.gamma(f);
  }
  return out;
}

}  // namespace maskbf
