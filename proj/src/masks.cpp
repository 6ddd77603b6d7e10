#include "maskbf/masks.hpp"

#include <cmath>
#include <sstream>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

void check_pair(const Spectrogram& target, const Spectrogram& interference, int ref_mic) {
  if (!target.same_shape(interference)) throw InvalidInput("mask: target/interference shape mismatch");
  if (ref_mic < 0 || ref_mic >= target.num_channels())
    throw InvalidInput("mask: reference microphone out of range");
}

MaskArray complement(const MaskArray& in) {
  if (in.cols() == 0) throw InvalidInput("mask conversion: empty frame axis");
  MaskArray out(in.rows(), in.cols());
  for (Eigen::Index f = 0; f < in.rows(); ++f) out.row(f) = in.row(f).maxCoeff() - in.row(f);
  return out;
}

}  // namespace

void MaskSet::validate() const {
  for (const auto* m : {&ms, &mn}) {
    if (!m->has_value()) continue;
    if (!(*m)->allFinite()) throw ConstraintViolation("mask has non-finite entries");
    if ((*m)->size() > 0 && (*m)->minCoeff() < 0) throw ConstraintViolation("mask has negative entries");
  }
  if (ms && mn && (ms->rows() != mn->rows() || ms->cols() != mn->cols()))
    throw InvalidInput("m_s and m_n shapes differ");
}

std::string MaskKind::label() const {
  switch (type) {
    case Type::Irm: {
      std::ostringstream os;
      os << "IRM(b=" << beta << ")";
      return os.str();
    }
    case Type::Smm: return "SMM";
    case Type::Optimized: return "Optimized";
    case Type::Uniform: return "Uniform";
  }
  return "?";
}

MaskSet irm(const Spectrogram& target, const Spectrogram& interference, int ref_mic, double beta) {
  check_pair(target, interference, ref_mic);
  if (!(beta > 0)) throw InvalidInput("irm: beta must be positive");
  const int bins = target.num_bins(), frames = target.num_frames();
  MaskArray ms(bins, frames), mn(bins, frames);
  const double silent = std::pow(0.5, beta);
  for (int f = 0; f < bins; ++f) {
    for (int t = 0; t < frames; ++t) {
      const double ps = std::norm(target(ref_mic, f, t));
      const double pn = std::norm(interference(ref_mic, f, t));
      const double total = ps + pn;
      if (total == 0) {
        ms(f, t) = mn(f, t) = silent;
      } else if (beta == 1.0) {
        ms(f, t) = ps / total;
        mn(f, t) = pn / total;
      } else {
        ms(f, t) = std::pow(ps / total, beta);
        mn(f, t) = std::pow(pn / total, beta);
      }
    }
  }
  return {std::move(ms), std::move(mn)};
}

MaskSet smm(const Spectrogram& target, const Spectrogram& interference, int ref_mic) {
  check_pair(target, interference, ref_mic);
  const int bins = target.num_bins(), frames = target.num_frames();
  MaskArray ms(bins, frames), mn(bins, frames);
  for (int f = 0; f < bins; ++f) {
    for (int t = 0; t < frames; ++t) {
      const auto s = target(ref_mic, f, t), n = interference(ref_mic, f, t);
      const double mix = std::abs(s + n);
      ms(f, t) = mix == 0 ? 0.0 : std::abs(s) / mix;
      mn(f, t) = mix == 0 ? 0.0 : std::abs(n) / mix;
    }
  }
  return {std::move(ms), std::move(mn)};
}

MaskArray ms_from_mn(const MaskArray& mn) { return complement(mn); }
MaskArray mn_from_ms(const MaskArray& ms) { return complement(ms); }

void project_row(Eigen::Ref<Eigen::ArrayXd> row) {
  row = row.max(0.0);
  const double mean_square = row.square().mean();
  if (!(mean_square > 0)) {
    row.setOnes();
    return;
  }
  row /= std::sqrt(mean_square);
}

MaskArray project_constraints(const MaskArray& mask) {
  MaskArray out = mask;
  for (Eigen::Index f = 0; f < out.rows(); ++f) {
    Eigen::ArrayXd row = out.row(f).transpose();
    project_row(row);
    out.row(f) = row.transpose();
  }
  return out;
}

MaskArray uniform_mask(int bins, int frames) { return MaskArray::Ones(bins, frames); }

}  // namespace maskbf
