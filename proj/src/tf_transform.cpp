#include "maskbf/tf_transform.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

// Sum of squared window over all hops, evaluated at each phase 0..hop-1.
Eigen::VectorXd squared_overlap(const Eigen::VectorXd& window, int hop) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(hop);
  for (Eigen::Index i = 0; i < window.size(); ++i) acc(i % hop) += window(i) * window(i);
  return acc;
}

}  // namespace

void StftConfig::validate() const {
  if (window_len <= 0 || hop_len <= 0 || hop_len > window_len)
    throw InvalidConfig("stft: need 0 < hop_len <= window_len");
  if (window_len % 2 != 0) throw InvalidConfig("stft: window_len must be even");
  const Eigen::VectorXd acc = squared_overlap(analysis_window(*this), hop_len);
  const double hi = acc.maxCoeff(), lo = acc.minCoeff();
  if (!(lo > 0.0) || (hi - lo) > 1e-9 * hi)
    throw InvalidConfig("stft: window does not overlap-add to a constant at hop " +
                        std::to_string(hop_len));
}

Eigen::VectorXd analysis_window(const StftConfig& config) {
  const int len = config.window_len;
  Eigen::VectorXd w(len);
  for (int i = 0; i < len; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / len);
    switch (config.window) {
      case WindowKind::Hann: w(i) = hann; break;
      case WindowKind::SqrtHann: w(i) = std::sqrt(hann); break;
      case WindowKind::Rectangular: w(i) = 1.0; break;
    }
  }
  return w;
}

Eigen::VectorXd synthesis_window(const StftConfig& config) {
  const Eigen::VectorXd w = analysis_window(config);
  // Constant after validate(); use the mean to absorb rounding.
  const double norm = squared_overlap(w, config.hop_len).mean();
  return w / norm;
}

Spectrogram::Spectrogram(int channels, int bins, int frames, const StftConfig& config,
                         int sample_rate, Eigen::Index signal_length)
    : channels_(channels),
      frames_(frames),
      config_(config),
      sample_rate_(sample_rate),
      signal_length_(signal_length),
      bins_(bins, Eigen::MatrixXcd::Zero(channels, frames)) {}

Eigen::MatrixXcd Spectrogram::channel(int n) const {
  Eigen::MatrixXcd out(num_bins(), frames_);
  for (int f = 0; f < num_bins(); ++f) out.row(f) = bins_[f].row(n);
  return out;
}

Spectrogram& Spectrogram::operator+=(const Spectrogram& other) {
  if (!same_shape(other)) throw InvalidInput("spectrogram shape mismatch");
  for (int f = 0; f < num_bins(); ++f) bins_[f] += other.bins_[f];
  return *this;
}

Spectrogram& Spectrogram::operator*=(double gain) {
  for (auto& b : bins_) b *= gain;
  return *this;
}

int num_frames_for(Eigen::Index length, const StftConfig& config) {
  const Eigen::Index padded = length + 2 * Eigen::Index{config.window_len};
  return static_cast<int>((padded - config.window_len) / config.hop_len + 1);
}

Spectrogram stft(const TimeSignal& signal, const StftConfig& config) {
  if (signal.channels() < 1 || signal.length() < 1) throw InvalidInput("stft: empty signal");
  if (signal.sample_rate <= 0) throw InvalidInput("stft: sample_rate must be positive");
  config.validate();

  const int len = config.window_len, hop = config.hop_len;
  const int frames = num_frames_for(signal.length(), config);
  const int bins = config.num_bins();
  Spectrogram spec(signal.channels(), bins, frames, config, signal.sample_rate, signal.length());

  const Eigen::VectorXd window = analysis_window(config);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(len);
  std::vector<std::complex<double>> out;

  for (int n = 0; n < signal.channels(); ++n) {
    for (int t = 0; t < frames; ++t) {
      // Frame t starts at padded index t*hop, i.e. original index t*hop - len.
      const Eigen::Index start = Eigen::Index{t} * hop - len;
      for (int i = 0; i < len; ++i) {
        const Eigen::Index src = start + i;
        frame[i] = (src >= 0 && src < signal.length()) ? window(i) * signal.samples(n, src) : 0.0;
      }
      fft.fwd(out, frame);
      for (int f = 0; f < bins; ++f) spec(n, f, t) = out[f];
    }
  }
  return spec;
}

Eigen::VectorXd istft_channel(const Eigen::MatrixXcd& bins_by_frames, const Spectrogram& like) {
  const StftConfig& config = like.config();
  const int len = config.window_len, hop = config.hop_len;
  const int frames = static_cast<int>(bins_by_frames.cols());
  const Eigen::Index length = like.signal_length();
  const Eigen::VectorXd synth = synthesis_window(config);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> half(config.num_bins());
  std::vector<double> frame;
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < config.num_bins(); ++f) half[f] = bins_by_frames(f, t);
    fft.inv(frame, half, len);
    const Eigen::Index start = Eigen::Index{t} * hop - len;
    for (int i = 0; i < len; ++i) {
      const Eigen::Index dst = start + i;
      if (dst >= 0 && dst < length) out(dst) += synth(i) * frame[i];
    }
  }
  return out;
}

TimeSignal istft(const Spectrogram& spec, const StftConfig& config) {
  if (!(spec.config() == config)) throw InvalidConfig("istft: config differs from analysis");
  config.validate();
  if (spec.num_bins() != config.num_bins() ||
      spec.num_frames() != num_frames_for(spec.signal_length(), config))
    throw InvalidConfig("istft: spectrogram shape inconsistent with config");

  Eigen::MatrixXd samples(spec.num_channels(), spec.signal_length());
  for (int n = 0; n < spec.num_channels(); ++n)
    samples.row(n) = istft_channel(spec.channel(n), spec).transpose();
  return {std::move(samples), spec.sample_rate()};
}

}  // namespace maskbf
