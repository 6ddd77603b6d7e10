#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace maskbf {

/// Multichannel real waveform, one row per channel.
struct TimeSignal {
  Eigen::MatrixXd samples;  // channels x length
  int sample_rate = 16000;

  TimeSignal() = default;
  TimeSignal(Eigen::MatrixXd s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  int channels() const { return static_cast<int>(samples.rows()); }
  Eigen::Index length() const { return samples.cols(); }
  /// Single-channel view as a new signal.
  TimeSignal channel(int n) const { return {samples.row(n), sample_rate}; }
};

enum class WindowKind { Hann, SqrtHann, Rectangular };

struct StftConfig {
  int window_len = 1024;
  int hop_len = 256;
  WindowKind window = WindowKind::Hann;

  int num_bins() const { return window_len / 2 + 1; }

  /// Throws InvalidConfig unless 0 < hop <= len, len is even and the
  /// squared window overlap-adds to a constant at this hop.
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Periodic analysis window of the configured kind.
Eigen::VectorXd analysis_window(const StftConfig& config);

/// Synthesis window dual to the analysis window under weighted overlap-add.
Eigen::VectorXd synthesis_window(const StftConfig& config);

/// One-sided complex spectrogram. Frequency bin f holds a channels x frames
/// matrix, which is the layout every beamforming kernel consumes.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(int channels, int bins, int frames, const StftConfig& config,
              int sample_rate, Eigen::Index signal_length);

  int num_channels() const { return channels_; }
  int num_bins() const { return static_cast<int>(bins_.size()); }
  int num_frames() const { return frames_; }
  const StftConfig& config() const { return config_; }
  int sample_rate() const { return sample_rate_; }
  Eigen::Index signal_length() const { return signal_length_; }

  Eigen::MatrixXcd& bin(int f) { return bins_[f]; }
  const Eigen::MatrixXcd& bin(int f) const { return bins_[f]; }

  std::complex<double>& operator()(int n, int f, int t) { return bins_[f](n, t); }
  const std::complex<double>& operator()(int n, int f, int t) const { return bins_[f](n, t); }

  /// bins x frames matrix of channel n.
  Eigen::MatrixXcd channel(int n) const;

  bool same_shape(const Spectrogram& other) const {
    return channels_ == other.channels_ && frames_ == other.frames_ &&
           num_bins() == other.num_bins();
  }

  Spectrogram& operator+=(const Spectrogram& other);
  Spectrogram& operator*=(double gain);

 private:
  int channels_ = 0;
  int frames_ = 0;
  StftConfig config_;
  int sample_rate_ = 0;
  Eigen::Index signal_length_ = 0;
  std::vector<Eigen::MatrixXcd> bins_;
};

/// Number of frames produced for a signal of the given length.
int num_frames_for(Eigen::Index length, const StftConfig& config);

/// Zero-pads window_len samples at both ends, then frames, windows and
/// takes the one-sided DFT of every frame.
Spectrogram stft(const TimeSignal& signal, const StftConfig& config);

/// Weighted overlap-add inverse of stft(); trims the padding so the output
/// has the original signal length.
TimeSignal istft(const Spectrogram& spec, const StftConfig& config);

/// Inverse of a single-channel bins x frames matrix using the metadata of
/// `like` (config, sample rate, length).
Eigen::VectorXd istft_channel(const Eigen::MatrixXcd& bins_by_frames, const Spectrogram& like);

}  // namespace maskbf
