#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskbf/tf_transform.hpp"

namespace maskbf {

class KeyValueConfig;

/// Observation with its ground-truth split x = s + n on every microphone.
struct Scene {
  TimeSignal x, s, n;
  Spectrogram x_spec, s_spec, n_spec;
  double bg_multiplier = 1.0;
  int ref_mic = 0;
  std::string label;

  int sample_rate() const { return x.sample_rate; }
  int num_mics() const { return x.channels(); }
};

enum class SourceKind { SpeechLike, Pink, White, Babble, Wav };

struct SceneSpec {
  int n_mics = 4;
  double duration = 2.0;  // seconds
  int sample_rate = 16000;
  SourceKind target_kind = SourceKind::SpeechLike;
  std::filesystem::path target_wav;  // when target_kind == Wav (channel 0 used)
  SourceKind noise_kind = SourceKind::Pink;
  std::filesystem::path noise_wav;
  bool noise_modulated = false;  // independent slow envelope per noise source
  /// Directional noise sources; the first uses noise_delays/noise_gains,
  /// the others always draw their geometry from the seed.
  int noise_sources = 1;
  // Fractional per-mic delays (samples) and gains of the target and the
  // first directional noise source. Empty means drawn from the seed.
  std::vector<double> target_delays, target_gains;
  std::vector<double> noise_delays, noise_gains;
  /// Upper end of drawn per-mic delays, samples (clipped below window_len/4).
  double max_drawn_delay = 6.0;
  /// RMS of the directional noise relative to the target, before bg_multiplier.
  double noise_level = 0.5;
  /// RMS of spatially uncorrelated per-mic noise relative to the directional noise.
  double diffuse_level = 0.5;
  double bg_multiplier = 1.0;
  int ref_mic = 0;
  std::uint64_t seed = 1;
  StftConfig stft{256, 64, WindowKind::Hann};
  std::string label;

  /// InvalidConfig on bad counts, non-positive gains or delays >= window_len/4.
  void validate() const;
};

/// Renders the target and noise, applies per-mic fractional delays (phase
/// ramp in the frequency domain) and gains, scales the noise by
/// bg_multiplier and sums. Deterministic given the seed.
Scene synth_scene(SceneSpec spec);

/// Fills unset geometry of the i-th scene of a synthetic suite from `seed`.
SceneSpec suite_scene_spec(int index, std::uint64_t seed, int n_mics, double duration,
                           const StftConfig& stft);

/// Reads SceneSpec fields from key/value config (n_mics, duration, ...).
SceneSpec scene_spec_from_config(const KeyValueConfig& config);

/// Where clean and noise stems live under a dataset root.
struct ChimeLayout {
  std::string clean_dir = "clean";
  std::string noise_dir = "noise";
};

/// Loads "<root>/<clean_dir>/<utt>.CH<d>.wav" and the matching noise stems,
/// forms x = s + multiplier * n. DatasetError names the first missing or
/// ragged file.
Scene load_chime_scene(const std::filesystem::path& root, const std::string& utterance,
                       double bg_multiplier, const StftConfig& stft, int ref_mic = 4,
                       const ChimeLayout& layout = {});

/// Utterance ids found as "<root>/<clean_dir>/*.CH1.wav", sorted.
std::vector<std::string> list_chime_utterances(const std::filesystem::path& root,
                                               const ChimeLayout& layout = {});

/// Writes x, s and n as per-mic WAV stems "<dir>/<label>_{mix,target,noise}.CH<d>.wav".
void export_scene(const Scene& scene, const std::filesystem::path& dir);

}  // namespace maskbf
