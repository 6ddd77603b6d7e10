#include "maskbf/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>

#include "maskbf/config.hpp"
#include "maskbf/error.hpp"
#include "maskbf/wav_io.hpp"

namespace maskbf {

namespace {

constexpr double kTargetRms = 0.1;

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

double rms(const Eigen::VectorXd& v) { return v.size() ? std::sqrt(v.squaredNorm() / v.size()) : 0.0; }

Eigen::VectorXd normalized(Eigen::VectorXd v, double target_rms) {
  const double r = rms(v);
  if (r > 0) v *= target_rms / r;
  return v;
}

// Voiced segments of harmonic tones with random onsets, pitch glides and a
// slow amplitude modulation, separated by silences.
Eigen::VectorXd speech_like(Eigen::Index length, int rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  Eigen::Index pos = static_cast<Eigen::Index>(u(rng) * 0.1 * rate);
  while (pos < length) {
    const auto seg = static_cast<Eigen::Index>((0.08 + 0.22 * u(rng)) * rate);
    const double f0 = 100.0 + 150.0 * u(rng);
    const double glide = -0.2 + 0.4 * u(rng);
    const int harmonics = 6 + static_cast<int>(u(rng) * 5);  // 6..10
    const double am_rate = 3.0 + 3.0 * u(rng);
    const double am_phase = 2 * std::numbers::pi * u(rng);
    const double formant = 300.0 + 1500.0 * u(rng);
    std::vector<double> amp(harmonics + 1), phase(harmonics + 1);
    for (int h = 1; h <= harmonics; ++h) {
      const double fh = h * f0;
      amp[h] = (1.0 / h) * (0.4 + std::exp(-std::pow((fh - formant) / 400.0, 2)));
      phase[h] = 2 * std::numbers::pi * u(rng);
    }
    for (Eigen::Index i = 0; i < seg && pos + i < length; ++i) {
      const double frac = double(i) / seg;
      const double env = std::pow(std::sin(std::numbers::pi * frac), 2) *
                         (1.0 + 0.4 * std::sin(2 * std::numbers::pi * am_rate * i / rate + am_phase));
      const double f = f0 * (1.0 + glide * frac);
      double v = 0;
      for (int h = 1; h <= harmonics; ++h) {
        phase[h] += 2 * std::numbers::pi * h * f / rate;
        if (h * f < 0.45 * rate) v += amp[h] * std::sin(phase[h]);
      }
      out(pos + i) += env * v;
    }
    pos += seg + static_cast<Eigen::Index>((0.02 + 0.18 * u(rng)) * rate);
  }
  return normalized(std::move(out), kTargetRms);
}

Eigen::VectorXd white_noise(Eigen::Index length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd out(length);
  for (auto& v : out) v = g(rng);
  return normalized(std::move(out), 1.0);
}

Eigen::VectorXd pink_noise(Eigen::Index length, std::uint64_t seed) {
  const Eigen::Index nfft = next_pow2(length);
  const Eigen::VectorXd white = white_noise(nfft, seed);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> in(white.data(), white.data() + nfft), back;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  spec[0] = 0;
  for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(double(k));
  fft.inv(back, spec, nfft);
  return normalized(Eigen::Map<Eigen::VectorXd>(back.data(), length), 1.0);
}

Eigen::VectorXd babble(Eigen::Index length, int rate, std::uint64_t seed) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  for (int talker = 0; talker < 3; ++talker) out += speech_like(length, rate, seed * 31 + talker + 1);
  return normalized(std::move(out), 1.0);
}

Eigen::VectorXd from_wav(const std::filesystem::path& path, Eigen::Index length, int rate) {
  const TimeSignal sig = read_wav(path);
  if (sig.sample_rate != rate)
    throw InvalidConfig(path.string() + ": sample rate " + std::to_string(sig.sample_rate) +
                        " differs from scene rate " + std::to_string(rate));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  const Eigen::Index n = std::min(length, sig.length());
  out.head(n) = sig.samples.row(0).head(n).transpose();
  return out;
}

// Delay by a fractional number of samples with a linear phase ramp.
Eigen::VectorXd delayed(const Eigen::VectorXd& x, double delay) {
  if (delay == 0) return x;
  const Eigen::Index pad = static_cast<Eigen::Index>(std::ceil(std::abs(delay))) + 64;
  const Eigen::Index nfft = next_pow2(x.size() + 2 * pad);
  std::vector<double> in(nfft, 0.0), back;
  std::copy(x.data(), x.data() + x.size(), in.begin() + pad);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] *= std::polar(1.0, -2 * std::numbers::pi * double(k) * delay / double(nfft));
  spec.back() = 0;  // Nyquist bin cannot carry a fractional phase and stay real
  fft.inv(back, spec, nfft);
  return Eigen::Map<Eigen::VectorXd>(back.data() + pad, x.size());
}

Eigen::VectorXd render(SourceKind kind, const std::filesystem::path& wav, Eigen::Index length, int rate,
                       std::uint64_t seed) {
  switch (kind) {
    case SourceKind::SpeechLike: return speech_like(length, rate, seed);
    case SourceKind::Pink: return pink_noise(length, seed);
    case SourceKind::White: return white_noise(length, seed);
    case SourceKind::Babble: return babble(length, rate, seed);
    case SourceKind::Wav: return from_wav(wav, length, rate);
  }
  return Eigen::VectorXd::Zero(length);
}

// Slow raised-sine envelope with random rate and phase, depth 0.9.
void modulate(Eigen::VectorXd& x, int rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f = 0.4 + 1.2 * u(rng);
  const double phase = 2 * std::numbers::pi * u(rng);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i) *= 1.0 + 0.9 * std::sin(2 * std::numbers::pi * f * i / rate + phase);
}

SourceKind parse_kind(const std::string& s) {
  if (s == "speech" || s == "speech-like" || s == "speech_like") return SourceKind::SpeechLike;
  if (s == "pink") return SourceKind::Pink;
  if (s == "white") return SourceKind::White;
  if (s == "babble") return SourceKind::Babble;
  if (s == "wav") return SourceKind::Wav;
  throw InvalidConfig("unknown source kind '" + s + "'");
}

void fill(std::vector<double>& v, int n, std::mt19937_64& rng, double lo, double hi) {
  if (!v.empty()) return;
  std::uniform_real_distribution<double> u(lo, hi);
  v.resize(n);
  for (auto& x : v) x = u(rng);
}

}  // namespace

void SceneSpec::validate() const {
  if (n_mics < 1) throw InvalidConfig("scene: n_mics must be >= 1");
  if (!(duration > 0)) throw InvalidConfig("scene: duration must be > 0");
  if (sample_rate <= 0) throw InvalidConfig("scene: sample_rate must be > 0");
  if (ref_mic < 0 || ref_mic >= n_mics) throw InvalidConfig("scene: ref_mic out of range");
  if (!(bg_multiplier >= 0)) throw InvalidConfig("scene: bg_multiplier must be >= 0");
  if (!(noise_level >= 0) || !(diffuse_level >= 0)) throw InvalidConfig("scene: noise levels must be >= 0");
  stft.validate();
  const double max_delay = stft.window_len / 4.0;
  for (const auto* list : {&target_delays, &noise_delays}) {
    if (!list->empty() && static_cast<int>(list->size()) != n_mics)
      throw InvalidConfig("scene: delay list must have n_mics entries");
    for (double d : *list)
      if (!std::isfinite(d) || std::abs(d) >= max_delay)
        throw InvalidConfig("scene: delay must be below window_len/4 samples");
  }
  for (const auto* list : {&target_gains, &noise_gains}) {
    if (!list->empty() && static_cast<int>(list->size()) != n_mics)
      throw InvalidConfig("scene: gain list must have n_mics entries");
    for (double g : *list)
      if (!(g > 0)) throw InvalidConfig("scene: gains must be > 0");
  }
  if (target_kind == SourceKind::Wav && target_wav.empty()) throw InvalidConfig("scene: target_wav not set");
  if (noise_kind == SourceKind::Wav && noise_wav.empty()) throw InvalidConfig("scene: noise_wav not set");
  if (!(max_drawn_delay >= 0)) throw InvalidConfig("scene: max_drawn_delay must be >= 0");
  if (noise_sources < 1) throw InvalidConfig("scene: noise_sources must be >= 1");
  if (noise_kind == SourceKind::Wav && noise_sources != 1) throw InvalidConfig("scene: a WAV noise is one source");
}

Scene synth_scene(SceneSpec spec) {
  spec.validate();
  std::mt19937_64 geometry(spec.seed * 7919 + 17);
  const double max_delay = std::min(spec.max_drawn_delay, spec.stft.window_len / 4.0 - 1.0);
  fill(spec.target_delays, spec.n_mics, geometry, 0.0, max_delay);
  fill(spec.target_gains, spec.n_mics, geometry, 0.6, 1.0);
  fill(spec.noise_delays, spec.n_mics, geometry, 0.0, max_delay);
  fill(spec.noise_gains, spec.n_mics, geometry, 0.6, 1.0);

  std::vector<std::vector<double>> delays{spec.noise_delays}, gains{spec.noise_gains};
  for (int j = 1; j < spec.noise_sources; ++j) {
    delays.emplace_back();
    gains.emplace_back();
    fill(delays.back(), spec.n_mics, geometry, 0.0, max_delay);
    fill(gains.back(), spec.n_mics, geometry, 0.6, 1.0);
  }

  const auto length = static_cast<Eigen::Index>(std::llround(spec.duration * spec.sample_rate));
  const Eigen::VectorXd target = render(spec.target_kind, spec.target_wav, length, spec.sample_rate, spec.seed * 2 + 1);
  const double source_rms = spec.noise_level * rms(target) / std::sqrt(double(spec.noise_sources));
  const double diffuse_rms = spec.diffuse_level * spec.noise_level * rms(target);

  Eigen::MatrixXd s(spec.n_mics, length), n = Eigen::MatrixXd::Zero(spec.n_mics, length);
  for (int m = 0; m < spec.n_mics; ++m)
    s.row(m) = spec.target_gains[m] * delayed(target, spec.target_delays[m]).transpose();
  for (int j = 0; j < spec.noise_sources; ++j) {
    const std::uint64_t source_seed = spec.seed * 2 + 2 + 7777ull * static_cast<std::uint64_t>(j);
    Eigen::VectorXd noise = normalized(render(spec.noise_kind, spec.noise_wav, length, spec.sample_rate, source_seed), 1.0);
    if (spec.noise_modulated) modulate(noise, spec.sample_rate, source_seed + 1);
    noise *= source_rms;
    for (int m = 0; m < spec.n_mics; ++m) n.row(m) += gains[j][m] * delayed(noise, delays[j][m]).transpose();
  }
  for (int m = 0; m < spec.n_mics; ++m)
    n.row(m) += diffuse_rms * pink_noise(length, spec.seed * 1000003 + 101 + static_cast<std::uint64_t>(m)).transpose();
  n *= spec.bg_multiplier;

  Scene scene;
  scene.s = {std::move(s), spec.sample_rate};
  scene.n = {std::move(n), spec.sample_rate};
  scene.x = {scene.s.samples + scene.n.samples, spec.sample_rate};
  scene.s_spec = stft(scene.s, spec.stft);
  scene.n_spec = stft(scene.n, spec.stft);
  scene.x_spec = stft(scene.x, spec.stft);
  scene.bg_multiplier = spec.bg_multiplier;
  scene.ref_mic = spec.ref_mic;
  scene.label = spec.label.empty() ? "synthetic-" + std::to_string(spec.seed) : spec.label;
  return scene;
}

SceneSpec suite_scene_spec(int index, std::uint64_t seed, int n_mics, double duration, const StftConfig& stft) {
  SceneSpec spec;
  spec.n_mics = n_mics;
  spec.duration = duration;
  spec.stft = stft;
  spec.seed = seed * 1000 + static_cast<std::uint64_t>(index);
  // Several competing talkers from distinct directions plus weak sensor noise.
  spec.noise_kind = SourceKind::SpeechLike;
  spec.noise_sources = 2;
  char label[32];
  std::snprintf(label, sizeof label, "scene%02d", index);
  spec.label = label;
  return spec;
}

SceneSpec scene_spec_from_config(const KeyValueConfig& c) {
  SceneSpec spec;
  spec.n_mics = static_cast<int>(c.get_int("n_mics", spec.n_mics));
  spec.duration = c.get_double("duration", spec.duration);
  spec.sample_rate = static_cast<int>(c.get_int("sample_rate", spec.sample_rate));
  spec.target_kind = parse_kind(c.get_string("target", "speech"));
  spec.target_wav = c.get_string("target_wav", "");
  spec.noise_kind = parse_kind(c.get_string("noise", "pink"));
  spec.noise_wav = c.get_string("noise_wav", "");
  spec.noise_modulated = c.get_bool("noise_modulated", false);
  spec.noise_sources = static_cast<int>(c.get_int("noise_sources", spec.noise_sources));
  spec.max_drawn_delay = c.get_double("max_drawn_delay", spec.max_drawn_delay);
  spec.target_delays = c.get_double_list("target_delays");
  spec.target_gains = c.get_double_list("target_gains");
  spec.noise_delays = c.get_double_list("noise_delays");
  spec.noise_gains = c.get_double_list("noise_gains");
  spec.noise_level = c.get_double("noise_level", spec.noise_level);
  spec.diffuse_level = c.get_double("diffuse_level", spec.diffuse_level);
  spec.bg_multiplier = c.get_double("bg_multiplier", spec.bg_multiplier);
  spec.ref_mic = static_cast<int>(c.get_int("ref_mic", spec.ref_mic));
  spec.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(spec.seed)));
  spec.stft.window_len = static_cast<int>(c.get_int("stft_window", spec.stft.window_len));
  spec.stft.hop_len = static_cast<int>(c.get_int("stft_hop", spec.stft.hop_len));
  spec.label = c.get_string("label", "");
  spec.validate();
  return spec;
}

Scene load_chime_scene(const std::filesystem::path& root, const std::string& utterance, double bg_multiplier,
                       const StftConfig& config, int ref_mic, const ChimeLayout& layout) {
  const TimeSignal clean = read_wav_channels(root / layout.clean_dir / utterance);
  const TimeSignal noise = read_wav_channels(root / layout.noise_dir / utterance, clean.channels());
  if (noise.channels() != clean.channels() || noise.length() != clean.length() ||
      noise.sample_rate != clean.sample_rate)
    throw DatasetError(channel_path(root / layout.noise_dir / utterance, 1).string() +
                       ": noise stems do not match the clean stems");
  if (ref_mic < 0 || ref_mic >= clean.channels())
    throw DatasetError((root / layout.clean_dir / utterance).string() + ": reference mic " +
                       std::to_string(ref_mic + 1) + " not present");
  Scene scene;
  scene.s = clean;
  scene.n = {noise.samples * bg_multiplier, noise.sample_rate};
  scene.x = {scene.s.samples + scene.n.samples, clean.sample_rate};
  scene.s_spec = stft(scene.s, config);
  scene.n_spec = stft(scene.n, config);
  scene.x_spec = stft(scene.x, config);
  scene.bg_multiplier = bg_multiplier;
  scene.ref_mic = ref_mic;
  scene.label = utterance;
  return scene;
}

std::vector<std::string> list_chime_utterances(const std::filesystem::path& root, const ChimeLayout& layout) {
  const auto dir = root / layout.clean_dir;
  if (!std::filesystem::is_directory(dir)) throw DatasetError(dir.string() + ": missing clean directory");
  std::vector<std::string> out;
  const std::string suffix = ".CH1.wav";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void export_scene(const Scene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_wav_channels(dir / (scene.label + "_mix"), scene.x);
  write_wav_channels(dir / (scene.label + "_target"), scene.s);
  write_wav_channels(dir / (scene.label + "_noise"), scene.n);
}

}  // namespace maskbf
