#include "maskbf/wav_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes little endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw DatasetError(path.string() + ": " + what);
}

}  // namespace

TimeSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(path, "not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* chunk = bytes.data() + pos;
    const auto size = read_le<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) fail(path, "truncated fmt chunk");
      format = read_le<std::uint16_t>(bytes.data() + body);
      channels = read_le<std::uint16_t>(bytes.data() + body + 2);
      rate = read_le<std::uint32_t>(bytes.data() + body + 4);
      bits = read_le<std::uint16_t>(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 26) fail(path, "truncated extensible fmt chunk");
        format = read_le<std::uint16_t>(bytes.data() + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) fail(path, "missing fmt chunk");
  if (data == nullptr) fail(path, "missing data chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) fail(path, "unsupported sample format (need PCM16 or float32)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Eigen::MatrixXd samples(channels, static_cast<Eigen::Index>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = data + (i * channels + c) * width;
      samples(c, i) = pcm16 ? read_le<std::int16_t>(p) / 32768.0 : double(read_le<float>(p));
    }
  }
  return {std::move(samples), static_cast<int>(rate)};
}

void write_wav(const std::filesystem::path& path, const TimeSignal& signal, WavFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(path.string() + ": cannot open for writing");

  const std::uint16_t channels = static_cast<std::uint16_t>(signal.channels());
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint32_t block = channels * (bits / 8);
  const auto data_size = static_cast<std::uint32_t>(block * signal.length());

  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVEfmt ", 8);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate) * block);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(block));
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_size);
  for (Eigen::Index i = 0; i < signal.length(); ++i) {
    for (int c = 0; c < channels; ++c) {
      const double v = signal.samples(c, i);
      if (format == WavFormat::Pcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, static_cast<std::int16_t>(q));
      } else {
        put_le<float>(out, static_cast<float>(v));
      }
    }
  }
  if (!out) throw DatasetError(path.string() + ": write failed");
}

std::filesystem::path channel_path(const std::filesystem::path& stem, int mic) {
  return std::filesystem::path(stem.string() + ".CH" + std::to_string(mic) + ".wav");
}

TimeSignal read_wav_channels(const std::filesystem::path& stem, int expected_channels) {
  std::vector<TimeSignal> mics;
  for (int mic = 1;; ++mic) {
    const auto path = channel_path(stem, mic);
    const bool required = mic == 1 || (expected_channels > 0 && mic <= expected_channels);
    if (!std::filesystem::exists(path)) {
      if (required) throw DatasetError(path.string() + ": missing channel file");
      break;
    }
    if (expected_channels > 0 && mic > expected_channels) break;
    TimeSignal sig = read_wav(path);
    if (sig.channels() != 1) throw DatasetError(path.string() + ": expected a mono file");
    if (!mics.empty() && (sig.length() != mics.front().length() ||
                          sig.sample_rate != mics.front().sample_rate))
      throw DatasetError(path.string() + ": length or rate differs from CH1");
    mics.push_back(std::move(sig));
  }
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(mics.size()), mics.front().length());
  for (std::size_t i = 0; i < mics.size(); ++i) samples.row(i) = mics[i].samples.row(0);
  return {std::move(samples), mics.front().sample_rate};
}

void write_wav_channels(const std::filesystem::path& stem, const TimeSignal& signal,
                        WavFormat format) {
  for (int n = 0; n < signal.channels(); ++n)
    write_wav(channel_path(stem, n + 1), signal.channel(n), format);
}

}  // namespace maskbf
