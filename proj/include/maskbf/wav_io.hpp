#pragma once

#include <filesystem>
#include <string>

#include "maskbf/tf_transform.hpp"

namespace maskbf {

enum class WavFormat { Pcm16, Float32 };

/// Reads PCM 16-bit or IEEE float-32 WAV (plain or extensible header).
/// PCM samples are scaled to [-1, 1). Throws DatasetError on I/O or format
/// problems, naming the path.
TimeSignal read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const TimeSignal& signal,
               WavFormat format = WavFormat::Float32);

/// Path of microphone `mic` (1-based) for a stem: "<stem>.CH<mic>.wav".
std::filesystem::path channel_path(const std::filesystem::path& stem, int mic);

/// Reads "<stem>.CH1.wav", "<stem>.CH2.wav", ... until the next index is
/// missing and stacks them into one multichannel signal. `expected_channels`
/// > 0 makes a missing channel an error. All files must be mono with equal
/// length and rate.
TimeSignal read_wav_channels(const std::filesystem::path& stem, int expected_channels = 0);

/// Writes one mono file per channel using the same suffix convention.
void write_wav_channels(const std::filesystem::path& stem, const TimeSignal& signal,
                        WavFormat format = WavFormat::Float32);

}  // namespace maskbf
