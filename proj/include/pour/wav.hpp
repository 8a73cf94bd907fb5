#pragma once

#include <string>

#include "pour/core.hpp"

namespace pour {

/// Mono 16-bit PCM RIFF/WAVE writer. Samples are clipped to [-1, 1].
void write_wav(const std::string& path, const AudioBuffer& audio);

/// Reads 16-bit PCM RIFF/WAVE; stereo is averaged down to mono.
AudioBuffer read_wav(const std::string& path);

/// Windowed-sinc resampler (Kaiser window, 32 taps per side). Returns the
/// input unchanged when the rate already matches.
AudioBuffer resample(const AudioBuffer& audio, int target_rate);

}  // namespace pour
