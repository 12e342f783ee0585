#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chirp {

/// Mono PCM audio normalized to [-1, 1].
struct AudioClip {
  Eigen::VectorXd samples;
  int sample_rate = 0;
  std::string source_path;

  Eigen::Index size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// One analysis window cut from a clip. `start_sample == index * hop`.
struct Frame {
  Eigen::VectorXd samples;
  std::size_t index = 0;
  std::size_t start_sample = 0;
};

/// Parses a RIFF/WAVE container holding 8- or 16-bit integer PCM with one or
/// two channels. Stereo is downmixed by averaging the channels. Chunks other
/// than `fmt ` and `data` are skipped.
///
/// Throws MalformedRiff or UnsupportedFormat.
AudioClip parse_wav(std::span<const std::uint8_t> bytes, std::string source_path = {});

/// Reads and parses a file; I/O failures surface as MalformedRiff.
AudioClip read_wav(const std::filesystem::path& path);

/// Canonical 44-byte-header PCM16 mono encoding. Samples are clamped to
/// [-1, 1] and rounded to the nearest code.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Cuts `clip` into windows of `window_size` samples every `hop_size`
/// samples. A clip shorter than one window yields a single zero-padded frame.
std::vector<Frame> frame_clip(const AudioClip& clip, std::size_t window_size,
                              std::size_t hop_size);

/// Linear-interpolation resampling with edge hold at the end of the clip.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace chirp
