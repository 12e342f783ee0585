#include "chirp/audio.hpp"

#include "chirp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

namespace chirp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
// Some streaming writers leave the data size unset.
constexpr std::uint32_t kUnknownSize = 0xFFFFFFFFu;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

struct FormatChunk {
  std::uint16_t format_tag;
  std::uint16_t channels;
  std::uint32_t sample_rate;
  std::uint16_t bits_per_sample;
};

}  // namespace

AudioClip parse_wav(std::span<const std::uint8_t> bytes, std::string source_path) {
  if (bytes.size() < 12) throw MalformedRiff("file shorter than the 12-byte RIFF header");
  if (!tag_is(bytes, 0, "RIFF")) throw MalformedRiff("missing RIFF tag");
  if (!tag_is(bytes, 8, "WAVE")) throw MalformedRiff("missing WAVE form type");

  std::optional<FormatChunk> fmt;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size() && !have_data) {
    const std::uint32_t declared = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t remaining = bytes.size() - body;

    if (tag_is(bytes, pos, "fmt ")) {
      if (declared < 16 || declared > remaining) throw MalformedRiff("short fmt chunk");
      fmt = FormatChunk{read_u16(bytes, body), read_u16(bytes, body + 2), read_u32(bytes, body + 4),
                        read_u16(bytes, body + 14)};
    } else if (tag_is(bytes, pos, "data")) {
      std::size_t size = declared;
      if (declared == kUnknownSize) {
        size = remaining;
      } else if (declared > remaining) {
        throw MalformedRiff("data chunk declares " + std::to_string(declared) + " bytes but only " +
                            std::to_string(remaining) + " remain");
      }
      data = bytes.subspan(body, size);
      have_data = true;
      break;
    } else if (declared > remaining) {
      throw MalformedRiff("chunk extends past end of file");
    }
    // Chunks are word aligned.
    pos = body + declared + (declared & 1u);
  }

  if (!fmt) throw MalformedRiff("missing fmt chunk");
  if (!have_data) throw MalformedRiff("missing data chunk");

  if (fmt->format_tag != kFormatPcm)
    throw UnsupportedFormat("format tag " + std::to_string(fmt->format_tag) + " is not integer PCM");
  if (fmt->bits_per_sample != 8 && fmt->bits_per_sample != 16)
    throw UnsupportedFormat(std::to_string(fmt->bits_per_sample) + "-bit samples");
  if (fmt->channels < 1 || fmt->channels > 2)
    throw UnsupportedFormat(std::to_string(fmt->channels) + " channels");
  if (fmt->sample_rate == 0) throw MalformedRiff("sample rate of 0");

  const std::size_t bytes_per_sample = fmt->bits_per_sample / 8;
  const std::size_t block = bytes_per_sample * fmt->channels;
  const std::size_t frames = data.size() / block;
  if (frames == 0) throw MalformedRiff("data chunk holds no complete sample frames");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt->sample_rate);
  clip.source_path = std::move(source_path);
  clip.samples.resize(static_cast<Eigen::Index>(frames));

  auto decode = [&](std::size_t at) -> double {
    if (bytes_per_sample == 1) return (static_cast<double>(data[at]) - 128.0) / 128.0;
    const auto raw = static_cast<std::int16_t>(read_u16(data, at));
    return static_cast<double>(raw) / 32768.0;
  };

  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t at = f * block;
    double v = decode(at);
    if (fmt->channels == 2) v = 0.5 * (v + decode(at + bytes_per_sample));
    clip.samples[static_cast<Eigen::Index>(f)] = v;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedRiff("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto count = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = count * 2;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
    const double scaled = std::round(std::clamp(clip.samples[i], -1.0, 1.0) * 32768.0);
    const auto code = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(code));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<Frame> frame_clip(const AudioClip& clip, std::size_t window_size, std::size_t hop_size) {
  if (window_size == 0 || hop_size == 0 || hop_size > window_size)
    throw std::invalid_argument("frame_clip requires 0 < hop <= window");
  const auto len = static_cast<std::size_t>(clip.samples.size());
  if (len == 0) throw EmptyClip("clip '" + clip.source_path + "' has no samples");

  const auto w = static_cast<Eigen::Index>(window_size);
  std::vector<Frame> frames;
  if (len < window_size) {
    Frame f;
    f.samples = Eigen::VectorXd::Zero(w);
    f.samples.head(clip.samples.size()) = clip.samples;
    frames.push_back(std::move(f));
    return frames;
  }

  const std::size_t count = (len - window_size) / hop_size + 1;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = i * hop_size;
    frames.push_back(Frame{clip.samples.segment(static_cast<Eigen::Index>(start), w), i, start});
  }
  return frames;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("resample target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const Eigen::Index len = clip.samples.size();
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const auto out_len = static_cast<Eigen::Index>(std::llround(static_cast<double>(len) / ratio));

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.samples.resize(out_len);
  for (Eigen::Index i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto left = static_cast<Eigen::Index>(std::floor(pos));
    if (left >= len - 1) {
      out.samples[i] = clip.samples[len - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(left);
    out.samples[i] = (1.0 - frac) * clip.samples[left] + frac * clip.samples[left + 1];
  }
  return out;
}

}  // namespace chirp
