#include "chirp/spectral.hpp"

#include <stdexcept>

namespace chirp {
namespace {

// Two-pass population mean and standard deviation.
void write_stats(FeatureVector& out, Family family, const std::vector<double>& values) {
  const auto n = static_cast<Eigen::Index>(values.size());
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), n);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  out[mean_slot(family)] = mean;
  out[std_slot(family)] = std::sqrt(std::max(0.0, var));
}

}  // namespace

const std::array<std::string_view, kFamilyCount>& family_names() {
  static const std::array<std::string_view, kFamilyCount> names = {
      "mfcc",
      "zero_crossings",
      "rms",
      "low_energy_fraction",
      "spectral_flux",
      "spectral_rolloff",
      "compactness",
      "moments",
      "lpc",
      "spectral_centroid",
      "beat_sum",
      "strongest_beat",
      "strongest_beat_strength",
      "spectral_variability",
  };
  return names;
}

const std::array<std::string, kSlotCount>& slot_names() {
  static const std::array<std::string, kSlotCount> names = [] {
    std::array<std::string, kSlotCount> out;
    for (std::size_t f = 0; f < kFamilyCount; ++f) {
      out[2 * f] = std::string(family_names()[f]) + "_mean";
      out[2 * f + 1] = std::string(family_names()[f]) + "_std";
    }
    return out;
  }();
  return names;
}

std::optional<std::size_t> slot_index(std::string_view name) {
  const auto& names = slot_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

void ExtractionConfig::validate() const {
  if (!is_power_of_two(window)) throw NonPowerOfTwoWindow("window " + std::to_string(window));
  if (hop == 0 || hop > window) throw std::invalid_argument("hop must satisfy 0 < hop <= window");
  if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  if (static_cast<std::size_t>(lpc_order) >= window) throw std::invalid_argument("lpc order must be below window");
  if (mel_filters < 1 || mfcc_coefficients < 1 || mfcc_coefficients > mel_filters)
    throw std::invalid_argument("need 1 <= mfcc coefficients <= mel filters");
  if (macro_window == 0) throw std::invalid_argument("macro window must be positive");
}

FrameAnalyzer::FrameAnalyzer(const ExtractionConfig& config)
    : config_((config.validate(), config)),
      bank_(static_cast<Eigen::Index>(config.window / 2 + 1),
            static_cast<double>(config.sample_rate) / static_cast<double>(config.window), config.mel_filters,
            config.mfcc_coefficients) {}

FrameFeatures FrameAnalyzer::analyze(const Frame& frame, const Spectrum* previous, Spectrum& spectrum_out) const {
  FrameFeatures out;
  const auto td = time_domain_features(frame.samples);
  out.zero_crossings = td.zero_crossings;
  out.rms = td.rms;

  spectrum_out = magnitude_spectrum(frame.samples, config_.sample_rate, config_.window_kind);
  const auto shape = spectral_shape_features(spectrum_out, previous);
  out.flux = shape.flux;
  out.rolloff_hz = shape.rolloff_hz;
  out.compactness = shape.compactness;
  out.moments = shape.moments;
  out.centroid_hz = shape.centroid_hz;
  out.variability = shape.variability;

  out.mfcc = mfcc(spectrum_out, bank_);
  auto lp = lpc(frame.samples, config_.lpc_order);
  out.lpc = std::move(lp.coefficients);
  out.lpc_degenerate = lp.degenerate;
  return out;
}

std::vector<ClipLevelFeatures> clip_level_features(std::span<const double> rms_series, double hop_seconds,
                                                   std::size_t macro_window) {
  if (rms_series.empty()) throw NoFrames("no rms values");
  const std::size_t runs = std::max<std::size_t>(1, rms_series.size() / macro_window);
  std::vector<ClipLevelFeatures> out;
  out.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    const std::size_t begin = r * macro_window;
    const std::size_t end = (r + 1 == runs) ? rms_series.size() : begin + macro_window;
    const auto run = rms_series.subspan(begin, end - begin);

    ClipLevelFeatures c;
    c.low_energy_fraction = fraction_low_energy(run);
    // Too short for a beat histogram: no periodicity is observable.
    if (run.size() >= 4) {
      const auto beats = beat_features(run, hop_seconds);
      c.beat_sum = beats.beat_sum;
      c.strongest_beat_bpm = beats.strongest_bpm;
      c.strongest_beat_strength = beats.strongest_strength;
    }
    out.push_back(c);
  }
  return out;
}

FeatureVector aggregate_clip(std::span<const FrameFeatures> frames, std::span<const ClipLevelFeatures> clip_level) {
  if (frames.empty()) throw NoFrames("aggregate_clip needs at least one frame");
  if (clip_level.empty()) throw NoFrames("aggregate_clip needs at least one clip-level run");

  const std::size_t n = frames.size();
  auto collect = [&](auto&& get) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = get(frames[i]);
    return v;
  };
  auto collect_runs = [&](auto&& get) {
    std::vector<double> v(clip_level.size());
    for (std::size_t i = 0; i < clip_level.size(); ++i) v[i] = get(clip_level[i]);
    return v;
  };
  auto coefficient_mean = [](const Eigen::VectorXd& c) { return c.size() > 0 ? c.mean() : 0.0; };

  FeatureVector out;
  write_stats(out, Family::Mfcc, collect([&](const FrameFeatures& f) { return coefficient_mean(f.mfcc); }));
  write_stats(out, Family::ZeroCrossing,
              collect([](const FrameFeatures& f) { return static_cast<double>(f.zero_crossings); }));
  write_stats(out, Family::Rms, collect([](const FrameFeatures& f) { return f.rms; }));
  write_stats(out, Family::LowEnergy, collect_runs([](const ClipLevelFeatures& c) { return c.low_energy_fraction; }));
  write_stats(out, Family::SpectralFlux, collect([](const FrameFeatures& f) { return f.flux; }));
  write_stats(out, Family::SpectralRolloff, collect([](const FrameFeatures& f) { return f.rolloff_hz; }));
  write_stats(out, Family::Compactness, collect([](const FrameFeatures& f) { return f.compactness; }));
  write_stats(out, Family::Moments, collect([](const FrameFeatures& f) { return f.moments.average(); }));
  write_stats(out, Family::Lpc, collect([&](const FrameFeatures& f) { return coefficient_mean(f.lpc); }));
  write_stats(out, Family::SpectralCentroid, collect([](const FrameFeatures& f) { return f.centroid_hz; }));
  write_stats(out, Family::BeatSum, collect_runs([](const ClipLevelFeatures& c) { return c.beat_sum; }));
  write_stats(out, Family::StrongestBeat, collect_runs([](const ClipLevelFeatures& c) { return c.strongest_beat_bpm; }));
  write_stats(out, Family::StrongestBeatStrength,
              collect_runs([](const ClipLevelFeatures& c) { return c.strongest_beat_strength; }));
  write_stats(out, Family::SpectralVariability, collect([](const FrameFeatures& f) { return f.variability; }));
  return out;
}

FeatureVector extract_features(const AudioClip& clip, const ExtractionConfig& config) {
  const FrameAnalyzer analyzer(config);
  const AudioClip resampled = resample(clip, config.sample_rate);
  const auto frames = frame_clip(resampled, config.window, config.hop);

  std::vector<FrameFeatures> features;
  features.reserve(frames.size());
  std::vector<double> rms;
  rms.reserve(frames.size());

  Spectrum previous;
  Spectrum current;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    features.push_back(analyzer.analyze(frames[i], i == 0 ? nullptr : &previous, current));
    rms.push_back(features.back().rms);
    std::swap(previous, current);
  }

  const double hop_seconds = static_cast<double>(config.hop) / static_cast<double>(config.sample_rate);
  const auto runs = clip_level_features(rms, hop_seconds, config.macro_window);
  return aggregate_clip(features, runs);
}

}  // namespace chirp
