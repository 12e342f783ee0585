#pragma once

// Short-time spectral descriptors of a vocalization. The per-window kernels
// are templated on the scalar type and accept any dense Eigen expression;
// the clip-level pipeline (extract_features) runs in double.

#include "chirp/audio.hpp"
#include "chirp/error.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chirp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class WindowKind { Hann, Rectangular };

/// Floor applied before taking logarithms of magnitudes or energies.
inline constexpr double kLogFloor = 1e-10;

/// Fraction of spectral energy below the rolloff frequency.
inline constexpr double kRolloffFraction = 0.85;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

template <typename Scalar>
struct BasicSpectrum {
  VectorX<Scalar> magnitudes;  // bins 0..W/2
  Scalar bin_hz{};

  Eigen::Index size() const { return magnitudes.size(); }
  Scalar frequency(Eigen::Index bin) const { return static_cast<Scalar>(bin) * bin_hz; }
};
using Spectrum = BasicSpectrum<double>;

/// Periodic Hann window of length n.
template <typename Scalar>
VectorX<Scalar> hann_window(Eigen::Index n) {
  VectorX<Scalar> w(n);
  const Scalar step = Scalar(2) * std::numbers::pi_v<Scalar> / static_cast<Scalar>(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = Scalar(0.5) - Scalar(0.5) * std::cos(step * static_cast<Scalar>(i));
  return w;
}

/// Magnitudes of the real DFT of the windowed frame, bins 0..W/2.
template <typename Derived>
BasicSpectrum<typename Derived::Scalar> magnitude_spectrum(const Eigen::MatrixBase<Derived>& frame,
                                                           double sample_rate,
                                                           WindowKind window = WindowKind::Hann) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = frame.size();
  if (!is_power_of_two(static_cast<std::size_t>(n)))
    throw NonPowerOfTwoWindow("frame length " + std::to_string(n) + " is not a power of two");

  std::vector<Scalar> input(static_cast<std::size_t>(n));
  if (window == WindowKind::Hann) {
    const VectorX<Scalar> w = hann_window<Scalar>(n);
    for (Eigen::Index i = 0; i < n; ++i) input[static_cast<std::size_t>(i)] = frame(i) * w[i];
  } else {
    for (Eigen::Index i = 0; i < n; ++i) input[static_cast<std::size_t>(i)] = frame(i);
  }

  std::vector<std::complex<Scalar>> bins;
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  fft.fwd(bins, input);

  BasicSpectrum<Scalar> out;
  out.bin_hz = static_cast<Scalar>(sample_rate / static_cast<double>(n));
  out.magnitudes.resize(n / 2 + 1);
  for (Eigen::Index k = 0; k <= n / 2; ++k) out.magnitudes[k] = std::abs(bins[static_cast<std::size_t>(k)]);
  return out;
}

template <typename Scalar>
struct TimeDomainFeatures {
  std::size_t zero_crossings = 0;
  Scalar rms{};
};

/// Sign changes between consecutive samples (a zero sample keeps the sign
/// of its predecessor) and root-mean-square amplitude.
template <typename Derived>
TimeDomainFeatures<typename Derived::Scalar> time_domain_features(const Eigen::MatrixBase<Derived>& frame) {
  using Scalar = typename Derived::Scalar;
  TimeDomainFeatures<Scalar> out;
  int previous = 0;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    const Scalar x = frame(i);
    const int sign = x > Scalar(0) ? 1 : (x < Scalar(0) ? -1 : previous);
    if (previous != 0 && sign != previous) ++out.zero_crossings;
    if (sign != 0) previous = sign;
  }
  out.rms = frame.size() > 0 ? std::sqrt(frame.squaredNorm() / static_cast<Scalar>(frame.size())) : Scalar(0);
  return out;
}

/// First five moments of the magnitude distribution over bin indices.
template <typename Scalar>
struct SpectralMoments {
  Scalar area{};
  Scalar mean{};      // bin units
  Scalar variance{};  // power spectrum density, second central moment
  Scalar skew{};
  Scalar kurtosis{};

  Scalar average() const { return (area + mean + variance + skew + kurtosis) / Scalar(5); }
};

template <typename Scalar>
struct SpectralShape {
  Scalar flux{};
  Scalar rolloff_hz{};
  Scalar compactness{};
  SpectralMoments<Scalar> moments;
  Scalar centroid_hz{};
  Scalar variability{};
};

template <typename Derived>
SpectralMoments<typename Derived::Scalar> spectral_moments(const Eigen::MatrixBase<Derived>& magnitudes) {
  using Scalar = typename Derived::Scalar;
  SpectralMoments<Scalar> m;
  m.area = magnitudes.sum();
  if (!(m.area > Scalar(0))) return m;

  const auto n = magnitudes.size();
  const VectorX<Scalar> idx = VectorX<Scalar>::LinSpaced(n, Scalar(0), static_cast<Scalar>(n - 1));
  const VectorX<Scalar> p = magnitudes / m.area;
  m.mean = p.dot(idx);
  const VectorX<Scalar> d = idx.array() - m.mean;
  const VectorX<Scalar> d2 = d.array().square();
  m.variance = p.dot(d2);
  // A point mass has no spread; its skew and kurtosis are defined as 0.
  if (m.variance <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + m.mean * m.mean)) {
    m.variance = Scalar(0);
    return m;
  }
  m.skew = p.dot(VectorX<Scalar>(d2.cwiseProduct(d))) / std::pow(m.variance, Scalar(1.5));
  m.kurtosis = p.dot(VectorX<Scalar>(d2.cwiseProduct(d2))) / (m.variance * m.variance);
  return m;
}

/// Flux, rolloff, compactness, moments, centroid and variability of one
/// window. Flux is 0 when there is no previous spectrum.
template <typename Scalar>
SpectralShape<Scalar> spectral_shape_features(const BasicSpectrum<Scalar>& current,
                                              const BasicSpectrum<Scalar>* previous) {
  const auto& m = current.magnitudes;
  const Eigen::Index n = m.size();
  SpectralShape<Scalar> out;

  if (previous) {
    if (previous->size() != n || previous->bin_hz != current.bin_hz)
      throw MismatchedSpectra("spectra differ in length or bin spacing");
    out.flux = (m - previous->magnitudes).squaredNorm();
  }

  const Scalar total = m.sum();
  if (total > Scalar(0)) {
    const VectorX<Scalar> freqs = VectorX<Scalar>::LinSpaced(n, Scalar(0), static_cast<Scalar>(n - 1)) * current.bin_hz;
    out.centroid_hz = freqs.dot(m) / total;
  }

  const Scalar energy = m.squaredNorm();
  if (energy > Scalar(0)) {
    const Scalar threshold = static_cast<Scalar>(kRolloffFraction) * energy;
    Scalar cumulative{};
    for (Eigen::Index i = 0; i < n; ++i) {
      cumulative += m[i] * m[i];
      if (cumulative >= threshold) {
        out.rolloff_hz = current.frequency(i);
        break;
      }
    }
  }

  if (n >= 3) {
    const VectorX<Scalar> logs = m.cwiseMax(static_cast<Scalar>(kLogFloor)).array().log();
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const Scalar local = (logs[i - 1] + logs[i] + logs[i + 1]) / Scalar(3);
      out.compactness += std::abs(logs[i] - local);
    }
  }

  out.moments = spectral_moments(m);
  out.variability = n > 0 ? std::sqrt((m.array() - m.mean()).square().mean()) : Scalar(0);
  return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filters spanning 0 Hz to Nyquist plus the orthonormal
/// DCT-II rows used to turn log filter energies into cepstral coefficients.
template <typename Scalar>
class BasicMelBank {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicMelBank(Eigen::Index num_bins, Scalar bin_hz, Eigen::Index num_filters = 26,
               Eigen::Index num_coefficients = 13)
      : bin_hz_(bin_hz), filters_(Matrix::Zero(num_filters, num_bins)), dct_(num_coefficients, num_filters) {
    const double nyquist = static_cast<double>(bin_hz) * static_cast<double>(num_bins - 1);
    const double top = hz_to_mel(nyquist);
    std::vector<double> edges(static_cast<std::size_t>(num_filters + 2));
    for (std::size_t p = 0; p < edges.size(); ++p)
      edges[p] = mel_to_hz(top * static_cast<double>(p) / static_cast<double>(num_filters + 1));

    for (Eigen::Index f = 0; f < num_filters; ++f) {
      const double lo = edges[static_cast<std::size_t>(f)];
      const double mid = edges[static_cast<std::size_t>(f + 1)];
      const double hi = edges[static_cast<std::size_t>(f + 2)];
      for (Eigen::Index b = 0; b < num_bins; ++b) {
        const double hz = static_cast<double>(bin_hz) * static_cast<double>(b);
        double w = 0.0;
        if (hz > lo && hz <= mid) w = (hz - lo) / (mid - lo);
        else if (hz > mid && hz < hi) w = (hi - hz) / (hi - mid);
        filters_(f, b) = static_cast<Scalar>(w);
      }
    }

    const auto nf = static_cast<Scalar>(num_filters);
    for (Eigen::Index k = 0; k < num_coefficients; ++k) {
      const Scalar scale = std::sqrt((k == 0 ? Scalar(1) : Scalar(2)) / nf);
      for (Eigen::Index j = 0; j < num_filters; ++j)
        dct_(k, j) = scale * std::cos(std::numbers::pi_v<Scalar> * static_cast<Scalar>(k) *
                                      (static_cast<Scalar>(j) + Scalar(0.5)) / nf);
    }
  }

  Eigen::Index num_bins() const { return filters_.cols(); }
  Eigen::Index num_filters() const { return filters_.rows(); }
  Eigen::Index num_coefficients() const { return dct_.rows(); }
  Scalar bin_hz() const { return bin_hz_; }
  const Matrix& filters() const { return filters_; }
  const Matrix& dct() const { return dct_; }

 private:
  Scalar bin_hz_;
  Matrix filters_;
  Matrix dct_;
};
using MelBank = BasicMelBank<double>;

/// DCT-II of the floored log mel energies of the power spectrum.
template <typename Scalar>
VectorX<Scalar> mfcc(const BasicSpectrum<Scalar>& spectrum, const BasicMelBank<Scalar>& bank) {
  if (spectrum.size() != bank.num_bins() || spectrum.bin_hz != bank.bin_hz())
    throw BankMismatch("mel bank built for " + std::to_string(bank.num_bins()) + " bins, spectrum has " +
                       std::to_string(spectrum.size()));
  const VectorX<Scalar> energies = bank.filters() * spectrum.magnitudes.cwiseAbs2();
  const VectorX<Scalar> logs = energies.cwiseMax(static_cast<Scalar>(kLogFloor)).array().log();
  return bank.dct() * logs;
}

template <typename Scalar>
struct LpcResult {
  VectorX<Scalar> coefficients;  // a_1..a_p with x[n] ~ sum a_i x[n-i]
  bool degenerate = false;
};

/// Linear prediction coefficients by Levinson-Durbin recursion on the biased
/// autocorrelation. A silent frame returns zeros with `degenerate` set.
template <typename Derived>
LpcResult<typename Derived::Scalar> lpc(const Eigen::MatrixBase<Derived>& frame, Eigen::Index order = 10) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = frame.size();
  if (order < 1 || n <= order) throw std::invalid_argument("lpc requires 1 <= order < frame length");

  VectorX<Scalar> r(order + 1);
  for (Eigen::Index lag = 0; lag <= order; ++lag)
    r[lag] = frame.head(n - lag).dot(frame.tail(n - lag)) / static_cast<Scalar>(n);

  LpcResult<Scalar> out;
  out.coefficients = VectorX<Scalar>::Zero(order);
  if (!(r[0] > Scalar(0))) {
    out.degenerate = true;
    return out;
  }

  VectorX<Scalar>& a = out.coefficients;
  VectorX<Scalar> prev(order);
  Scalar error = r[0];
  for (Eigen::Index i = 1; i <= order; ++i) {
    Scalar acc = r[i];
    for (Eigen::Index j = 1; j < i; ++j) acc -= a[j - 1] * r[i - j];
    const Scalar k = acc / error;
    prev = a;
    a[i - 1] = k;
    for (Eigen::Index j = 1; j < i; ++j) a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
    error *= Scalar(1) - k * k;
    // Perfectly predictable: higher orders add nothing.
    if (!(error > Scalar(0))) break;
  }
  return out;
}

/// Share of windows whose rms lies strictly below the series mean.
template <typename Scalar>
Scalar fraction_low_energy(std::span<const Scalar> rms_series) {
  if (rms_series.empty()) throw SeriesTooShort("fraction_low_energy needs at least one window");
  Scalar mean{};
  for (Scalar v : rms_series) mean += v;
  mean /= static_cast<Scalar>(rms_series.size());
  const auto below = std::count_if(rms_series.begin(), rms_series.end(), [&](Scalar v) { return v < mean; });
  return static_cast<Scalar>(below) / static_cast<Scalar>(rms_series.size());
}

template <typename Scalar>
struct BeatFeatures {
  Scalar beat_sum{};
  Scalar strongest_bpm{};
  Scalar strongest_strength{};
};

inline constexpr double kMinBpm = 40.0;
inline constexpr double kMaxBpm = 200.0;

/// Beat histogram over 40-200 BPM from the autocorrelation of the
/// mean-removed rms envelope, normalized by its lag-0 value. Negative
/// correlations are clamped to zero.
template <typename Scalar>
BeatFeatures<Scalar> beat_features(std::span<const Scalar> rms_series, double hop_seconds) {
  if (rms_series.size() < 4) throw SeriesTooShort("beat_features needs at least 4 windows");
  const auto n = static_cast<Eigen::Index>(rms_series.size());
  const Eigen::Map<const VectorX<Scalar>> raw(rms_series.data(), n);
  const VectorX<Scalar> env = raw.array() - raw.mean();

  BeatFeatures<Scalar> out;
  const Scalar zero_lag = env.squaredNorm();
  // Rounding residue left by removing the mean of a flat envelope.
  const Scalar residue = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * raw.cwiseAbs().maxCoeff();
  if (!(zero_lag > static_cast<Scalar>(n) * residue * residue)) return out;

  const auto min_lag = static_cast<Eigen::Index>(std::ceil(60.0 / (kMaxBpm * hop_seconds) - 1e-9));
  const auto max_lag = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(60.0 / (kMinBpm * hop_seconds) + 1e-9)),
                                              n - 1);
  Scalar best{};
  Eigen::Index best_lag = 0;
  for (Eigen::Index lag = std::max<Eigen::Index>(min_lag, 1); lag <= max_lag; ++lag) {
    const Scalar h = std::max(Scalar(0), env.head(n - lag).dot(env.tail(n - lag)) / zero_lag);
    out.beat_sum += h;
    if (h > best) {
      best = h;
      best_lag = lag;
    }
  }
  if (out.beat_sum > Scalar(0)) {
    out.strongest_bpm = static_cast<Scalar>(60.0 / (static_cast<double>(best_lag) * hop_seconds));
    out.strongest_strength = best / out.beat_sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clip-level pipeline

/// The fourteen descriptor families in canonical order. Each contributes a
/// mean slot followed by a standard-deviation slot.
enum class Family : std::size_t {
  Mfcc,
  ZeroCrossing,
  Rms,
  LowEnergy,
  SpectralFlux,
  SpectralRolloff,
  Compactness,
  Moments,
  Lpc,
  SpectralCentroid,
  BeatSum,
  StrongestBeat,
  StrongestBeatStrength,
  SpectralVariability,
};

inline constexpr std::size_t kFamilyCount = 14;
inline constexpr std::size_t kSlotCount = 2 * kFamilyCount;

constexpr std::size_t mean_slot(Family f) { return 2 * static_cast<std::size_t>(f); }
constexpr std::size_t std_slot(Family f) { return 2 * static_cast<std::size_t>(f) + 1; }

const std::array<std::string_view, kFamilyCount>& family_names();
const std::array<std::string, kSlotCount>& slot_names();
/// Index of a slot name, or nullopt.
std::optional<std::size_t> slot_index(std::string_view name);

struct FrameFeatures {
  std::size_t zero_crossings = 0;
  double rms = 0.0;
  double flux = 0.0;
  double rolloff_hz = 0.0;
  double compactness = 0.0;
  SpectralMoments<double> moments;
  double centroid_hz = 0.0;
  double variability = 0.0;
  Eigen::VectorXd mfcc;
  Eigen::VectorXd lpc;
  bool lpc_degenerate = false;
};

struct ClipLevelFeatures {
  double low_energy_fraction = 0.0;
  double beat_sum = 0.0;
  double strongest_beat_bpm = 0.0;
  double strongest_beat_strength = 0.0;
};

struct FeatureVector {
  Eigen::Matrix<double, kSlotCount, 1> values = Eigen::Matrix<double, kSlotCount, 1>::Zero();

  double operator[](std::size_t slot) const { return values[static_cast<Eigen::Index>(slot)]; }
  double& operator[](std::size_t slot) { return values[static_cast<Eigen::Index>(slot)]; }
  static const std::array<std::string, kSlotCount>& names() { return slot_names(); }
};

struct ExtractionConfig {
  std::size_t window = 512;
  std::size_t hop = 256;
  int sample_rate = 22050;
  Eigen::Index mel_filters = 26;
  Eigen::Index mfcc_coefficients = 13;
  Eigen::Index lpc_order = 10;
  std::size_t macro_window = 100;  // frames per clip-level sub-window
  WindowKind window_kind = WindowKind::Hann;

  void validate() const;
};

/// Window, FFT and mel bank shared by every frame of a configuration.
class FrameAnalyzer {
 public:
  explicit FrameAnalyzer(const ExtractionConfig& config);

  const ExtractionConfig& config() const { return config_; }
  const MelBank& mel_bank() const { return bank_; }

  /// Features of one frame given its predecessor's spectrum (absent for the
  /// first frame). The frame's spectrum is written to `spectrum_out`.
  FrameFeatures analyze(const Frame& frame, const Spectrum* previous, Spectrum& spectrum_out) const;

 private:
  ExtractionConfig config_;
  MelBank bank_;
};

/// Clip-level descriptors for consecutive runs of `macro_window` frames; a
/// trailing partial run is merged into the run before it.
std::vector<ClipLevelFeatures> clip_level_features(std::span<const double> rms_series, double hop_seconds,
                                                   std::size_t macro_window);

/// Mean and population standard deviation of every family across frames
/// (vector families are first collapsed to the mean of their coefficients)
/// and across clip-level runs.
FeatureVector aggregate_clip(std::span<const FrameFeatures> frames, std::span<const ClipLevelFeatures> clip_level);

/// Resample, frame, analyze, aggregate.
FeatureVector extract_features(const AudioClip& clip, const ExtractionConfig& config = {});

}  // namespace chirp
