#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nwt {

inline constexpr std::size_t kWaveformLength = 512;
inline constexpr std::size_t kPaddedLength = kWaveformLength + 2;
inline constexpr int kDefaultRampLength = 8;
inline constexpr double kConstantEpsilon = 1e-12;

enum class Shape { Sine, Triangle, Saw, Square };

inline constexpr Shape kAllShapes[] = {Shape::Sine, Shape::Triangle, Shape::Saw,
                                       Shape::Square};

std::string_view shape_name(Shape shape) noexcept;
Shape parse_shape(std::string_view name);

/// Single-cycle table of finite samples. Canonical length is 512; the
/// conditioning pipeline accepts shorter instances so small cases are easy to
/// check by hand.
class Waveform {
public:
  Waveform() = default;
  explicit Waveform(std::vector<double> samples);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }

  friend bool operator==(const Waveform&, const Waveform&) = default;

private:
  std::vector<double> samples_;
};

/// Loopable table: the source waveform with one zero sample on each side.
class PaddedWavetable {
public:
  PaddedWavetable() = default;
  /// Validates that both endpoints are exactly zero and all samples finite.
  explicit PaddedWavetable(std::vector<double> samples);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }

  friend bool operator==(const PaddedWavetable&, const PaddedWavetable&) = default;

private:
  std::vector<double> samples_;
};

/// One period of a naive (non-bandlimited) shape, peak amplitude 1.
/// `phase_offset` is in cycles, [0, 1).
Waveform gen_waveform(Shape shape, std::size_t length, double phase_offset);

/// Remove the mean and scale so the largest magnitude is exactly 1.
/// Throws ConstantInput when the waveform carries no signal.
Waveform normalize(const Waveform& w);

PaddedWavetable pad(const Waveform& w);

/// Replace `ramp_len` samples at each end with a straight line from the zero
/// endpoint to the first untouched sample.
PaddedWavetable smooth(const PaddedWavetable& t, int ramp_len);

/// normalize -> pad -> smooth.
PaddedWavetable condition(const Waveform& w, int ramp_len);

/// Canonical normalized shape used for presets, corpus members and bank endpoints.
Waveform preset_waveform(Shape shape, double phase_offset = 0.0);

/// Direct O(n^2) DFT magnitudes for bins 0..n/2.
std::vector<double> dft_magnitudes(std::span<const double> x);

/// Same bins as dft_magnitudes, computed with an FFT. Used where the input is
/// long (seconds of audio).
std::vector<double> fft_magnitudes(std::span<const double> x);

/// Peak non-DC bin refined by parabolic interpolation. Requires at least
/// 50 ms of audio. Throws NoPeak on silence.
double estimate_fundamental(std::span<const double> audio, double sample_rate);

/// Geometric over arithmetic mean of the non-DC magnitude spectrum.
double spectral_flatness(std::span<const double> x);

}  // namespace nwt
