#include "core/wavetable.hpp"

#include "core/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace nwt {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::EmptyScore: return "EmptyScore";
  }
  return "Unknown";
}

namespace {

void require_finite(std::span<const double> samples, const char* what) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      fail(ErrorCode::InvalidArgument,
           std::string(what) + ": sample " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace

std::string_view shape_name(Shape shape) noexcept {
  switch (shape) {
    case Shape::Sine: return "sine";
    case Shape::Triangle: return "triangle";
    case Shape::Saw: return "saw";
    case Shape::Square: return "square";
  }
  return "sine";
}

Shape parse_shape(std::string_view name) {
  for (Shape s : kAllShapes) {
    if (shape_name(s) == name) return s;
  }
  fail(ErrorCode::InvalidArgument,
       "unknown shape '" + std::string(name) + "' (expected sine, triangle, saw or square)");
}

Waveform::Waveform(std::vector<double> samples) : samples_(std::move(samples)) {
  require_finite(samples_, "waveform");
}

PaddedWavetable::PaddedWavetable(std::vector<double> samples)
    : samples_(std::move(samples)) {
  if (samples_.size() < 3) {
    fail(ErrorCode::InvalidArgument, "padded wavetable needs at least 3 samples");
  }
  require_finite(samples_, "padded wavetable");
  if (samples_.front() != 0.0 || samples_.back() != 0.0) {
    fail(ErrorCode::InvalidArgument, "padded wavetable endpoints must be exactly 0");
  }
}

Waveform gen_waveform(Shape shape, std::size_t length, double phase_offset) {
  if (length < 4) {
    fail(ErrorCode::InvalidArgument, "waveform length must be at least 4");
  }
  if (!(phase_offset >= 0.0 && phase_offset < 1.0)) {
    fail(ErrorCode::InvalidArgument, "phase offset must be in [0, 1)");
  }
  std::vector<double> out(length);
  const double n = static_cast<double>(length);
  for (std::size_t k = 0; k < length; ++k) {
    double x = static_cast<double>(k) / n + phase_offset;
    x -= std::floor(x);
    switch (shape) {
      case Shape::Sine:
        out[k] = std::sin(2.0 * std::numbers::pi * x);
        break;
      case Shape::Triangle:
        // Starts at 0 rising, like the sine, so phase 0.5 is a polarity flip.
        if (x < 0.25) {
          out[k] = 4.0 * x;
        } else if (x < 0.75) {
          out[k] = 2.0 - 4.0 * x;
        } else {
          out[k] = 4.0 * x - 4.0;
        }
        break;
      case Shape::Saw:
        out[k] = 2.0 * x - 1.0;
        break;
      case Shape::Square:
        out[k] = x < 0.5 ? 1.0 : -1.0;
        break;
    }
  }
  return Waveform(std::move(out));
}

Waveform normalize(const Waveform& w) {
  const auto s = w.samples();
  if (s.empty()) fail(ErrorCode::ConstantInput, "cannot normalize an empty waveform");
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());

  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v - mean));
  if (peak <= kConstantEpsilon) {
    fail(ErrorCode::ConstantInput, "waveform is constant after mean removal");
  }

  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - mean) / peak;
  return Waveform(std::move(out));
}

PaddedWavetable pad(const Waveform& w) {
  std::vector<double> out(w.size() + 2, 0.0);
  std::copy(w.samples().begin(), w.samples().end(), out.begin() + 1);
  return PaddedWavetable(std::move(out));
}

PaddedWavetable smooth(const PaddedWavetable& t, int ramp_len) {
  const std::size_t len = t.size();
  if (ramp_len < 1 || static_cast<std::size_t>(ramp_len) > len / 4) {
    fail(ErrorCode::InvalidArgument,
         "ramp length " + std::to_string(ramp_len) + " out of range [1, " +
             std::to_string(len / 4) + "]");
  }
  const auto s = static_cast<std::size_t>(ramp_len);
  std::vector<double> out(t.samples().begin(), t.samples().end());
  const double head = t[s];
  const double tail = t[len - 1 - s];
  for (std::size_t i = 0; i <= s; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(s);
    out[i] = head * r;
    out[len - 1 - i] = tail * r;
  }
  return PaddedWavetable(std::move(out));
}

PaddedWavetable condition(const Waveform& w, int ramp_len) {
  return smooth(pad(normalize(w)), ramp_len);
}

Waveform preset_waveform(Shape shape, double phase_offset) {
  return normalize(gen_waveform(shape, kWaveformLength, phase_offset));
}

std::vector<double> dft_magnitudes(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorCode::InvalidArgument, "DFT needs at least 2 samples");
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    cos_table[m] = std::cos(a);
    sin_table[m] = std::sin(a);
  }
  std::vector<double> mags(n / 2 + 1);
  for (std::size_t k = 0; k < mags.size(); ++k) {
    double re = 0.0;
    double im = 0.0;
    std::size_t idx = 0;
    for (std::size_t j = 0; j < n; ++j) {
      re += x[j] * cos_table[idx];
      im -= x[j] * sin_table[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    mags[k] = std::hypot(re, im);
  }
  return mags;
}

namespace {
// Plan creation in FFTW is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<double> fft_magnitudes(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorCode::InvalidArgument, "DFT needs at least 2 samples");
  const std::size_t bins = n / 2 + 1;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  std::vector<double> mags(bins);
  for (std::size_t k = 0; k < bins; ++k) mags[k] = std::hypot(out[k][0], out[k][1]);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  fftw_free(in);
  return mags;
}

double estimate_fundamental(std::span<const double> audio, double sample_rate) {
  if (!(sample_rate > 0.0)) fail(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (static_cast<double>(audio.size()) < sample_rate / 20.0) {
    fail(ErrorCode::InvalidArgument, "need at least 50 ms of audio for pitch estimation");
  }
  const auto mags = fft_magnitudes(audio);
  std::size_t peak = 1;
  for (std::size_t k = 2; k < mags.size(); ++k) {
    if (mags[k] > mags[peak]) peak = k;
  }
  if (mags[peak] < 1e-12) fail(ErrorCode::NoPeak, "no spectral peak above DC");

  double offset = 0.0;
  if (peak + 1 < mags.size()) {
    const double a = mags[peak - 1];
    const double b = mags[peak];
    const double c = mags[peak + 1];
    const double denom = a - 2.0 * b + c;
    if (denom != 0.0) offset = 0.5 * (a - c) / denom;
  }
  return (static_cast<double>(peak) + offset) * sample_rate /
         static_cast<double>(audio.size());
}

double spectral_flatness(std::span<const double> x) {
  const auto mags = dft_magnitudes(x);
  double log_sum = 0.0;
  double sum = 0.0;
  const std::size_t count = mags.size() - 1;
  for (std::size_t k = 1; k < mags.size(); ++k) {
    const double m = std::max(mags[k], 1e-12);
    log_sum += std::log(m);
    sum += m;
  }
  const double arith = sum / static_cast<double>(count);
  return std::exp(log_sum / static_cast<double>(count)) / arith;
}

}  // namespace nwt
