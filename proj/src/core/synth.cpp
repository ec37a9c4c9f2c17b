#include "core/synth.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nwt {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) fail(ErrorCode::InvalidArgument, field + " " + rule);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

template <typename T>
double read_table_impl(std::span<const T> table, double index) {
  const std::size_t len = table.size();
  if (len == 0) fail(ErrorCode::InvalidArgument, "table is empty");
  if (!(index >= 0.0 && index < static_cast<double>(len))) {
    fail(ErrorCode::InvalidArgument,
         "table index " + std::to_string(index) + " out of range [0, " + std::to_string(len) + ")");
  }
  const auto i = static_cast<std::size_t>(index);
  const double frac = index - static_cast<double>(i);
  const std::size_t j = i + 1 == len ? 0 : i + 1;
  return (1.0 - frac) * static_cast<double>(table[i]) + frac * static_cast<double>(table[j]);
}

}  // namespace

void SynthParams::validate(double sample_rate_hz) const {
  require(finite_nonneg(attack_s), "attack_s", "must be >= 0");
  require(finite_nonneg(decay_s), "decay_s", "must be >= 0");
  require(sustain_level >= 0.0 && sustain_level <= 1.0, "sustain_level", "must be in [0, 1]");
  require(finite_nonneg(release_s), "release_s", "must be >= 0");
  require(filter_cutoff_hz > 0.0 && filter_cutoff_hz <= sample_rate_hz / 2.0, "filter_cutoff_hz",
          "must be in (0, sample_rate/2]");
  require(bank_position >= 0.0 && bank_position <= 1.0, "bank_position", "must be in [0, 1]");
}

void NoteEvent::validate() const {
  require(midi_note >= 0 && midi_note <= 127, "midi_note", "must be in [0, 127]");
  require(finite_nonneg(start_s), "start_s", "must be >= 0");
  require(std::isfinite(duration_s) && duration_s > 0.0, "duration_s", "must be > 0");
  require(velocity > 0.0 && velocity <= 1.0, "velocity", "must be in (0, 1]");
  if (bank_position) {
    require(*bank_position >= 0.0 && *bank_position <= 1.0, "bank_position", "must be in [0, 1]");
  }
}

void RenderConfig::validate() const {
  require(std::isfinite(sample_rate_hz) && sample_rate_hz >= 8000.0, "sample_rate_hz",
          "must be >= 8000");
}

double read_table(std::span<const double> table, double index) {
  return read_table_impl(table, index);
}

double read_table(std::span<const float> table, double index) {
  return read_table_impl(table, index);
}

double read_bilinear(const WavetableBank& bank, double index, double position) {
  if (!(position >= 0.0 && position <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "bank position must be in [0, 1]");
  }
  const std::size_t steps = bank.step_count();
  const double q = position * static_cast<double>(steps - 1);
  const auto j = std::min(static_cast<std::size_t>(q), steps - 2);
  const double f = q - static_cast<double>(j);
  return (1.0 - f) * read_table(bank.table(j), index) + f * read_table(bank.table(j + 1), index);
}

double midi_to_hz(int note) {
  if (note < 0 || note > 127) {
    fail(ErrorCode::InvalidArgument, "midi note " + std::to_string(note) + " out of range [0, 127]");
  }
  return 440.0 * std::exp2((note - 69) / 12.0);
}

Oscillator::Oscillator(const WavetableBank& bank, double freq_hz, double sample_rate_hz)
    : bank_(&bank), length_(static_cast<double>(bank.table_len())) {
  if (!(freq_hz > 0.0 && freq_hz < sample_rate_hz / 2.0)) {
    fail(ErrorCode::InvalidArgument, "frequency " + std::to_string(freq_hz) +
                                         " Hz out of range (0, sample_rate/2)");
  }
  increment_ = freq_hz * length_ / sample_rate_hz;
}

double Oscillator::next(double position) {
  const double out = read_bilinear(*bank_, phase_, position);
  phase_ += increment_;
  if (phase_ >= length_) phase_ -= length_;
  return out;
}

std::vector<double> oscillate(const WavetableBank& bank, double freq_hz,
                              std::span<const double> position_curve, const RenderConfig& config,
                              std::size_t n_samples) {
  config.validate();
  if (position_curve.size() < n_samples) {
    fail(ErrorCode::InvalidArgument, "position curve shorter than requested sample count");
  }
  Oscillator osc(bank, freq_hz, config.sample_rate_hz);
  std::vector<double> out(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) out[k] = osc.next(position_curve[k]);
  return out;
}

double adsr(const SynthParams& p, double gate_s, double t) {
  auto held = [&p](double time) {
    if (time < p.attack_s) return time / p.attack_s;
    time -= p.attack_s;
    if (time < p.decay_s) return 1.0 - (1.0 - p.sustain_level) * time / p.decay_s;
    return p.sustain_level;
  };
  if (t < 0.0) return 0.0;
  if (t < gate_s) return held(t);
  const double since = t - gate_s;
  if (since >= p.release_s) return 0.0;
  return held(gate_s) * (1.0 - since / p.release_s);
}

std::vector<double> lowpass(std::span<const double> audio, double cutoff_hz,
                            double sample_rate_hz) {
  if (!(cutoff_hz > 0.0 && cutoff_hz <= sample_rate_hz / 2.0)) {
    fail(ErrorCode::InvalidArgument, "filter_cutoff_hz must be in (0, sample_rate/2]");
  }
  const double alpha = 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz / sample_rate_hz);
  std::vector<double> out(audio.size());
  double y = 0.0;
  for (std::size_t k = 0; k < audio.size(); ++k) {
    y += alpha * (audio[k] - y);
    out[k] = y;
  }
  return out;
}

std::vector<double> render_note(const WavetableBank& bank, const NoteEvent& note,
                                const SynthParams& params, const RenderConfig& config) {
  config.validate();
  params.validate(config.sample_rate_hz);
  note.validate();
  const double sr = config.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround((note.duration_s + params.release_s) * sr));
  const double position = note.bank_position.value_or(params.bank_position);

  Oscillator osc(bank, midi_to_hz(note.midi_note), sr);
  std::vector<double> dry(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double gain = adsr(params, note.duration_s, static_cast<double>(k) / sr);
    dry[k] = osc.next(position) * gain * note.velocity;
  }
  return lowpass(dry, params.filter_cutoff_hz, sr);
}

ScoreRender render_score(const WavetableBank& bank, std::span<const NoteEvent> events,
                         const SynthParams& params, const RenderConfig& config) {
  if (events.empty()) fail(ErrorCode::EmptyScore, "score has no events");
  std::vector<std::vector<double>> notes;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& e : events) {
    notes.push_back(render_note(bank, e, params, config));
    offsets.push_back(static_cast<std::size_t>(std::llround(e.start_s * config.sample_rate_hz)));
    total = std::max(total, offsets.back() + notes.back().size());
  }

  ScoreRender result;
  result.audio.assign(total, 0.0);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    for (std::size_t k = 0; k < notes[i].size(); ++k) result.audio[offsets[i] + k] += notes[i][k];
  }
  for (double v : result.audio) {
    result.peak_before_scaling = std::max(result.peak_before_scaling, std::abs(v));
  }
  if (result.peak_before_scaling > 1.0) {
    const double peak = result.peak_before_scaling;
    for (auto& v : result.audio) v /= peak;
    result.gain_applied = 1.0 / peak;
  }
  return result;
}

}  // namespace nwt
