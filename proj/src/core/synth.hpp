#pragma once

#include "core/bank.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nwt {

struct SynthParams {
  double attack_s = 0.01;
  double decay_s = 0.1;
  double sustain_level = 0.8;
  double release_s = 0.2;
  double filter_cutoff_hz = 8000.0;
  double bank_position = 0.0;

  void validate(double sample_rate_hz) const;
};

struct NoteEvent {
  int midi_note = 69;
  double start_s = 0.0;
  double duration_s = 1.0;  // gate time, before release
  double velocity = 1.0;
  std::optional<double> bank_position;

  void validate() const;
};

struct RenderConfig {
  double sample_rate_hz = 44100.0;

  void validate() const;
};

/// Linear read with wraparound; `index` in [0, table.size()).
double read_table(std::span<const double> table, double index);
double read_table(std::span<const float> table, double index);

/// Linear along the table index and along the bank position at once.
double read_bilinear(const WavetableBank& bank, double index, double position);

double midi_to_hz(int note);

/// Phase-accumulator playback of a bank. The loop period is the full padded
/// table length. Constant cost per sample and no allocation after setup.
class Oscillator {
public:
  Oscillator(const WavetableBank& bank, double freq_hz, double sample_rate_hz);

  double phase() const noexcept { return phase_; }
  double increment() const noexcept { return increment_; }

  /// Output at the current phase, then advance.
  double next(double position);

private:
  const WavetableBank* bank_;
  double length_;
  double increment_;
  double phase_ = 0.0;
};

std::vector<double> oscillate(const WavetableBank& bank, double freq_hz,
                              std::span<const double> position_curve, const RenderConfig& config,
                              std::size_t n_samples);

/// Linear ADSR gain at time `t` for a note whose gate closes at `gate_s`.
double adsr(const SynthParams& params, double gate_s, double t);

/// One-pole low-pass, unity gain at DC, zero initial state.
std::vector<double> lowpass(std::span<const double> audio, double cutoff_hz, double sample_rate_hz);

std::vector<double> render_note(const WavetableBank& bank, const NoteEvent& note,
                                const SynthParams& params, const RenderConfig& config);

struct ScoreRender {
  std::vector<double> audio;
  double peak_before_scaling = 0.0;
  double gain_applied = 1.0;  // < 1 when the mix was scaled down by its peak
};

ScoreRender render_score(const WavetableBank& bank, std::span<const NoteEvent> events,
                         const SynthParams& params, const RenderConfig& config);

}  // namespace nwt
