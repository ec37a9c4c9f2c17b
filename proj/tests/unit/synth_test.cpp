#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace nwt;

namespace {

// Two-table bank: pure one-cycle sine over the interior and its negation.
WavetableBank sine_bank(bool second_negated = true) {
  std::vector<float> a(kPaddedLength, 0.0f), b(kPaddedLength, 0.0f);
  for (std::size_t i = 1; i + 1 < kPaddedLength; ++i) {
    a[i] = static_cast<float>(std::sin(2.0 * std::numbers::pi * static_cast<double>(i - 1) / 512.0));
    b[i] = second_negated ? -a[i] : a[i];
  }
  return WavetableBank({a, b}, {"a", "b"}, 8, 0);
}

WavetableBank ramp_bank(std::size_t steps) {
  std::vector<std::vector<float>> tables;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<float> t(8, 0.0f);
    for (std::size_t i = 1; i < 7; ++i) t[i] = static_cast<float>(s * 10 + i);
    tables.push_back(t);
  }
  return WavetableBank(std::move(tables), {"a", "b"}, 1, 0);
}

}  // namespace

TEST(ReadTable, Examples) {
  const std::vector<double> t{0.0, 1.0, 0.0, -1.0};
  EXPECT_DOUBLE_EQ(read_table(t, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(read_table(t, 3.5), -0.5);
  EXPECT_DOUBLE_EQ(read_table(t, 2.0), 0.0);
  EXPECT_THROW(read_table(t, 4.0), Error);
  EXPECT_THROW(read_table(t, -0.1), Error);
}

TEST(ReadTable, IntegerIndicesAreExact) {
  Rng rng(1);
  std::vector<double> t(33);
  for (auto& v : t) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(read_table(t, static_cast<double>(i)), t[i]);
}

TEST(ReadTable, InterpolationStaysBetweenNeighbours) {
  Rng rng(2);
  std::vector<double> t(50);
  for (auto& v : t) v = rng.uniform(-1.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double idx = rng.uniform(0.0, 50.0);
    const auto i = static_cast<std::size_t>(idx);
    const double lo = std::min(t[i], t[(i + 1) % 50]);
    const double hi = std::max(t[i], t[(i + 1) % 50]);
    const double v = read_table(t, idx);
    EXPECT_GE(v, lo - 1e-15);
    EXPECT_LE(v, hi + 1e-15);
  }
}

TEST(ReadBilinear, MatchesManualInterpolation) {
  const auto bank = ramp_bank(5);
  // position 0.5 over 5 tables lands exactly on table 2.
  EXPECT_DOUBLE_EQ(read_bilinear(bank, 3.0, 0.5), 23.0);
  EXPECT_DOUBLE_EQ(read_bilinear(bank, 3.0, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(read_bilinear(bank, 3.0, 1.0), 43.0);
  EXPECT_DOUBLE_EQ(read_bilinear(bank, 3.5, 0.125), 0.5 * (3.0 + 4.0) + 5.0);
  EXPECT_THROW(read_bilinear(bank, 3.0, 1.5), Error);
}

TEST(Midi, ToHz) {
  EXPECT_DOUBLE_EQ(midi_to_hz(69), 440.0);
  EXPECT_DOUBLE_EQ(midi_to_hz(81), 880.0);
  EXPECT_NEAR(midi_to_hz(60), 261.6255653, 1e-6);
  EXPECT_THROW(midi_to_hz(128), Error);
  EXPECT_THROW(midi_to_hz(-1), Error);
}

TEST(Oscillator, IncrementFollowsPaddedLength) {
  const auto bank = sine_bank();
  const Oscillator osc(bank, 440.0, 44100.0);
  EXPECT_DOUBLE_EQ(osc.increment(), 440.0 * 514.0 / 44100.0);
  EXPECT_NEAR(osc.increment(), 5.128345, 1e-6);
  EXPECT_THROW(Oscillator(bank, 0.0, 44100.0), Error);
  EXPECT_THROW(Oscillator(bank, 22050.0, 44100.0), Error);
}

TEST(Oscillator, PhaseStaysInRange) {
  const auto bank = sine_bank();
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Oscillator osc(bank, rng.uniform(20.0, 20000.0), 44100.0);
    for (int k = 0; k < 5000; ++k) {
      osc.next(0.0);
      ASSERT_GE(osc.phase(), 0.0);
      ASSERT_LT(osc.phase(), 514.0);
    }
  }
}

TEST(Oscillate, PitchOf440) {
  const auto bank = sine_bank();
  const std::vector<double> pos(44100, 0.0);
  const auto audio = oscillate(bank, 440.0, pos, RenderConfig{}, 44100);
  ASSERT_EQ(audio.size(), 44100u);
  EXPECT_NEAR(estimate_fundamental(audio, 44100.0), 440.0, 1.0);
}

TEST(Oscillate, OppositeTablePolarityFlips) {
  const auto bank = sine_bank();
  const std::vector<double> zeros(4410, 0.0), ones(4410, 1.0);
  const auto a = oscillate(bank, 440.0, zeros, RenderConfig{}, 4410);
  const auto b = oscillate(bank, 440.0, ones, RenderConfig{}, 4410);
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(b[k], -a[k]);
  EXPECT_EQ(estimate_fundamental(a, 44100.0), estimate_fundamental(b, 44100.0));
}

TEST(Oscillate, ShortCurveRejected) {
  const auto bank = sine_bank();
  const std::vector<double> pos(10, 0.0);
  EXPECT_THROW(oscillate(bank, 440.0, pos, RenderConfig{}, 11), Error);
}

TEST(Adsr, Stages) {
  SynthParams p;
  p.attack_s = 0.1;
  p.decay_s = 0.2;
  p.sustain_level = 0.5;
  p.release_s = 0.4;
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 0.05), 0.5);
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 0.2), 0.75);
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 0.6), 0.5);
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 1.2), 0.25);
  EXPECT_NEAR(adsr(p, 1.0, 1.4), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, -1.0), 0.0);
  // Released during the attack: ramps down from the level reached.
  EXPECT_DOUBLE_EQ(adsr(p, 0.05, 0.25), 0.25);
}

TEST(Adsr, ZeroLengthStages) {
  SynthParams p;
  p.attack_s = 0.0;
  p.decay_s = 0.0;
  p.sustain_level = 0.7;
  p.release_s = 0.0;
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 0.0), 0.7);
  EXPECT_DOUBLE_EQ(adsr(p, 1.0, 1.0), 0.0);
}

TEST(Adsr, BoundedAndContinuous) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    SynthParams p;
    p.attack_s = rng.uniform(0.001, 0.5);
    p.decay_s = rng.uniform(0.001, 0.5);
    p.sustain_level = rng.uniform();
    p.release_s = rng.uniform(0.001, 0.5);
    const double gate = rng.uniform(0.0, 1.0);
    double prev = adsr(p, gate, 0.0);
    for (double t = 1e-4; t < 2.0; t += 1e-4) {
      const double v = adsr(p, gate, t);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      const double slope = 1e-4 * (1.0 / p.attack_s + 1.0 / p.decay_s + 1.0 / p.release_s);
      ASSERT_LE(std::abs(v - prev), slope + 1e-12);
      prev = v;
    }
  }
}

TEST(Lowpass, AlphaFromCutoff) {
  const std::vector<double> impulse{1.0, 0.0, 0.0};
  const auto y = lowpass(impulse, 22050.0, 44100.0);
  const double alpha = 1.0 - std::exp(-std::numbers::pi);
  EXPECT_NEAR(y[0], alpha, 1e-15);
  EXPECT_NEAR(alpha, 0.9568, 1e-4);
  EXPECT_NEAR(y[1], alpha * (1.0 - alpha), 1e-15);
}

TEST(Lowpass, UnityAtDcAndAttenuatesNyquist) {
  const std::vector<double> dc(2000, 0.5);
  EXPECT_NEAR(lowpass(dc, 1000.0, 44100.0).back(), 0.5, 1e-12);
  std::vector<double> alt(2000);
  for (std::size_t k = 0; k < alt.size(); ++k) alt[k] = k % 2 ? -1.0 : 1.0;
  const auto y = lowpass(alt, 1000.0, 44100.0);
  double peak = 0.0;
  for (std::size_t k = 1000; k < y.size(); ++k) peak = std::max(peak, std::abs(y[k]));
  EXPECT_LT(peak, 0.1);
  EXPECT_THROW(lowpass(dc, 0.0, 44100.0), Error);
  EXPECT_THROW(lowpass(dc, 30000.0, 44100.0), Error);
}

TEST(RenderNote, LengthAndTail) {
  const auto bank = sine_bank();
  SynthParams p;
  NoteEvent n;
  n.duration_s = 0.5;
  const auto audio = render_note(bank, n, p, RenderConfig{});
  EXPECT_EQ(audio.size(), static_cast<std::size_t>(std::llround(0.7 * 44100)));
  EXPECT_EQ(audio.front(), 0.0);
  double tail = 0.0;
  for (std::size_t k = audio.size() - 20; k < audio.size(); ++k) tail = std::max(tail, std::abs(audio[k]));
  EXPECT_LT(tail, 0.01);
}

TEST(RenderNote, VelocityScales) {
  const auto bank = sine_bank();
  NoteEvent loud, soft;
  soft.velocity = 0.5;
  const auto a = render_note(bank, loud, SynthParams{}, RenderConfig{});
  const auto b = render_note(bank, soft, SynthParams{}, RenderConfig{});
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(b[k], 0.5 * a[k], 1e-12);
}

TEST(RenderNote, InvalidEventsNameTheField) {
  const auto bank = sine_bank();
  NoteEvent n;
  n.midi_note = 200;
  try {
    render_note(bank, n, SynthParams{}, RenderConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("midi_note"), std::string::npos);
  }
  n = NoteEvent{};
  n.velocity = 0.0;
  EXPECT_THROW(render_note(bank, n, SynthParams{}, RenderConfig{}), Error);
  n = NoteEvent{};
  n.duration_s = 0.0;
  EXPECT_THROW(render_note(bank, n, SynthParams{}, RenderConfig{}), Error);
}

TEST(RenderScore, MixesAndNormalizes) {
  const auto bank = sine_bank(false);
  std::vector<NoteEvent> events(4);
  for (std::size_t i = 0; i < 4; ++i) {
    events[i].midi_note = 60 + static_cast<int>(i) * 4;
    events[i].start_s = 0.0;
    events[i].duration_s = 0.5;
  }
  const auto r = render_score(bank, events, SynthParams{}, RenderConfig{});
  EXPECT_GT(r.peak_before_scaling, 1.0);
  EXPECT_DOUBLE_EQ(r.gain_applied, 1.0 / r.peak_before_scaling);
  double peak = 0.0;
  for (double v : r.audio) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 1.0, 1e-12);
}

TEST(RenderScore, QuietMixIsLeftAlone) {
  const auto bank = sine_bank();
  std::vector<NoteEvent> events(2);
  events[0].velocity = 0.3;
  events[1].velocity = 0.3;
  events[1].start_s = 1.5;
  const auto r = render_score(bank, events, SynthParams{}, RenderConfig{});
  EXPECT_EQ(r.gain_applied, 1.0);
  EXPECT_EQ(r.audio.size(), static_cast<std::size_t>(std::llround(1.5 * 44100) + std::llround(1.2 * 44100)));
  const auto single = render_note(bank, events[0], SynthParams{}, RenderConfig{});
  for (std::size_t k = 0; k < single.size(); ++k) ASSERT_EQ(r.audio[k], single[k]);
}

TEST(RenderScore, EmptyIsAnError) {
  const auto bank = sine_bank();
  try {
    render_score(bank, {}, SynthParams{}, RenderConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyScore);
  }
}
