#include "core/audio_io.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace nwt;

namespace {

ErrorCode score_error(const std::string& text, std::string* message = nullptr) {
  try {
    parse_score(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "score was accepted: " << text;
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Wav, GoldenBytes) {
  const std::vector<std::uint8_t> expected{
      'R', 'I', 'F', 'F', 44, 0, 0, 0, 'W', 'A', 'V', 'E',
      'f', 'm', 't', ' ', 16, 0, 0, 0, 1, 0, 1, 0,
      0x44, 0xAC, 0, 0, 0x88, 0x58, 0x01, 0, 2, 0, 16, 0,
      'd', 'a', 't', 'a', 8, 0, 0, 0,
      0x00, 0x00, 0xFF, 0x7F, 0x01, 0x80, 0x00, 0x40};
  const std::vector<double> samples{0.0, 1.0, -1.0, 0.5};
  EXPECT_EQ(encode_wav(samples, 44100), expected);
}

TEST(Wav, RoundingAndLength) {
  Rng rng(1);
  std::vector<double> s(1000);
  for (auto& v : s) v = rng.uniform(-1.0, 1.0);
  const auto bytes = encode_wav(s, 48000);
  ASSERT_EQ(bytes.size(), 44u + 2000u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto q = static_cast<std::int16_t>(bytes[44 + 2 * i] | bytes[45 + 2 * i] << 8);
    ASSERT_EQ(q, std::lround(s[i] * 32767.0));
  }
}

TEST(Wav, RejectsOutOfRange) {
  EXPECT_THROW(encode_wav(std::vector<double>{1.5}, 44100), Error);
  EXPECT_THROW(encode_wav(std::vector<double>{std::nan("")}, 44100), Error);
  EXPECT_THROW(encode_wav(std::vector<double>{0.0}, 0), Error);
}

TEST(Wav, WriteFile) {
  const auto p = std::filesystem::temp_directory_path() / "nwt_audio_test.wav";
  const std::vector<double> samples{0.0, 0.25};
  write_wav(samples, 22050, p);
  std::ifstream in(p, std::ios::binary);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(bytes, encode_wav(samples, 22050));
  std::filesystem::remove(p);
  EXPECT_THROW(write_wav(samples, 22050, "/nonexistent-dir/x.wav"), Error);
}

TEST(Score, MinimalWithDefaults) {
  const auto s = parse_score(R"({"events":[{"midi_note":60,"start_s":0,"duration_s":0.5}]})");
  ASSERT_EQ(s.events.size(), 1u);
  EXPECT_EQ(s.events[0].midi_note, 60);
  EXPECT_EQ(s.events[0].velocity, 1.0);
  EXPECT_FALSE(s.events[0].bank_position.has_value());
  EXPECT_EQ(s.config.sample_rate_hz, 44100.0);
  EXPECT_EQ(s.params.filter_cutoff_hz, 8000.0);
}

TEST(Score, FullDocument) {
  const auto s = parse_score(R"({
    "sample_rate_hz": 8000,
    "params": {"attack_s": 0.02, "decay_s": 0.05, "sustain_level": 0.6, "release_s": 0.3,
               "bank_position": 0.25},
    "events": [
      {"midi_note": 69, "start_s": 0.0, "duration_s": 1.0, "velocity": 0.5, "bank_position": 0.75},
      {"midi_note": 72, "start_s": 0.5, "duration_s": 0.25}
    ]})");
  EXPECT_EQ(s.config.sample_rate_hz, 8000.0);
  EXPECT_EQ(s.params.filter_cutoff_hz, 4000.0);
  EXPECT_EQ(s.params.sustain_level, 0.6);
  EXPECT_EQ(s.params.bank_position, 0.25);
  ASSERT_EQ(s.events.size(), 2u);
  EXPECT_EQ(s.events[0].bank_position, 0.75);
  EXPECT_EQ(s.events[1].start_s, 0.5);
}

TEST(Score, ErrorsNameTheField) {
  std::string msg;
  EXPECT_EQ(score_error(R"({"events":[{"midi_note":130,"start_s":0,"duration_s":1}]})", &msg),
            ErrorCode::InvalidArgument);
  EXPECT_NE(msg.find("events[0].midi_note"), std::string::npos) << msg;

  EXPECT_EQ(score_error(R"({"events":[{"midi_note":60,"start_s":0,"duration_s":1},
                                      {"midi_note":60,"start_s":-1,"duration_s":1}]})", &msg),
            ErrorCode::InvalidArgument);
  EXPECT_NE(msg.find("events[1].start_s"), std::string::npos) << msg;

  EXPECT_EQ(score_error(R"({"params":{"sustain_level":2},"events":[{"midi_note":60,"start_s":0,"duration_s":1}]})", &msg),
            ErrorCode::InvalidArgument);
  EXPECT_NE(msg.find("params.sustain_level"), std::string::npos) << msg;

  EXPECT_EQ(score_error(R"({"events":[{"midi_note":60,"start_s":0,"duration_s":1,"pitch":3}]})", &msg),
            ErrorCode::InvalidArgument);
  EXPECT_NE(msg.find("events[0].pitch"), std::string::npos) << msg;

  EXPECT_EQ(score_error(R"({"events":[{"midi_note":60.5,"start_s":0,"duration_s":1}]})"),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(score_error(R"({"events":[{"start_s":0,"duration_s":1}]})"), ErrorCode::InvalidArgument);
  EXPECT_EQ(score_error(R"({"sample_rate_hz":100,"events":[{"midi_note":60,"start_s":0,"duration_s":1}]})"),
            ErrorCode::InvalidArgument);
}

TEST(Score, SyntaxErrorsReportTheLine) {
  std::string msg;
  EXPECT_EQ(score_error("{\n\"events\": [\n  {oops}\n]}", &msg), ErrorCode::Malformed);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_EQ(score_error("[1,2]"), ErrorCode::Malformed);
}

TEST(Score, EmptyScores) {
  EXPECT_EQ(score_error(R"({"events":[]})"), ErrorCode::EmptyScore);
  EXPECT_EQ(score_error(R"({})"), ErrorCode::EmptyScore);
}

TEST(Score, FuzzedTextNeverCrashes) {
  const std::string base =
      R"({"sample_rate_hz":44100,"params":{"attack_s":0.01,"release_s":0.2},)"
      R"("events":[{"midi_note":60,"start_s":0,"duration_s":0.5,"velocity":0.8}]})";
  const std::string alphabet = "{}[]\":,0123456789.-eE truefalsnul";
  Rng rng(9);
  std::size_t accepted = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    std::string text = base;
    const std::size_t edits = 1 + rng.below(4);
    for (std::size_t e = 0; e < edits; ++e) {
      const std::size_t at = rng.below(text.size());
      switch (rng.below(3)) {
        case 0: text[at] = alphabet[rng.below(alphabet.size())]; break;
        case 1: text.erase(at, 1); break;
        default: text.insert(at, 1, alphabet[rng.below(alphabet.size())]); break;
      }
    }
    try {
      const auto s = parse_score(text);
      ASSERT_FALSE(s.events.empty());
      for (const auto& ev : s.events) EXPECT_NO_THROW(ev.validate());
      ++accepted;
    } catch (const Error&) {
    }
  }
  EXPECT_GT(accepted, 0u);
}

TEST(Score, LoadFromFile) {
  try {
    load_score("/nonexistent/score.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/score.json"), std::string::npos);
  }
}
