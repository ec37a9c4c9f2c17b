#include "core/audio_io.hpp"

#include "core/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nwt {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

using nlohmann::json;

double number(const json& obj, const char* key, const std::string& path, double fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(ErrorCode::InvalidArgument, path + key + " must be a number");
  return it->get<double>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(ErrorCode::InvalidArgument, "unknown field " + path + key);
    }
  }
}

// Range errors carry the dotted field path, e.g. events[2].midi_note.
template <typename F>
void with_path(const std::string& path, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    fail(e.code(), path + e.what());
  }
}

}  // namespace

std::vector<std::uint8_t> encode_wav(std::span<const double> audio, std::uint32_t sample_rate) {
  if (sample_rate == 0 || sample_rate > 0x7fffffffU / 2) {
    fail(ErrorCode::InvalidArgument, "sample rate out of range");
  }
  const std::size_t data_len = 2 * audio.size();
  if (data_len > 0xffffffffULL - 36) fail(ErrorCode::InvalidArgument, "audio too long for WAV");

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_len));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, sample_rate);
  put_u32(out, 2 * sample_rate);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_len));
  for (std::size_t i = 0; i < audio.size(); ++i) {
    const double s = audio[i];
    if (!std::isfinite(s) || std::abs(s) > 1.0) {
      fail(ErrorCode::InvalidArgument,
           "sample " + std::to_string(i) + " is not a finite value in [-1, 1]");
    }
    const auto q = static_cast<std::int16_t>(std::lround(s * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

void write_wav(std::span<const double> audio, std::uint32_t sample_rate,
               const std::filesystem::path& path) {
  const auto bytes = encode_wav(audio, sample_rate);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

Score parse_score(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::out_of_range& e) {
    fail(ErrorCode::Malformed, std::string("score number out of range: ") + e.what());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    fail(ErrorCode::Malformed, "score syntax error at line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Malformed, "score must be a JSON object");
  reject_unknown(doc, {"sample_rate_hz", "params", "events"}, "");

  Score score;
  score.config.sample_rate_hz = number(doc, "sample_rate_hz", "", score.config.sample_rate_hz);
  score.config.validate();

  if (const auto it = doc.find("params"); it != doc.end()) {
    if (!it->is_object()) fail(ErrorCode::InvalidArgument, "params must be an object");
    const json& p = *it;
    reject_unknown(p,
                   {"attack_s", "decay_s", "sustain_level", "release_s", "filter_cutoff_hz",
                    "bank_position"},
                   "params.");
    auto& sp = score.params;
    sp.attack_s = number(p, "attack_s", "params.", sp.attack_s);
    sp.decay_s = number(p, "decay_s", "params.", sp.decay_s);
    sp.sustain_level = number(p, "sustain_level", "params.", sp.sustain_level);
    sp.release_s = number(p, "release_s", "params.", sp.release_s);
    sp.filter_cutoff_hz = number(p, "filter_cutoff_hz", "params.",
                                 std::min(sp.filter_cutoff_hz, score.config.sample_rate_hz / 2.0));
    sp.bank_position = number(p, "bank_position", "params.", sp.bank_position);
  } else {
    score.params.filter_cutoff_hz =
        std::min(score.params.filter_cutoff_hz, score.config.sample_rate_hz / 2.0);
  }
  with_path("params.", [&] { score.params.validate(score.config.sample_rate_hz); });

  const auto events = doc.find("events");
  if (events == doc.end()) fail(ErrorCode::EmptyScore, "score has no 'events' array");
  if (!events->is_array()) fail(ErrorCode::InvalidArgument, "events must be an array");
  if (events->empty()) fail(ErrorCode::EmptyScore, "score 'events' array is empty");

  for (std::size_t i = 0; i < events->size(); ++i) {
    const std::string path = "events[" + std::to_string(i) + "].";
    const json& e = (*events)[i];
    if (!e.is_object()) fail(ErrorCode::InvalidArgument, "events[" + std::to_string(i) + "] must be an object");
    reject_unknown(e, {"midi_note", "start_s", "duration_s", "velocity", "bank_position"}, path);

    NoteEvent note;
    const auto midi = e.find("midi_note");
    if (midi == e.end()) fail(ErrorCode::InvalidArgument, path + "midi_note is required");
    if (!midi->is_number_integer()) {
      fail(ErrorCode::InvalidArgument, path + "midi_note must be an integer");
    }
    const auto raw = midi->is_number_unsigned() ? static_cast<std::int64_t>(std::min<std::uint64_t>(
                                                      midi->get<std::uint64_t>(), 1u << 20))
                                                : midi->get<std::int64_t>();
    note.midi_note = static_cast<int>(std::clamp<std::int64_t>(raw, -1, 128));
    if (e.find("start_s") == e.end()) fail(ErrorCode::InvalidArgument, path + "start_s is required");
    if (e.find("duration_s") == e.end()) {
      fail(ErrorCode::InvalidArgument, path + "duration_s is required");
    }
    note.start_s = number(e, "start_s", path, 0.0);
    note.duration_s = number(e, "duration_s", path, 0.0);
    note.velocity = number(e, "velocity", path, 1.0);
    if (e.contains("bank_position")) note.bank_position = number(e, "bank_position", path, 0.0);
    with_path(path, [&] { note.validate(); });
    score.events.push_back(note);
  }
  return score;
}

Score load_score(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open score file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_score(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace nwt
