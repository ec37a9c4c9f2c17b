#pragma once

#include "core/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace nwt {

/// Mono 16-bit PCM RIFF/WAVE image; sample = round(s * 32767).
std::vector<std::uint8_t> encode_wav(std::span<const double> audio, std::uint32_t sample_rate);
void write_wav(std::span<const double> audio, std::uint32_t sample_rate,
               const std::filesystem::path& path);

struct Score {
  std::vector<NoteEvent> events;
  SynthParams params;
  RenderConfig config;
};

/// Validated score from JSON text. Omitted params and velocities take defaults.
Score parse_score(std::string_view text);
Score load_score(const std::filesystem::path& path);

}  // namespace nwt
