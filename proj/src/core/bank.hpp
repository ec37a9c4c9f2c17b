#pragma once

#include "core/autoencoder.hpp"
#include "core/wavetable.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nwt {

/// Ordered tables along one latent interpolation edge. Samples are stored in
/// single precision, the precision of the bank file and of playback.
class WavetableBank {
public:
  WavetableBank() = default;
  WavetableBank(std::vector<std::vector<float>> tables, std::array<std::string, 2> labels,
                int ramp_len, std::uint64_t model_seed);

  std::size_t step_count() const noexcept { return tables_.size(); }
  std::size_t table_len() const noexcept { return tables_.empty() ? 0 : tables_.front().size(); }
  std::span<const float> table(std::size_t i) const { return tables_.at(i); }
  const std::array<std::string, 2>& labels() const noexcept { return labels_; }
  int ramp_len() const noexcept { return ramp_len_; }
  std::uint64_t model_seed() const noexcept { return model_seed_; }

  friend bool operator==(const WavetableBank&, const WavetableBank&) = default;

private:
  std::vector<std::vector<float>> tables_;
  std::array<std::string, 2> labels_;
  int ramp_len_ = kDefaultRampLength;
  std::uint64_t model_seed_ = 0;
};

std::vector<float> to_float_table(const PaddedWavetable& t);

LatentVector lerp_latent(const LatentVector& a, const LatentVector& b, double t);

WavetableBank build_bank(const AutoencoderModel& model, const Waveform& wf_a,
                         const Waveform& wf_b, std::size_t steps, int ramp_len,
                         std::array<std::string, 2> labels = {"a", "b"});

/// Bank between two preset shapes at phase 0.
WavetableBank build_bank(const AutoencoderModel& model, Shape a, Shape b, std::size_t steps,
                         int ramp_len);

inline constexpr std::size_t kDefaultBankSteps = 100;
inline constexpr std::array<std::array<Shape, 2>, 3> kDefaultBankPairs{{
    {Shape::Sine, Shape::Saw},
    {Shape::Saw, Shape::Triangle},
    {Shape::Triangle, Shape::Sine},
}};

/// (sine, saw), (saw, triangle), (triangle, sine), 100 steps each.
std::array<WavetableBank, 3> build_default_banks(const AutoencoderModel& model, int ramp_len);

/// File name used for a bank on disk, e.g. "sine-saw.nwtb".
std::string bank_file_name(const WavetableBank& bank);

std::vector<std::uint8_t> bank_to_bytes(const WavetableBank& bank);
WavetableBank bank_from_bytes(std::span<const std::uint8_t> bytes);
void save_bank(const WavetableBank& bank, const std::filesystem::path& path);
WavetableBank load_bank(const std::filesystem::path& path);

struct EdgeNoiseRow {
  double offset = 0.0;
  double on_edge_flatness = 0.0;
  double off_edge_flatness = 0.0;
};

/// Spectral flatness of the raw decode at the edge midpoint versus the same
/// point displaced by `offset` along one seeded random unit direction.
std::vector<EdgeNoiseRow> edge_noise(const AutoencoderModel& model, Shape a, Shape b,
                                     std::span<const double> offsets, std::uint64_t seed);

}  // namespace nwt
