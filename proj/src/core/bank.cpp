#include "core/bank.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace nwt {

namespace {

constexpr char kMagic[4] = {'N', 'W', 'T', 'B'};
constexpr std::uint32_t kBankVersion = 1;
constexpr std::size_t kHeaderSize = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

}  // namespace

WavetableBank::WavetableBank(std::vector<std::vector<float>> tables,
                             std::array<std::string, 2> labels, int ramp_len,
                             std::uint64_t model_seed)
    : tables_(std::move(tables)),
      labels_(std::move(labels)),
      ramp_len_(ramp_len),
      model_seed_(model_seed) {
  if (tables_.size() < 2) fail(ErrorCode::InvalidArgument, "a bank needs at least 2 tables");
  const std::size_t len = tables_.front().size();
  if (len < 3) fail(ErrorCode::InvalidArgument, "bank tables need at least 3 samples");
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    const auto& t = tables_[i];
    const std::string where = "table " + std::to_string(i);
    if (t.size() != len) {
      fail(ErrorCode::InvalidArgument, where + ": length " + std::to_string(t.size()) +
                                           " differs from table 0 (" + std::to_string(len) + ")");
    }
    if (t.front() != 0.0f || t.back() != 0.0f) {
      fail(ErrorCode::InvalidArgument, where + ": endpoints must be exactly 0");
    }
    for (float v : t) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, where + ": non-finite sample");
    }
  }
}

std::vector<float> to_float_table(const PaddedWavetable& t) {
  std::vector<float> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<float>(t[i]);
  return out;
}

LatentVector lerp_latent(const LatentVector& a, const LatentVector& b, double t) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch, "latent lengths differ (" + std::to_string(a.size()) +
                                           " vs " + std::to_string(b.size()) + ")");
  }
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::InvalidArgument, "t must be in [0, 1]");
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
  return LatentVector(std::move(out));
}

WavetableBank build_bank(const AutoencoderModel& model, const Waveform& wf_a,
                         const Waveform& wf_b, std::size_t steps, int ramp_len,
                         std::array<std::string, 2> labels) {
  if (steps < 2) fail(ErrorCode::InvalidArgument, "steps must be at least 2");
  const LatentVector za = encode(model, wf_a);
  const LatentVector zb = encode(model, wf_b);
  std::vector<std::vector<float>> tables;
  tables.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
    try {
      tables.push_back(to_float_table(condition(decode(model, lerp_latent(za, zb, t)), ramp_len)));
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(i) + " (t=" + std::to_string(t) + "): " + e.what());
    }
  }
  return WavetableBank(std::move(tables), std::move(labels), ramp_len, model.metadata.seed);
}

WavetableBank build_bank(const AutoencoderModel& model, Shape a, Shape b, std::size_t steps,
                         int ramp_len) {
  return build_bank(model, preset_waveform(a), preset_waveform(b), steps, ramp_len,
                    {std::string(shape_name(a)), std::string(shape_name(b))});
}

std::array<WavetableBank, 3> build_default_banks(const AutoencoderModel& model, int ramp_len) {
  std::array<WavetableBank, 3> banks;
  for (std::size_t i = 0; i < kDefaultBankPairs.size(); ++i) {
    const auto [a, b] = kDefaultBankPairs[i];
    banks[i] = build_bank(model, a, b, kDefaultBankSteps, ramp_len);
  }
  return banks;
}

std::string bank_file_name(const WavetableBank& bank) {
  return bank.labels()[0] + "-" + bank.labels()[1] + ".nwtb";
}

std::vector<std::uint8_t> bank_to_bytes(const WavetableBank& bank) {
  const nlohmann::json meta = {{"labels", {bank.labels()[0], bank.labels()[1]}},
                               {"ramp_len", bank.ramp_len()},
                               {"model_seed", bank.model_seed()}};
  const std::string meta_text = meta.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + meta_text.size() + 4 * bank.step_count() * bank.table_len());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kBankVersion);
  put_u32(out, static_cast<std::uint32_t>(bank.step_count()));
  put_u32(out, static_cast<std::uint32_t>(bank.table_len()));
  put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
  out.insert(out.end(), meta_text.begin(), meta_text.end());
  for (std::size_t i = 0; i < bank.step_count(); ++i) {
    for (float v : bank.table(i)) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WavetableBank bank_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::BadMagic, "not a bank file (missing NWTB magic)");
  }
  if (bytes.size() < kHeaderSize) fail(ErrorCode::Truncated, "bank header is truncated");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kBankVersion) {
    fail(ErrorCode::VersionMismatch,
         "unsupported bank version " + std::to_string(version) + " (expected 1)");
  }
  const std::uint64_t table_count = get_u32(bytes, 8);
  const std::uint64_t table_len = get_u32(bytes, 12);
  const std::uint64_t meta_len = get_u32(bytes, 16);
  if (table_len != kPaddedLength) {
    fail(ErrorCode::Malformed, "table_len " + std::to_string(table_len) + " in header, expected " +
                                   std::to_string(kPaddedLength));
  }
  if (table_count < 2) fail(ErrorCode::Malformed, "table_count must be at least 2");
  if (bytes.size() - kHeaderSize < meta_len) {
    fail(ErrorCode::Truncated, "metadata extends past end of file");
  }
  const std::uint64_t payload = table_count * table_len * 4;
  const std::uint64_t available = bytes.size() - kHeaderSize - meta_len;
  if (available < payload) {
    fail(ErrorCode::Truncated, "header declares " + std::to_string(table_count) + " x " +
                                   std::to_string(table_len) + " samples but only " +
                                   std::to_string(available) + " payload bytes are present");
  }
  if (available > payload) {
    fail(ErrorCode::Malformed, std::to_string(available - payload) + " unexpected trailing bytes");
  }

  const auto* meta_begin = reinterpret_cast<const char*>(bytes.data() + kHeaderSize);
  nlohmann::json meta = nlohmann::json::parse(meta_begin, meta_begin + meta_len, nullptr, false);
  if (meta.is_discarded() || !meta.is_object()) {
    fail(ErrorCode::Malformed, "bank metadata is not a JSON object");
  }
  const auto labels = meta.find("labels");
  if (labels == meta.end() || !labels->is_array() || labels->size() != 2 ||
      !(*labels)[0].is_string() || !(*labels)[1].is_string()) {
    fail(ErrorCode::Malformed, "bank metadata 'labels' must be an array of two strings");
  }
  const auto ramp = meta.find("ramp_len");
  if (ramp == meta.end() || !ramp->is_number_integer() || ramp->get<std::int64_t>() < 1 ||
      ramp->get<std::int64_t>() > static_cast<std::int64_t>(table_len / 4)) {
    fail(ErrorCode::Malformed, "bank metadata 'ramp_len' must be an integer in range");
  }
  const auto seed = meta.find("model_seed");
  if (seed == meta.end() || !seed->is_number_unsigned()) {
    fail(ErrorCode::Malformed, "bank metadata 'model_seed' must be a non-negative integer");
  }

  std::vector<std::vector<float>> tables(table_count, std::vector<float>(table_len));
  std::size_t at = kHeaderSize + meta_len;
  for (auto& t : tables) {
    for (auto& v : t) {
      v = std::bit_cast<float>(get_u32(bytes, at));
      at += 4;
    }
  }
  try {
    return WavetableBank(std::move(tables),
                         {(*labels)[0].get<std::string>(), (*labels)[1].get<std::string>()},
                         ramp->get<int>(), seed->get<std::uint64_t>());
  } catch (const Error& e) {
    fail(ErrorCode::Malformed, std::string("invalid bank contents: ") + e.what());
  }
}

void save_bank(const WavetableBank& bank, const std::filesystem::path& path) {
  const auto bytes = bank_to_bytes(bank);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

WavetableBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open bank file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return bank_from_bytes(bytes);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<EdgeNoiseRow> edge_noise(const AutoencoderModel& model, Shape a, Shape b,
                                     std::span<const double> offsets, std::uint64_t seed) {
  const LatentVector za = encode(model, preset_waveform(a));
  const LatentVector zb = encode(model, preset_waveform(b));
  const LatentVector mid = lerp_latent(za, zb, 0.5);

  Rng rng(seed);
  std::vector<double> dir(mid.size());
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& d : dir) d = rng.normal();
    norm = 0.0;
    for (double d : dir) norm += d * d;
    norm = std::sqrt(norm);
  }
  for (auto& d : dir) d /= norm;

  const double on_edge = spectral_flatness(decode(model, mid).samples());
  std::vector<EdgeNoiseRow> rows;
  for (double offset : offsets) {
    if (!std::isfinite(offset)) fail(ErrorCode::InvalidArgument, "offsets must be finite");
    std::vector<double> z(mid.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = mid[i] + offset * dir[i];
    const double off_edge =
        spectral_flatness(decode(model, LatentVector(std::move(z))).samples());
    rows.push_back({offset, on_edge, off_edge});
  }
  return rows;
}

}  // namespace nwt
