#include "core/bank.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

using namespace nwt;

namespace {

const AutoencoderModel& untrained() {
  static const AutoencoderModel m = init_model(TrainingConfig{});
  return m;
}

WavetableBank random_bank(Rng& rng) {
  const std::size_t steps = 2 + rng.below(20);
  std::vector<std::vector<float>> tables(steps, std::vector<float>(kPaddedLength, 0.0f));
  for (auto& t : tables) {
    for (std::size_t i = 1; i + 1 < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  return WavetableBank(std::move(tables), {"x" + std::to_string(rng.below(100)), "y"},
                       1 + static_cast<int>(rng.below(100)), rng.below(1u << 30));
}

ErrorCode code_of(std::span<const std::uint8_t> bytes) {
  try {
    bank_from_bytes(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "bytes were accepted";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Lerp, EndpointsAreExact) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> av(16), bv(16);
    for (auto& v : av) v = rng.uniform(-3.0, 3.0);
    for (auto& v : bv) v = rng.uniform(-3.0, 3.0);
    const LatentVector a(av), b(bv);
    EXPECT_EQ(lerp_latent(a, b, 0.0), a);
    EXPECT_EQ(lerp_latent(a, b, 1.0), b);
  }
}

TEST(Lerp, PointsLieOnTheSegment) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> av(16), bv(16);
    for (auto& v : av) v = rng.uniform(-3.0, 3.0);
    for (auto& v : bv) v = rng.uniform(-3.0, 3.0);
    const double t = rng.uniform();
    const auto z = lerp_latent(LatentVector(av), LatentVector(bv), t);
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_NEAR(z[i] - av[i], t * (bv[i] - av[i]), 1e-12);
    }
  }
}

TEST(Lerp, Errors) {
  const LatentVector a(std::vector<double>(4, 0.0)), b(std::vector<double>(5, 0.0));
  EXPECT_THROW(lerp_latent(a, b, 0.5), Error);
  EXPECT_THROW(lerp_latent(a, a, -0.1), Error);
  EXPECT_THROW(lerp_latent(a, a, 1.1), Error);
}

TEST(Bank, ConstructionValidates) {
  const std::vector<float> good(8, 0.0f);
  EXPECT_THROW(WavetableBank({good}, {"a", "b"}, 8, 0), Error);
  EXPECT_THROW(WavetableBank({good, std::vector<float>(9, 0.0f)}, {"a", "b"}, 8, 0), Error);
  auto bad = good;
  bad[0] = 0.5f;
  EXPECT_THROW(WavetableBank({good, bad}, {"a", "b"}, 8, 0), Error);
  EXPECT_NO_THROW(WavetableBank({good, good}, {"a", "b"}, 8, 0));
}

TEST(Bank, BuildFromPresets) {
  const auto bank = build_bank(untrained(), Shape::Sine, Shape::Saw, 100, 8);
  EXPECT_EQ(bank.step_count(), 100u);
  EXPECT_EQ(bank.table_len(), 514u);
  EXPECT_EQ(bank.labels()[0], "sine");
  EXPECT_EQ(bank.labels()[1], "saw");
  EXPECT_EQ(bank_file_name(bank), "sine-saw.nwtb");
  for (std::size_t i = 0; i < bank.step_count(); ++i) {
    const auto t = bank.table(i);
    EXPECT_EQ(t.front(), 0.0f);
    EXPECT_EQ(t.back(), 0.0f);
  }

  const auto za = encode(untrained(), preset_waveform(Shape::Sine));
  const auto first = to_float_table(condition(decode(untrained(), za), 8));
  EXPECT_TRUE(std::equal(first.begin(), first.end(), bank.table(0).begin()));
}

TEST(Bank, DefaultBanks) {
  const auto banks = build_default_banks(untrained(), 8);
  const char* names[] = {"sine-saw.nwtb", "saw-triangle.nwtb", "triangle-sine.nwtb"};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(banks[i].step_count(), 100u);
    EXPECT_EQ(banks[i].table_len(), 514u);
    EXPECT_EQ(bank_file_name(banks[i]), names[i]);
  }
}

TEST(Bank, ConstantDecodeIsReported) {
  auto m = untrained();
  for (auto& l : m.decoder) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  try {
    build_bank(m, Shape::Sine, Shape::Saw, 4, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConstantInput);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
  }
}

TEST(Bank, StepCountMustBeAtLeastTwo) {
  EXPECT_THROW(build_bank(untrained(), Shape::Sine, Shape::Saw, 1, 8), Error);
}

TEST(BankFile, RandomRoundTripsAreExact) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bank = random_bank(rng);
    const auto bytes = bank_to_bytes(bank);
    ASSERT_EQ(bank_from_bytes(bytes), bank);
  }
}

TEST(BankFile, HeaderLayout) {
  Rng rng(3);
  const auto bank = random_bank(rng);
  const auto bytes = bank_to_bytes(bank);
  ASSERT_GE(bytes.size(), 20u);
  EXPECT_EQ(std::memcmp(bytes.data(), "NWTB", 4), 0);
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) | static_cast<std::uint32_t>(bytes[off + 1]) << 8 |
           static_cast<std::uint32_t>(bytes[off + 2]) << 16 |
           static_cast<std::uint32_t>(bytes[off + 3]) << 24;
  };
  EXPECT_EQ(u32(4), 1u);
  EXPECT_EQ(u32(8), bank.step_count());
  EXPECT_EQ(u32(12), 514u);
  EXPECT_EQ(bytes.size(), 20u + u32(16) + 4u * bank.step_count() * 514u);
}

TEST(BankFile, CorruptInputsAreRejectedWithCodes) {
  Rng rng(4);
  const auto good = bank_to_bytes(random_bank(rng));

  auto bytes = good;
  bytes[0] = 'X';
  EXPECT_EQ(code_of(bytes), ErrorCode::BadMagic);

  bytes = good;
  bytes[4] = 2;
  EXPECT_EQ(code_of(bytes), ErrorCode::VersionMismatch);

  bytes = good;
  bytes[12] = 0;
  EXPECT_EQ(code_of(bytes), ErrorCode::Malformed);

  bytes = good;
  bytes.pop_back();
  EXPECT_EQ(code_of(bytes), ErrorCode::Truncated);

  bytes = good;
  bytes.push_back(0);
  EXPECT_EQ(code_of(bytes), ErrorCode::Malformed);

  EXPECT_EQ(code_of(std::span<const std::uint8_t>(good.data(), 10)), ErrorCode::Truncated);
}

TEST(BankFile, FuzzedBytesNeverCrash) {
  Rng rng(5);
  const auto good = bank_to_bytes(random_bank(rng));
  for (int trial = 0; trial < 2000; ++trial) {
    auto bytes = good;
    const std::size_t flips = 1 + rng.below(8);
    for (std::size_t f = 0; f < flips; ++f) {
      const std::size_t at = rng.below(std::min<std::size_t>(bytes.size(), 200));
      bytes[at] = static_cast<std::uint8_t>(rng.below(256));
    }
    if (rng.below(4) == 0) bytes.resize(rng.below(bytes.size()));
    try {
      const auto b = bank_from_bytes(bytes);
      EXPECT_GE(b.step_count(), 2u);
    } catch (const Error&) {
    }
  }
}

TEST(BankFile, SaveLoad) {
  Rng rng(6);
  const auto bank = random_bank(rng);
  const auto p = std::filesystem::temp_directory_path() / "nwt_bank_test.nwtb";
  save_bank(bank, p);
  EXPECT_EQ(load_bank(p), bank);
  std::filesystem::remove(p);
  try {
    load_bank(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(EdgeNoise, ZeroOffsetMatchesOnEdge) {
  const std::vector<double> offsets{0.0, 0.5, 2.0};
  const auto rows = edge_noise(untrained(), Shape::Sine, Shape::Saw, offsets, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].on_edge_flatness, rows[0].off_edge_flatness);
  for (const auto& r : rows) {
    EXPECT_GE(r.off_edge_flatness, 0.0);
    EXPECT_LE(r.off_edge_flatness, 1.0);
    EXPECT_EQ(r.on_edge_flatness, rows[0].on_edge_flatness);
  }
  EXPECT_EQ(edge_noise(untrained(), Shape::Sine, Shape::Saw, offsets, 1)[2].off_edge_flatness,
            rows[2].off_edge_flatness);
}
