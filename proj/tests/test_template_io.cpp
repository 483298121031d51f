#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "lfid/error.hpp"
#include "lfid/template_io.hpp"
#include "support.hpp"

using namespace lfid;
using testing_support::random_minutiae_template;
using testing_support::random_texture_template;

namespace {

ErrorCode decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_template(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("round trip of 1000 random templates") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    if (i % 2 == 0) {
      const MinutiaeTemplate t = random_minutiae_template(rng);
      REQUIRE(validate_template(t).ok());
      const auto bytes = encode_template(t);
      const auto back = decode_template(bytes);
      REQUIRE(std::holds_alternative<MinutiaeTemplate>(back));
      REQUIRE(std::get<MinutiaeTemplate>(back) == t);
      REQUIRE(encode_template(std::get<MinutiaeTemplate>(back)) == bytes);
    } else {
      const TextureTemplate t = random_texture_template(rng);
      REQUIRE(validate_template(t).ok());
      const auto bytes = encode_template(t);
      const auto back = decode_template(bytes);
      REQUIRE(std::holds_alternative<TextureTemplate>(back));
      REQUIRE(std::get<TextureTemplate>(back) == t);
      REQUIRE(encode_template(std::get<TextureTemplate>(back)) == bytes);
    }
  }
}

TEST_CASE("doubles survive bit-exactly") {
  MinutiaeTemplate t;
  t.width = t.height = 1000;
  t.minutiae.push_back(make_minutia(0.1 + 0.2, 1.0 / 3.0, std::nextafter(kTwoPi, 0.0)));
  t.descriptors = DescriptorSet({PatchType::Centered80}, 1, 1);
  t.descriptors.values[0] = 1.0f;
  const auto back = std::get<MinutiaeTemplate>(decode_template(encode_template(t)));
  CHECK(std::memcmp(&back.minutiae[0].x, &t.minutiae[0].x, sizeof(double)) == 0);
  CHECK(back.minutiae[0].alpha == t.minutiae[0].alpha);
}

TEST_CASE("file save and load") {
  Rng rng(5);
  const auto dir = std::filesystem::temp_directory_path() / "lfid_template_io_test";
  std::filesystem::create_directories(dir);
  const MinutiaeTemplate mt = random_minutiae_template(rng);
  const TextureTemplate tt = random_texture_template(rng);
  save_template(mt, dir / "a.lfrt");
  save_template(tt, dir / "b.lfrt");
  CHECK(load_minutiae_template(dir / "a.lfrt") == mt);
  CHECK(load_texture_template(dir / "b.lfrt") == tt);
  CHECK_THROWS_AS(load_texture_template(dir / "a.lfrt"), Error);
  CHECK_THROWS_AS(load_template(dir / "missing.lfrt"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("damaged files") {
  Rng rng(9);
  MinutiaeTemplate t = random_minutiae_template(rng);
  while (t.minutiae.size() < 5) t = random_minutiae_template(rng);
  const auto bytes = encode_template(t);

  SUBCASE("wrong magic") {
    auto b = bytes;
    b[0] = 'X';
    CHECK(decode_error(b) == ErrorCode::MagicMismatch);
  }
  SUBCASE("version mismatch") {
    auto b = bytes;
    b[4] = 99;
    CHECK(decode_error(b) == ErrorCode::VersionMismatch);
  }
  SUBCASE("truncated at every offset") {
    for (std::size_t len = 0; len < bytes.size(); ++len) {
      const std::span<const std::uint8_t> part(bytes.data(), len);
      const ErrorCode c = decode_error(part);
      // A cut inside the magic reads as a wrong magic only when bytes are present.
      if (len >= 6) REQUIRE(c == ErrorCode::TruncatedPayload);
    }
  }
  SUBCASE("truncated mid-descriptor at random offsets") {
    const std::size_t desc_start = bytes.size() - t.descriptors.values.size() * sizeof(float);
    for (int i = 0; i < 100; ++i) {
      const std::size_t len = desc_start + rng.index(bytes.size() - desc_start);
      CHECK(decode_error({bytes.data(), len}) == ErrorCode::TruncatedPayload);
    }
  }
}
