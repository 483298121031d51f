#include <cmath>
#include <set>

#include "doctest.h"
#include "lfid/config.hpp"
#include "lfid/core.hpp"
#include "lfid/error.hpp"
#include "lfid/synth.hpp"
#include "support.hpp"

using namespace lfid;

TEST_CASE("angle wrapping") {
  CHECK(wrap_two_pi(7.0) == doctest::Approx(7.0 - kTwoPi));
  CHECK(wrap_two_pi(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_two_pi(kTwoPi) == 0.0);
  CHECK(wrap_pi(kPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_pi(-0.25) == doctest::Approx(kPi - 0.25));
  CHECK(wrap_signed_pi(kPi) == doctest::Approx(kPi));
  CHECK(wrap_signed_pi(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_signed_pi(1.5 * kPi) == doctest::Approx(-0.5 * kPi));
  CHECK(circular_distance(0.1, kTwoPi - 0.1) == doctest::Approx(0.2));
  CHECK(circular_distance(0.0, kPi) == doctest::Approx(kPi));

  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-100.0, 100.0);
    const double w2 = wrap_two_pi(a);
    const double w1 = wrap_pi(a);
    const double ws = wrap_signed_pi(a);
    REQUIRE(w2 >= 0.0);
    REQUIRE(w2 < kTwoPi);
    REQUIRE(w1 >= 0.0);
    REQUIRE(w1 < kPi);
    REQUIRE(ws > -kPi);
    REQUIRE(ws <= kPi);
    const double d = circular_distance(a, rng.uniform(-100.0, 100.0));
    REQUIRE(d >= 0.0);
    REQUIRE(d <= kPi);
  }
}

TEST_CASE("minutia direction is reduced on construction") {
  const Minutia m = make_minutia(1, 2, 7.0);
  CHECK(m.alpha == doctest::Approx(7.0 - kTwoPi));
  CHECK(m.kind == MinutiaKind::True);
}

TEST_CASE("patch type names round-trip") {
  std::set<std::string_view> names;
  for (auto t : all_patch_types()) {
    names.insert(patch_type_name(t));
    CHECK(parse_patch_type(patch_type_name(t)) == t);
  }
  CHECK(names.size() == kPatchTypeCount);
  CHECK_FALSE(parse_patch_type("centered81").has_value());
}

TEST_CASE("orientation field block lookup") {
  OrientationField f(16, 4, 3);
  CHECK(f.block_count() == 12);
  CHECK(f.block_at(0.0, 0.0) == 0u);
  CHECK(f.block_at(17.0, 33.0) == f.index(1, 2));
  CHECK_FALSE(f.block_at(-0.1, 5.0).has_value());
  CHECK_FALSE(f.block_at(64.0, 5.0).has_value());
  CHECK(f.center_x(1) == 24.0);
}

TEST_CASE("descriptor set select") {
  DescriptorSet d({PatchType::Centered80, PatchType::TopLeft, PatchType::Bottom}, 2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t p = 0; p < 3; ++p) {
      auto v = d.mutable_vector(i, p);
      v[0] = static_cast<float>(10 * i + p);
      v[1] = 0.0f;
    }
  const std::vector<PatchType> pick{PatchType::Bottom, PatchType::Centered80};
  const DescriptorSet s = d.select(pick);
  CHECK(s.patch_types == pick);
  CHECK(s.count() == 2);
  CHECK(s.at(1).vector(0)[0] == 12.0f);
  CHECK(s.at(1).vector(1)[0] == 10.0f);
  const std::vector<PatchType> missing{PatchType::Right};
  CHECK_THROWS_AS(d.select(missing), Error);
}

TEST_CASE("validate_template") {
  Rng rng(11);
  SUBCASE("well-formed 10-minutiae template") {
    const SubjectRecord r = generate_reference(5, 10);
    CHECK(validate_template(r.minutiae_template).ok());
    CHECK(validate_template(r.texture_template).ok());
  }
  SUBCASE("alpha = 7.0 rad") {
    SubjectRecord r = generate_reference(5, 10);
    r.minutiae_template.minutiae[3].alpha = 7.0;
    const auto rep = validate_template(r.minutiae_template);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].find("alpha out of [0,2π)") != std::string::npos);
  }
  SUBCASE("descriptor count mismatch") {
    SubjectRecord r = generate_reference(5, 10);
    r.minutiae_template.minutiae.pop_back();
    CHECK_FALSE(validate_template(r.minutiae_template).ok());
  }
  SUBCASE("non-unit descriptor") {
    SubjectRecord r = generate_reference(5, 10);
    r.minutiae_template.descriptors.mutable_vector(2, 1)[0] += 0.01f;
    CHECK_FALSE(validate_template(r.minutiae_template).ok());
  }
  SUBCASE("field orientation out of range") {
    SubjectRecord r = generate_reference(5, 10);
    auto& f = r.minutiae_template.field;
    const auto k = static_cast<std::size_t>(std::find(f.mask.begin(), f.mask.end(), 1) - f.mask.begin());
    f.theta[k] = kPi;
    CHECK_FALSE(validate_template(r.minutiae_template).ok());
  }
  SUBCASE("unpaired latent virtual minutia") {
    DistortionSpec spec;
    const auto lat = derive_latent(generate_reference(6, 20), spec);
    TextureTemplate tt = lat.query.tt;
    REQUIRE(validate_template(tt).ok());
    tt.virtual_minutiae.erase(tt.virtual_minutiae.begin() + 1);
    tt.descriptors = tt.descriptors.select(tt.descriptors.patch_types);
    tt.descriptors.values.erase(tt.descriptors.values.begin(),
                                tt.descriptors.values.begin() + static_cast<std::ptrdiff_t>(tt.descriptors.stride()));
    const auto rep = validate_template(tt);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].find("unpaired virtual minutia") != std::string::npos);
  }
  SUBCASE("virtual minutia near border") {
    TextureTemplate tt = generate_reference(7, 5).texture_template;
    tt.virtual_minutiae[0].x = 3.0;
    CHECK_FALSE(validate_template(tt).ok());
  }
}

TEST_CASE("validation report JSON") {
  ValidationReport r;
  CHECK(r.to_json() == R"({"ok":true,"violations":[]})");
  r.violations.push_back("x");
  CHECK(r.to_json() == R"({"ok":false,"violations":["x"]})");
}

TEST_CASE("error codes") {
  CHECK(is_data_integrity_error(ErrorCode::MagicMismatch));
  CHECK(is_data_integrity_error(ErrorCode::TruncatedPayload));
  CHECK_FALSE(is_data_integrity_error(ErrorCode::InvalidArgument));
  const Error e(ErrorCode::EmptyDb, "nothing");
  CHECK(e.code() == ErrorCode::EmptyDb);
  CHECK(std::string(e.what()).find("nothing") != std::string::npos);
}

TEST_CASE("identification config file") {
  const auto cfg = parse_identification_config(
      "# test\nminutiae.top_n = 50\ntexture.third_order_threshold=0.3\nweights.tt = 1.5\ndirectional_mu = pi/12\n");
  CHECK(cfg.minutiae.top_n == 50);
  CHECK(cfg.texture.top_n == 200);
  CHECK(cfg.texture.third_order_threshold == 0.3);
  CHECK(cfg.weights.tt == 1.5);
  CHECK(cfg.minutiae.compat.directional.mu == doctest::Approx(kPi / 12.0));
  CHECK_THROWS_AS(parse_identification_config("bogus = 1"), Error);
  CHECK_THROWS_AS(parse_identification_config("weights.mt1 = -1"), Error);
  CHECK_THROWS_AS(parse_identification_config("minutiae.top_n = lots"), Error);
}
