#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "lfid/error.hpp"
#include "lfid/matcher.hpp"
#include "lfid/synth.hpp"
#include "lfid/template_io.hpp"
#include "support.hpp"

using namespace lfid;

namespace {

std::vector<std::uint8_t> bytes_of(const SubjectRecord& r) {
  auto a = encode_template(r.minutiae_template);
  const auto b = encode_template(r.texture_template);
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

DistortionSpec mild(std::uint64_t seed) {
  DistortionSpec s;
  s.position_jitter_sigma = 2.0;
  s.angle_jitter_sigma = testing_support::rad(3.0);
  s.spurious_fraction = 0.1;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("rng") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) REQUIRE(a.normal() == b.normal());
  Rng c(6);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = c.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double n = c.normal();
    sum += n;
    sq += n * n;
  }
  CHECK(sum / 100000 == doctest::Approx(0.0).epsilon(0.02).scale(1.0));
  CHECK(sq / 100000 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("generate_reference") {
  SUBCASE("same seed, same bytes") { CHECK(bytes_of(generate_reference(42, 30)) == bytes_of(generate_reference(42, 30))); }
  SUBCASE("different seeds differ") { CHECK(bytes_of(generate_reference(42, 30)) != bytes_of(generate_reference(43, 30))); }
  SUBCASE("single minutia") {
    const auto r = generate_reference(1, 1);
    CHECK(r.minutiae_template.minutiae.size() == 1);
    CHECK(validate_template(r.minutiae_template).ok());
  }
  SUBCASE("seed sweep validates, separation and flow hold") {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto r = generate_reference(s, 40);
      REQUIRE(validate_template(r.minutiae_template).ok());
      REQUIRE(validate_template(r.texture_template).ok());
      const auto& ms = r.minutiae_template.minutiae;
      for (std::size_t i = 0; i < ms.size(); ++i)
        for (std::size_t j = i + 1; j < ms.size(); ++j) REQUIRE(std::hypot(ms[i].x - ms[j].x, ms[i].y - ms[j].y) >= 12.0);
      const auto& f = r.minutiae_template.field;
      for (const auto& m : ms) {
        const auto b = f.block_at(m.x, m.y);
        REQUIRE(b.has_value());
        REQUIRE(f.mask[*b]);
        // Direction follows the block flow up to the sub-block variation.
        REQUIRE(testing_support::orientation_error(wrap_pi(m.alpha), f.theta[*b]) < 0.35);
      }
    }
  }
  SUBCASE("unsatisfiable separation") {
    CHECK_THROWS_AS(generate_reference(3, 2000), Error);
    CHECK_THROWS_AS(generate_reference(3, 0), Error);
  }
}

TEST_CASE("distortion spec") {
  DistortionSpec s = mild(9);
  s.centered_rigid(0.5, 4, -3, 320, 320);
  CHECK(s.valid());
  const DistortionSpec back = DistortionSpec::from_json(s.to_json());
  CHECK(back.rigid_translation_x == s.rigid_translation_x);
  CHECK(back.seed == 9);
  CHECK(back.angle_jitter_sigma == s.angle_jitter_sigma);
  DistortionSpec bad;
  bad.occlusion_fraction = 1.5;
  CHECK_FALSE(bad.valid());
  CHECK_THROWS_AS(DistortionSpec::from_json(R"({"spurious_fraction": -0.1})"), Error);
  CHECK_THROWS_AS(DistortionSpec::from_json("not json"), Error);
  // The rotation is about the canvas center.
  const Alignment a{s.rigid_rotation, s.rigid_translation_x, s.rigid_translation_y};
  double x, y;
  a.apply(160, 160, x, y);
  CHECK(x == doctest::Approx(164.0));
  CHECK(y == doctest::Approx(157.0));
}

TEST_CASE("derive_latent") {
  const SubjectRecord ref = generate_reference(77, 50);
  SUBCASE("all-zero spec reproduces the reference") {
    const auto lat = derive_latent(ref, DistortionSpec{});
    CHECK(lat.query.mt1.minutiae == ref.minutiae_template.minutiae);
    CHECK(lat.query.mt2.minutiae == ref.minutiae_template.minutiae);
    CHECK(lat.query.mt1.descriptors == ref.minutiae_template.descriptors);
    CHECK(lat.query.mt1.field == ref.minutiae_template.field);
    REQUIRE(lat.truth.map.size() == 50);
    for (std::uint32_t k = 0; k < 50; ++k) CHECK(lat.truth.map[k] == std::pair{k, k});
  }
  SUBCASE("rigid only: latent is the inverse-transformed reference") {
    DistortionSpec s;
    s.centered_rigid(-2.0, 5, 8, 320, 320);
    const auto lat = derive_latent(ref, s);
    const Alignment t = lat.truth.alignment;
    CHECK(t.delta_alpha == s.rigid_rotation);
    CHECK(t.delta_x == s.rigid_translation_x);
    CHECK(t.delta_y == s.rigid_translation_y);
    for (std::size_t k = 0; k < lat.truth.map.size(); ++k) {
      const Minutia back = t.apply(lat.query.mt1.minutiae[k]);
      const Minutia& r = ref.minutiae_template.minutiae[lat.truth.map[k].second];
      REQUIRE(std::fabs(back.x - r.x) < 1e-9);
      REQUIRE(std::fabs(back.y - r.y) < 1e-9);
      REQUIRE(circular_distance(back.alpha, r.alpha) < 1e-9);
    }
  }
  SUBCASE("occlusion 0.4 on 50 minutiae leaves 30") {
    DistortionSpec s;
    s.occlusion_fraction = 0.4;
    s.seed = 3;
    const auto lat = derive_latent(ref, s);
    CHECK(lat.truth.map.size() == 30);
    CHECK(lat.query.mt1.minutiae.size() == 30);
    std::set<std::uint32_t> seen;
    for (const auto& [l, r] : lat.truth.map) CHECK(seen.insert(r).second);
    CHECK(lat.query.mt1.field.masked_count() < ref.minutiae_template.field.masked_count());
  }
  SUBCASE("spurious minutiae and independent templates") {
    DistortionSpec s = mild(4);
    s.spurious_fraction = 0.2;
    s.descriptor_noise_sigma = 0.1;
    const auto lat = derive_latent(ref, s);
    CHECK(lat.query.mt1.minutiae.size() == 60);
    CHECK(lat.query.mt2.minutiae.size() == 60);
    CHECK(lat.query.mt1.minutiae != lat.query.mt2.minutiae);
    CHECK(validate_template(lat.query.mt1).ok());
    CHECK(validate_template(lat.query.mt2).ok());
    CHECK(validate_template(lat.query.tt).ok());
    CHECK(lat.query.mt1.variant == TemplateVariant::Latent1);
    CHECK(lat.query.mt2.variant == TemplateVariant::Latent2);
    CHECK(lat.query.tt.side == TextureSide::Latent);
  }
  SUBCASE("deterministic") {
    DistortionSpec s = mild(11);
    s.occlusion_fraction = 0.3;
    s.centered_rigid(1.0, 2, 2, 320, 320);
    const auto a = derive_latent(ref, s), b = derive_latent(ref, s);
    CHECK(a.query.mt1 == b.query.mt1);
    CHECK(a.query.mt2 == b.query.mt2);
    CHECK(a.query.tt == b.query.tt);
    CHECK(a.truth.map == b.truth.map);
    CHECK(ground_truth_json(a) == ground_truth_json(b));
  }
  SUBCASE("validates over a seed sweep") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      DistortionSpec s = mild(seed);
      s.occlusion_fraction = 0.4;
      s.descriptor_noise_sigma = 0.1;
      s.centered_rigid(Rng(seed).uniform(-kPi, kPi), 6, -6, 320, 320);
      const auto lat = derive_latent(generate_reference(seed + 500, 40), s);
      REQUIRE(validate_template(lat.query.mt1).ok());
      REQUIRE(validate_template(lat.query.mt2).ok());
      REQUIRE(validate_template(lat.query.tt).ok());
    }
  }
  SUBCASE("invalid spec") {
    DistortionSpec s;
    s.spurious_fraction = 2.0;
    CHECK_THROWS_AS(derive_latent(ref, s), Error);
  }
}

TEST_CASE("matching a mildly distorted latent agrees with the ground truth") {
  std::size_t agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SubjectRecord ref = generate_reference(1000 + seed, 40);
    DistortionSpec s = mild(seed);
    s.centered_rigid(Rng(seed).uniform(-kPi, kPi), 5, 5, 320, 320);
    const auto lat = derive_latent(ref, s);
    const std::map<std::uint32_t, std::uint32_t> truth(lat.truth.map.begin(), lat.truth.map.end());
    const auto c = match_minutiae(point_set(lat.query.mt1), point_set(ref.minutiae_template), MatcherConfig::minutiae());
    for (const auto& p : c.pairs) {
      const auto it = truth.find(p.i1);
      if (it != truth.end() && it->second == p.i2) ++agree;
      ++total;
    }
  }
  REQUIRE(total > 0);
  const double rate = static_cast<double>(agree) / static_cast<double>(total);
  MESSAGE("ground-truth agreement " << rate);
  CHECK(rate >= 0.9);
}
