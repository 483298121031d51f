#pragma once
// Test helpers and independent oracles. Nothing here calls into the code under
// test for the quantity being checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "lfid/core.hpp"
#include "lfid/descriptor.hpp"
#include "lfid/ingest.hpp"
#include "lfid/synth.hpp"

namespace testing_support {

inline double sigmoid_oracle(double v, double mu, double tau, double t) {
  if (v > t) return 0.0;
  return 1.0 / (1.0 + std::exp(-tau * (v - mu)));
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Smallest angle between two undirected orientations.
inline double orientation_error(double a, double b) {
  double d = std::fmod(std::fabs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

/// Sinusoidal grating whose ridges run along `theta` (image coordinates, y down).
inline lfid::GrayImage grating(int w, int h, double theta, double period = 9.0, double amplitude = 100.0,
                               double phase = 0.0) {
  lfid::GrayImage img(w, h, 0);
  const double nx = -std::sin(theta), ny = std::cos(theta);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = x * nx + y * ny;
      const double v = 128.0 + amplitude * std::cos(2.0 * std::numbers::pi * s / period + phase);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return img;
}

/// Exact quarter turn about the center of a square, odd-sized image: the content
/// that pointed along +y points along +x afterwards.
inline lfid::GrayImage quarter_turn(const lfid::GrayImage& src) {
  const int n = src.width;
  const int c = (n - 1) / 2;
  lfid::GrayImage out(n, n, 0);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) out.at(u, v) = src.at(2 * c - v, u);
  return out;
}

/// Best Σ_{a≠b∈S} H_ab over all one-to-one subsets S of the candidates, by
/// exhaustive enumeration.
inline double brute_force_s2(const std::vector<double>& h, std::size_t n,
                             const std::vector<lfid::CandidatePair>& pairs) {
  double best = 0.0;
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t next) {
    double s = 0.0;
    for (std::size_t a : chosen)
      for (std::size_t b : chosen)
        if (a != b) s += h[a * n + b];
    best = std::max(best, s);
    for (std::size_t k = next; k < n; ++k) {
      const bool ok = std::none_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
        return pairs[c].i1 == pairs[k].i1 || pairs[c].i2 == pairs[k].i2;
      });
      if (!ok) continue;
      chosen.push_back(k);
      rec(k + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return best;
}

inline bool one_to_one(const std::vector<lfid::CandidatePair>& pairs) {
  for (std::size_t a = 0; a < pairs.size(); ++a)
    for (std::size_t b = a + 1; b < pairs.size(); ++b)
      if (pairs[a].i1 == pairs[b].i1 || pairs[a].i2 == pairs[b].i2) return false;
  return true;
}

/// Random valid minutiae template with random shape parameters.
inline lfid::MinutiaeTemplate random_minutiae_template(lfid::Rng& rng) {
  using namespace lfid;
  MinutiaeTemplate t;
  t.source_id = "T" + std::to_string(rng.next() % 100000);
  t.variant = static_cast<TemplateVariant>(rng.index(3));
  t.width = rng.uniform(64.0, 800.0);
  t.height = rng.uniform(64.0, 800.0);
  const std::size_t n = rng.index(40);
  for (std::size_t i = 0; i < n; ++i) {
    t.minutiae.push_back(make_minutia(rng.uniform(0.0, t.width), rng.uniform(0.0, t.height), rng.uniform(0.0, kTwoPi)));
  }
  auto all = all_patch_types();
  std::vector<PatchType> types;
  for (auto p : all)
    if (rng.uniform() < 0.3) types.push_back(p);
  if (types.empty()) types.push_back(PatchType::Centered80);
  t.descriptors = DescriptorSet(types, 1 + rng.index(64), n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < types.size(); ++p) random_unit_vector(rng, t.descriptors.mutable_vector(i, p));
  const int bs = 8 + static_cast<int>(rng.index(17));
  t.field = OrientationField(bs, 1 + static_cast<int>(rng.index(30)), 1 + static_cast<int>(rng.index(30)));
  for (std::size_t k = 0; k < t.field.block_count(); ++k) {
    if (rng.uniform() < 0.6) {
      t.field.mask[k] = 1;
      t.field.theta[k] = wrap_pi(rng.uniform(0.0, kPi));
    }
  }
  return t;
}

inline lfid::TextureTemplate random_texture_template(lfid::Rng& rng) {
  using namespace lfid;
  TextureTemplate t;
  t.source_id = "X" + std::to_string(rng.next() % 100000);
  t.side = static_cast<TextureSide>(rng.index(2));
  t.block_size = 16;
  t.width = 320;
  t.height = 320;
  const std::size_t n = rng.index(20);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(16.0, 304.0), y = rng.uniform(16.0, 304.0), a = rng.uniform(0.0, kPi);
    t.virtual_minutiae.push_back(make_minutia(x, y, a, MinutiaKind::Virtual));
    if (t.side == TextureSide::Latent) t.virtual_minutiae.push_back(make_minutia(x, y, a + kPi, MinutiaKind::Virtual));
  }
  t.descriptors = DescriptorSet({PatchType::Centered80, PatchType::TopLeft}, 16, t.virtual_minutiae.size());
  for (std::size_t i = 0; i < t.virtual_minutiae.size(); ++i)
    for (std::size_t p = 0; p < 2; ++p) random_unit_vector(rng, t.descriptors.mutable_vector(i, p));
  return t;
}

}  // namespace testing_support
