#include "lfid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "lfid/error.hpp"
#include "lfid/ingest.hpp"

namespace lfid {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

void random_unit_vector(Rng& rng, std::span<float> v) {
  for (float& x : v) x = static_cast<float>(rng.normal());
  normalize_in_place(v);
}

bool DistortionSpec::valid() const noexcept {
  auto frac = [](double f) { return f >= 0.0 && f <= 1.0; };
  return frac(occlusion_fraction) && frac(spurious_fraction) && position_jitter_sigma >= 0.0 &&
         angle_jitter_sigma >= 0.0 && descriptor_noise_sigma >= 0.0 && rigid_rotation > -kPi &&
         rigid_rotation <= kPi && std::isfinite(rigid_translation_x) && std::isfinite(rigid_translation_y);
}

DistortionSpec& DistortionSpec::centered_rigid(double rotation, double shift_x, double shift_y, double width,
                                               double height) {
  const double cx = width / 2.0;
  const double cy = height / 2.0;
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  rigid_rotation = rotation;
  rigid_translation_x = cx - (c * cx - s * cy) + shift_x;
  rigid_translation_y = cy - (s * cx + c * cy) + shift_y;
  return *this;
}

std::string DistortionSpec::to_json() const {
  nlohmann::ordered_json j;
  j["occlusion_fraction"] = occlusion_fraction;
  j["position_jitter_sigma"] = position_jitter_sigma;
  j["angle_jitter_sigma"] = angle_jitter_sigma;
  j["spurious_fraction"] = spurious_fraction;
  j["rigid_rotation"] = rigid_rotation;
  j["rigid_translation_x"] = rigid_translation_x;
  j["rigid_translation_y"] = rigid_translation_y;
  j["descriptor_noise_sigma"] = descriptor_noise_sigma;
  j["seed"] = seed;
  return j.dump(2);
}

DistortionSpec DistortionSpec::from_json(const std::string& text) {
  DistortionSpec s;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("distortion spec: ") + e.what());
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  try {
    get("occlusion_fraction", s.occlusion_fraction);
    get("position_jitter_sigma", s.position_jitter_sigma);
    get("angle_jitter_sigma", s.angle_jitter_sigma);
    get("spurious_fraction", s.spurious_fraction);
    get("rigid_rotation", s.rigid_rotation);
    get("rigid_translation_x", s.rigid_translation_x);
    get("rigid_translation_y", s.rigid_translation_y);
    get("descriptor_noise_sigma", s.descriptor_noise_sigma);
    get("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("distortion spec: ") + e.what());
  }
  if (!s.valid()) throw Error(ErrorCode::InvalidArgument, "distortion spec out of range");
  return s;
}

namespace {

// Doubled-angle field (cos 2θ, sin 2θ) ∝ quadratic polynomials in normalized coordinates.
struct FlowModel {
  std::array<double, 6> c{};
  std::array<double, 6> s{};
  double width = 1.0, height = 1.0;

  double theta(double x, double y) const noexcept {
    const double u = 2.0 * x / width - 1.0;
    const double v = 2.0 * y / height - 1.0;
    const std::array<double, 6> basis{1.0, u, v, u * u, u * v, v * v};
    double cc = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      cc += c[k] * basis[k];
      ss += s[k] * basis[k];
    }
    return wrap_pi(0.5 * std::atan2(ss, cc));
  }
};

FlowModel random_flow(Rng& rng, double width, double height) {
  FlowModel f;
  f.width = width;
  f.height = height;
  const double base = rng.uniform(0.0, kTwoPi);
  f.c[0] = std::cos(base);
  f.s[0] = std::sin(base);
  for (std::size_t k = 1; k < 6; ++k) {
    f.c[k] = rng.uniform(-0.8, 0.8);
    f.s[k] = rng.uniform(-0.8, 0.8);
  }
  return f;
}

void fill_random_descriptors(Rng& rng, DescriptorSet& d) {
  for (std::size_t i = 0; i < d.count(); ++i) {
    for (std::size_t p = 0; p < d.patch_types.size(); ++p) random_unit_vector(rng, d.mutable_vector(i, p));
  }
}

void noisy_copy(Rng& rng, std::span<const float> src, std::span<float> dst, double sigma) {
  if (sigma == 0.0) {
    std::copy(src.begin(), src.end(), dst.begin());
    return;
  }
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<float>(src[k] + sigma * rng.normal());
  normalize_in_place(dst);
}

void copy_descriptor(Rng& rng, const DescriptorSet& from, std::size_t i, DescriptorSet& to, std::size_t j,
                     double sigma) {
  const auto src = from.at(i);
  for (std::size_t p = 0; p < from.patch_types.size(); ++p) noisy_copy(rng, src.vector(p), to.mutable_vector(j, p), sigma);
}

void random_descriptor(Rng& rng, DescriptorSet& to, std::size_t j) {
  for (std::size_t p = 0; p < to.patch_types.size(); ++p) random_unit_vector(rng, to.mutable_vector(j, p));
}

}  // namespace

SubjectRecord generate_reference(std::uint64_t seed, std::size_t n_minutiae, const FieldSpec& spec,
                                 std::string subject_id) {
  if (n_minutiae < 1) throw Error(ErrorCode::InvalidArgument, "at least one minutia required");
  if (spec.block_size <= 0 || spec.width < 3.0 * spec.block_size || spec.height < 3.0 * spec.block_size) {
    throw Error(ErrorCode::InvalidArgument, "canvas must span at least three blocks");
  }
  if (subject_id.empty()) subject_id = "S" + std::to_string(seed);
  Rng rng(seed);
  const FlowModel flow = random_flow(rng, spec.width, spec.height);

  const double cx = spec.width * rng.uniform(0.48, 0.52);
  const double cy = spec.height * rng.uniform(0.48, 0.52);
  const double ax = spec.width * rng.uniform(0.36, 0.44);
  const double ay = spec.height * rng.uniform(0.36, 0.44);
  auto inside = [&](double x, double y, double shrink) {
    const double u = (x - cx) / (ax - shrink);
    const double v = (y - cy) / (ay - shrink);
    return u * u + v * v <= 1.0;
  };

  SubjectRecord rec;
  rec.subject_id = subject_id;
  auto& mt = rec.minutiae_template;
  mt.source_id = subject_id;
  mt.variant = TemplateVariant::Reference;
  mt.width = spec.width;
  mt.height = spec.height;
  mt.field = OrientationField(spec.block_size, static_cast<int>(spec.width / spec.block_size),
                              static_cast<int>(spec.height / spec.block_size));
  for (int by = 0; by < mt.field.height_blocks; ++by) {
    for (int bx = 0; bx < mt.field.width_blocks; ++bx) {
      const double x = mt.field.center_x(bx);
      const double y = mt.field.center_y(by);
      if (!inside(x, y, 0.0)) continue;
      const auto k = mt.field.index(bx, by);
      mt.field.mask[k] = 1;
      mt.field.theta[k] = flow.theta(x, y);
    }
  }

  const double sep2 = spec.min_separation * spec.min_separation;
  const std::size_t max_attempts = 2000 * n_minutiae;
  std::size_t attempts = 0;
  while (mt.minutiae.size() < n_minutiae) {
    if (++attempts > max_attempts) {
      throw Error(ErrorCode::PlacementFailure, "could not place " + std::to_string(n_minutiae) +
                                                   " minutiae with separation " + std::to_string(spec.min_separation));
    }
    const double x = rng.uniform(cx - ax, cx + ax);
    const double y = rng.uniform(cy - ay, cy + ay);
    if (!inside(x, y, spec.block_size / 2.0)) continue;
    const bool clear = std::all_of(mt.minutiae.begin(), mt.minutiae.end(), [&](const Minutia& m) {
      return (m.x - x) * (m.x - x) + (m.y - y) * (m.y - y) >= sep2;
    });
    if (!clear) continue;
    const double flip = (rng.next() & 1u) ? kPi : 0.0;
    mt.minutiae.push_back(make_minutia(x, y, flow.theta(x, y) + flip));
  }
  mt.descriptors = DescriptorSet(spec.patch_types, spec.descriptor_dim, n_minutiae);
  fill_random_descriptors(rng, mt.descriptors);

  auto& tt = rec.texture_template;
  tt.source_id = subject_id;
  tt.side = TextureSide::Reference;
  tt.width = spec.width;
  tt.height = spec.height;
  tt.block_size = spec.block_size;
  tt.virtual_minutiae = reference_virtual_minutiae(mt.field);
  tt.descriptors = DescriptorSet(spec.patch_types, spec.descriptor_dim, tt.virtual_minutiae.size());
  fill_random_descriptors(rng, tt.descriptors);
  return rec;
}

namespace {

struct LatentGeometry {
  Alignment to_reference;
  double cut_x = 0.0, cut_y = 0.0;  // occlusion half-plane normal (reference frame)
  double cut = -std::numeric_limits<double>::infinity();

  bool visible(double rx, double ry) const noexcept { return rx * cut_x + ry * cut_y > cut; }
};

OrientationField latent_field(const MinutiaeTemplate& ref, const LatentGeometry& g, double angle_sigma, Rng& rng) {
  const OrientationField& rf = ref.field;
  OrientationField f(rf.block_size, static_cast<int>(ref.width / rf.block_size),
                     static_cast<int>(ref.height / rf.block_size));
  for (int by = 0; by < f.height_blocks; ++by) {
    for (int bx = 0; bx < f.width_blocks; ++bx) {
      double rx, ry;
      g.to_reference.apply(f.center_x(bx), f.center_y(by), rx, ry);
      if (!g.visible(rx, ry)) continue;
      const auto idx = rf.block_at(rx, ry);
      if (!idx || !rf.mask[*idx]) continue;
      const double noise = angle_sigma > 0.0 ? angle_sigma * rng.normal() : 0.0;
      const auto k = f.index(bx, by);
      f.theta[k] = wrap_pi(rf.theta[*idx] - g.to_reference.delta_alpha + noise);
      f.mask[k] = 1;
    }
  }
  return f;
}

MinutiaeTemplate latent_minutiae(const SubjectRecord& ref, const LatentGeometry& g,
                                 const std::vector<std::uint32_t>& survivors, const DistortionSpec& spec,
                                 TemplateVariant variant, const std::string& id, Rng& rng) {
  const auto& rmt = ref.minutiae_template;
  MinutiaeTemplate t;
  t.source_id = id;
  t.variant = variant;
  t.width = rmt.width;
  t.height = rmt.height;
  t.field = latent_field(rmt, g, spec.angle_jitter_sigma, rng);

  const auto n_spurious =
      static_cast<std::size_t>(std::lround(spec.spurious_fraction * static_cast<double>(survivors.size())));
  t.descriptors = DescriptorSet(rmt.descriptors.patch_types, rmt.descriptors.dim, survivors.size() + n_spurious);

  for (std::size_t k = 0; k < survivors.size(); ++k) {
    Minutia m = g.to_reference.apply_inverse(rmt.minutiae[survivors[k]]);
    if (spec.position_jitter_sigma > 0.0) {
      m.x = std::clamp(m.x + spec.position_jitter_sigma * rng.normal(), 0.0, t.width);
      m.y = std::clamp(m.y + spec.position_jitter_sigma * rng.normal(), 0.0, t.height);
    }
    if (spec.angle_jitter_sigma > 0.0) m.alpha = wrap_two_pi(m.alpha + spec.angle_jitter_sigma * rng.normal());
    t.minutiae.push_back(m);
    copy_descriptor(rng, rmt.descriptors, survivors[k], t.descriptors, k, spec.descriptor_noise_sigma);
  }

  std::vector<std::size_t> roi_blocks;
  for (std::size_t k = 0; k < t.field.block_count(); ++k) {
    if (t.field.mask[k]) roi_blocks.push_back(k);
  }
  const double bs = t.field.block_size;
  for (std::size_t s = 0; s < n_spurious; ++s) {
    double x, y;
    if (roi_blocks.empty()) {
      x = rng.uniform(0.0, t.width);
      y = rng.uniform(0.0, t.height);
    } else {
      const std::size_t k = roi_blocks[rng.index(roi_blocks.size())];
      x = (static_cast<double>(k % t.field.width_blocks) + rng.uniform()) * bs;
      y = (static_cast<double>(k / t.field.width_blocks) + rng.uniform()) * bs;
    }
    t.minutiae.push_back(make_minutia(x, y, rng.uniform(0.0, kTwoPi)));
    random_descriptor(rng, t.descriptors, survivors.size() + s);
  }
  return t;
}

TextureTemplate latent_texture(const SubjectRecord& ref, const LatentGeometry& g, const OrientationField& field,
                               const DistortionSpec& spec, const std::string& id, Rng& rng) {
  const auto& rtt = ref.texture_template;
  const auto& rf = ref.minutiae_template.field;
  std::unordered_map<std::size_t, std::size_t> by_block;
  for (std::size_t i = 0; i < rtt.virtual_minutiae.size(); ++i) {
    if (const auto b = rf.block_at(rtt.virtual_minutiae[i].x, rtt.virtual_minutiae[i].y)) by_block[*b] = i;
  }

  TextureTemplate t;
  t.source_id = id;
  t.side = TextureSide::Latent;
  t.width = rtt.width;
  t.height = rtt.height;
  t.block_size = field.block_size;
  t.virtual_minutiae = latent_virtual_minutiae(field);
  t.descriptors = DescriptorSet(rtt.descriptors.patch_types, rtt.descriptors.dim, t.virtual_minutiae.size());
  for (std::size_t i = 0; i < t.virtual_minutiae.size(); ++i) {
    const Minutia r = g.to_reference.apply(t.virtual_minutiae[i]);
    const auto b = rf.block_at(r.x, r.y);
    const auto it = b ? by_block.find(*b) : by_block.end();
    // Only the member of the pair pointing the same way as the reference
    // virtual minutia sees the same patch.
    if (it != by_block.end() && circular_distance(r.alpha, rtt.virtual_minutiae[it->second].alpha) < kPi / 2.0) {
      copy_descriptor(rng, rtt.descriptors, it->second, t.descriptors, i, spec.descriptor_noise_sigma);
    } else {
      random_descriptor(rng, t.descriptors, i);
    }
  }
  return t;
}

}  // namespace

LatentSample derive_latent(const SubjectRecord& ref, const DistortionSpec& spec, std::string query_id) {
  if (!spec.valid()) throw Error(ErrorCode::InvalidArgument, "distortion spec out of range");
  if (query_id.empty()) query_id = ref.subject_id + "-L" + std::to_string(spec.seed);
  Rng rng(spec.seed);
  const auto& rmt = ref.minutiae_template;

  LatentGeometry g;
  g.to_reference = Alignment{spec.rigid_rotation, spec.rigid_translation_x, spec.rigid_translation_y};

  const std::size_t n = rmt.minutiae.size();
  const auto n_drop = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::lround(spec.occlusion_fraction * static_cast<double>(n))));
  const double psi = rng.uniform(0.0, kTwoPi);
  g.cut_x = std::cos(psi);
  g.cut_y = std::sin(psi);
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = rmt.minutiae[i].x * g.cut_x + rmt.minutiae[i].y * g.cut_y;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return proj[a] < proj[b]; });
  if (n_drop == n && n > 0) {
    g.cut = std::numeric_limits<double>::infinity();
  } else if (n_drop > 0) {
    g.cut = 0.5 * (proj[order[n_drop - 1]] + proj[order[n_drop]]);
  }
  std::vector<std::uint8_t> dropped(n, 0);
  for (std::size_t k = 0; k < n_drop; ++k) dropped[order[k]] = 1;

  std::vector<std::uint32_t> survivors;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (dropped[i]) continue;
    const Minutia m = g.to_reference.apply_inverse(rmt.minutiae[i]);
    if (m.x < 0.0 || m.y < 0.0 || m.x > rmt.width || m.y > rmt.height) continue;  // off the latent canvas
    survivors.push_back(i);
  }

  LatentSample out;
  out.subject_id = ref.subject_id;
  out.query.query_id = query_id;
  out.query.mt1 = latent_minutiae(ref, g, survivors, spec, TemplateVariant::Latent1, query_id, rng);
  out.query.mt2 = latent_minutiae(ref, g, survivors, spec, TemplateVariant::Latent2, query_id, rng);
  out.query.tt = latent_texture(ref, g, out.query.mt1.field, spec, query_id, rng);
  out.truth.alignment = g.to_reference;
  for (std::uint32_t k = 0; k < survivors.size(); ++k) out.truth.map.emplace_back(k, survivors[k]);
  return out;
}

std::string ground_truth_json(const LatentSample& sample) {
  nlohmann::ordered_json j;
  j["query_id"] = sample.query.query_id;
  j["subject_id"] = sample.subject_id;
  j["alignment"] = {{"delta_alpha", sample.truth.alignment.delta_alpha},
                    {"delta_x", sample.truth.alignment.delta_x},
                    {"delta_y", sample.truth.alignment.delta_y}};
  auto map = nlohmann::json::array();
  for (const auto& [l, r] : sample.truth.map) map.push_back({l, r});
  j["map"] = map;
  return j.dump(2);
}

}  // namespace lfid
