#include "lfid/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "json.hpp"
#include "lfid/error.hpp"

namespace lfid {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::EmptyRoi: return "EmptyRoi";
    case ErrorCode::MissingPatchType: return "MissingPatchType";
    case ErrorCode::PatchSetMismatch: return "PatchSetMismatch";
    case ErrorCode::CoincidentMinutiae: return "CoincidentMinutiae";
    case ErrorCode::DegenerateTriplet: return "DegenerateTriplet";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::ZeroTensor: return "ZeroTensor";
    case ErrorCode::EmptyTemplate: return "EmptyTemplate";
    case ErrorCode::EmptyCorrespondences: return "EmptyCorrespondences";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::DuplicateSubject: return "DuplicateSubject";
    case ErrorCode::EmptyDb: return "EmptyDb";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::QueryMismatch: return "QueryMismatch";
  }
  return "Unknown";
}

bool is_data_integrity_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MagicMismatch:
    case ErrorCode::VersionMismatch:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::MalformedPayload:
    case ErrorCode::DuplicateSubject:
    case ErrorCode::PatchSetMismatch:
      return true;
    default:
      return false;
  }
}

double wrap_two_pi(double a) noexcept {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value rounds up to exactly 2π
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double wrap_pi(double a) noexcept {
  double r = std::fmod(a, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r = 0.0;
  return r;
}

double wrap_signed_pi(double a) noexcept {
  double r = wrap_two_pi(a);
  if (r > kPi) r -= kTwoPi;
  return r;
}

double circular_distance(double a, double b) noexcept {
  const double d = std::fabs(a - b);
  const double r = std::fmod(d, kTwoPi);
  return std::min(r, kTwoPi - r);
}

Minutia make_minutia(double x, double y, double alpha, MinutiaKind kind) noexcept {
  return Minutia{x, y, wrap_two_pi(alpha), kind};
}

OrientationField::OrientationField(int bs, int wb, int hb)
    : block_size(bs),
      width_blocks(wb),
      height_blocks(hb),
      theta(static_cast<std::size_t>(wb) * static_cast<std::size_t>(hb), 0.0),
      mask(static_cast<std::size_t>(wb) * static_cast<std::size_t>(hb), 0) {}

std::size_t OrientationField::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

std::optional<std::size_t> OrientationField::block_at(double x, double y) const noexcept {
  if (block_size <= 0 || !(x >= 0.0) || !(y >= 0.0)) return std::nullopt;
  const auto bx = static_cast<long long>(std::floor(x / block_size));
  const auto by = static_cast<long long>(std::floor(y / block_size));
  if (bx >= width_blocks || by >= height_blocks) return std::nullopt;
  return index(static_cast<int>(bx), static_cast<int>(by));
}

namespace {

constexpr std::array<std::string_view, kPatchTypeCount> kPatchNames = {
    "centered80", "centered96", "centered112", "centered128", "centered144",
    "centered160", "top_left", "top_right", "bottom_right", "bottom_left",
    "top", "right", "left", "bottom"};

}  // namespace

std::string_view patch_type_name(PatchType t) noexcept {
  const auto i = static_cast<std::size_t>(t);
  return i < kPatchNames.size() ? kPatchNames[i] : std::string_view("unknown");
}

std::optional<PatchType> parse_patch_type(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPatchNames.size(); ++i) {
    if (kPatchNames[i] == name) return static_cast<PatchType>(i);
  }
  return std::nullopt;
}

std::array<PatchType, kPatchTypeCount> all_patch_types() noexcept {
  std::array<PatchType, kPatchTypeCount> out{};
  for (std::size_t i = 0; i < kPatchTypeCount; ++i) out[i] = static_cast<PatchType>(i);
  return out;
}

DescriptorSet::DescriptorSet(std::vector<PatchType> types, std::size_t d, std::size_t count)
    : patch_types(std::move(types)), dim(d), values(count * patch_types.size() * d, 0.0f) {}

DescriptorView DescriptorSet::at(std::size_t i) const noexcept {
  return {patch_types, dim, std::span<const float>(values).subspan(i * stride(), stride())};
}

std::span<float> DescriptorSet::mutable_vector(std::size_t i, std::size_t p) noexcept {
  return std::span<float>(values).subspan(i * stride() + p * dim, dim);
}

void DescriptorSet::push_back(const Descriptor& d) {
  if (d.patch_types != patch_types || d.dim != dim || d.values.size() != stride()) {
    throw Error(ErrorCode::PatchSetMismatch, "descriptor does not match the template's patch-type set");
  }
  values.insert(values.end(), d.values.begin(), d.values.end());
}

DescriptorSet DescriptorSet::select(std::span<const PatchType> subset) const {
  std::vector<std::size_t> src;
  src.reserve(subset.size());
  for (PatchType t : subset) {
    const auto it = std::find(patch_types.begin(), patch_types.end(), t);
    if (it == patch_types.end()) {
      throw Error(ErrorCode::MissingPatchType, std::string(patch_type_name(t)) + " not present in descriptor set");
    }
    src.push_back(static_cast<std::size_t>(it - patch_types.begin()));
  }
  DescriptorSet out(std::vector<PatchType>(subset.begin(), subset.end()), dim, count());
  for (std::size_t i = 0; i < count(); ++i) {
    const auto view = at(i);
    for (std::size_t p = 0; p < src.size(); ++p) {
      const auto from = view.vector(src[p]);
      std::copy(from.begin(), from.end(), out.mutable_vector(i, p).begin());
    }
  }
  return out;
}

std::string ValidationReport::to_json() const {
  nlohmann::json j;
  j["ok"] = ok();
  j["violations"] = violations;
  return j.dump();
}

namespace {

std::string fmt_index(std::string_view what, std::size_t i) {
  return std::string(what) + " #" + std::to_string(i);
}

void check_minutiae(const std::vector<Minutia>& ms, double width, double height, MinutiaKind expected,
                    std::vector<std::string>& out) {
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const Minutia& m = ms[i];
    if (!std::isfinite(m.alpha) || m.alpha < 0.0 || m.alpha >= kTwoPi) {
      out.push_back(fmt_index("alpha out of [0,2π) at minutia", i));
    }
    if (!std::isfinite(m.x) || !std::isfinite(m.y) || m.x < 0.0 || m.y < 0.0 || m.x > width || m.y > height) {
      out.push_back(fmt_index("location outside image bounds at minutia", i));
    }
    if (m.kind != expected) {
      out.push_back(fmt_index("unexpected minutia kind at minutia", i));
    }
  }
}

void check_descriptors(const DescriptorSet& d, std::size_t n, std::vector<std::string>& out) {
  if (d.patch_types.empty()) {
    if (n > 0) out.emplace_back("descriptor set has no patch types");
    return;
  }
  std::set<PatchType> unique(d.patch_types.begin(), d.patch_types.end());
  if (unique.size() != d.patch_types.size()) out.emplace_back("duplicate patch type in descriptor set");
  if (d.dim == 0) {
    out.emplace_back("descriptor dimension is zero");
    return;
  }
  if (d.values.size() % d.stride() != 0) {
    out.emplace_back("descriptor payload is not a whole number of descriptors");
    return;
  }
  if (d.count() != n) {
    out.push_back("descriptor count " + std::to_string(d.count()) + " != minutiae count " + std::to_string(n));
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto view = d.at(i);
    for (std::size_t p = 0; p < d.patch_types.size(); ++p) {
      double sq = 0.0;
      for (float v : view.vector(p)) sq += static_cast<double>(v) * v;
      if (!(std::fabs(std::sqrt(sq) - 1.0) <= 1e-6)) {
        out.push_back(fmt_index("descriptor not unit norm at minutia", i) + " patch " +
                      std::string(patch_type_name(d.patch_types[p])));
      }
    }
  }
}

}  // namespace

ValidationReport validate_template(const MinutiaeTemplate& t) {
  ValidationReport r;
  check_minutiae(t.minutiae, t.width, t.height, MinutiaKind::True, r.violations);
  check_descriptors(t.descriptors, t.minutiae.size(), r.violations);
  const auto& f = t.field;
  if (f.block_size <= 0) r.violations.emplace_back("orientation field block size must be positive");
  if (f.width_blocks < 0 || f.height_blocks < 0 || f.theta.size() != f.block_count() ||
      f.mask.size() != f.block_count()) {
    r.violations.emplace_back("orientation field dimensions inconsistent");
  } else {
    for (std::size_t k = 0; k < f.block_count(); ++k) {
      if (f.mask[k] && !(f.theta[k] >= 0.0 && f.theta[k] < kPi)) {
        r.violations.push_back(fmt_index("orientation out of [0,π) at block", k));
      }
    }
  }
  return r;
}

ValidationReport validate_template(const TextureTemplate& t) {
  ValidationReport r;
  const auto& vm = t.virtual_minutiae;
  check_minutiae(vm, t.width, t.height, MinutiaKind::Virtual, r.violations);
  check_descriptors(t.descriptors, vm.size(), r.violations);
  const double margin = t.block_size;
  for (std::size_t i = 0; i < vm.size(); ++i) {
    if (vm[i].x < margin || vm[i].y < margin || vm[i].x > t.width - margin || vm[i].y > t.height - margin) {
      r.violations.push_back(fmt_index("virtual minutia within one block of the border at", i));
    }
  }
  if (t.side == TextureSide::Latent) {
    // Pairs are (x, y, α) and (x, y, α + π); match each minutia with a partner once.
    std::vector<bool> used(vm.size(), false);
    for (std::size_t i = 0; i < vm.size(); ++i) {
      if (used[i]) continue;
      bool found = false;
      for (std::size_t j = i + 1; j < vm.size(); ++j) {
        if (used[j] || vm[j].x != vm[i].x || vm[j].y != vm[i].y) continue;
        if (std::fabs(circular_distance(vm[i].alpha, vm[j].alpha) - kPi) <= 1e-9) {
          used[i] = used[j] = true;
          found = true;
          break;
        }
      }
      if (!found) r.violations.push_back(fmt_index("unpaired virtual minutia", i));
    }
  }
  return r;
}

}  // namespace lfid
