#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lfid {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle into [0, 2π).
double wrap_two_pi(double a) noexcept;
/// Reduces an angle into [0, π).
double wrap_pi(double a) noexcept;
/// Reduces an angle into (−π, π].
double wrap_signed_pi(double a) noexcept;
/// Circular distance min(|Δ|, 2π − |Δ|) with Δ first reduced into [0, 2π).
double circular_distance(double a, double b) noexcept;

enum class MinutiaKind : std::uint8_t { True = 0, Virtual = 1 };

struct Minutia {
  double x = 0.0;
  double y = 0.0;
  double alpha = 0.0;  // direction in [0, 2π)
  MinutiaKind kind = MinutiaKind::True;

  friend bool operator==(const Minutia&, const Minutia&) = default;
};

/// Builds a minutia with its direction reduced into [0, 2π).
Minutia make_minutia(double x, double y, double alpha, MinutiaKind kind = MinutiaKind::True) noexcept;

/// Block-wise undirected ridge orientation. Row-major over blocks.
struct OrientationField {
  int block_size = 16;
  int width_blocks = 0;
  int height_blocks = 0;
  std::vector<double> theta;        // [0, π) where masked in
  std::vector<std::uint8_t> mask;   // 1 = inside ROI and valid

  OrientationField() = default;
  OrientationField(int block_size, int width_blocks, int height_blocks);

  std::size_t block_count() const noexcept {
    return static_cast<std::size_t>(width_blocks) * static_cast<std::size_t>(height_blocks);
  }
  std::size_t index(int bx, int by) const noexcept {
    return static_cast<std::size_t>(by) * static_cast<std::size_t>(width_blocks) + static_cast<std::size_t>(bx);
  }
  bool masked_in(int bx, int by) const noexcept { return mask[index(bx, by)] != 0; }
  double center_x(int bx) const noexcept { return (bx + 0.5) * block_size; }
  double center_y(int by) const noexcept { return (by + 0.5) * block_size; }
  std::size_t masked_count() const noexcept;

  /// Block containing pixel position (x, y), if it lies on the grid.
  std::optional<std::size_t> block_at(double x, double y) const noexcept;

  friend bool operator==(const OrientationField&, const OrientationField&) = default;
};

/// The fourteen patch windows: six centered scales and eight offset 96×96 windows.
enum class PatchType : std::uint8_t {
  Centered80 = 0,
  Centered96,
  Centered112,
  Centered128,
  Centered144,
  Centered160,
  TopLeft,
  TopRight,
  BottomRight,
  BottomLeft,
  Top,
  Right,
  Left,
  Bottom,
};

inline constexpr std::size_t kPatchTypeCount = 14;
inline constexpr std::size_t kDefaultDescriptorDim = 128;

std::string_view patch_type_name(PatchType t) noexcept;
std::optional<PatchType> parse_patch_type(std::string_view name) noexcept;
std::array<PatchType, kPatchTypeCount> all_patch_types() noexcept;

/// Non-owning view of one minutia's descriptor: |P| vectors of `dim` floats.
struct DescriptorView {
  std::span<const PatchType> patch_types;
  std::size_t dim = 0;
  std::span<const float> values;

  std::span<const float> vector(std::size_t p) const noexcept { return values.subspan(p * dim, dim); }
};

/// Owning descriptor of a single minutia.
struct Descriptor {
  std::vector<PatchType> patch_types;
  std::size_t dim = kDefaultDescriptorDim;
  std::vector<float> values;  // patch-major

  DescriptorView view() const noexcept { return {patch_types, dim, values}; }
  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

/// Descriptors of every minutia in a template. All share one patch-type set.
struct DescriptorSet {
  std::vector<PatchType> patch_types;
  std::size_t dim = kDefaultDescriptorDim;
  std::vector<float> values;  // count × |P| × dim

  DescriptorSet() = default;
  DescriptorSet(std::vector<PatchType> types, std::size_t dim, std::size_t count = 0);

  std::size_t stride() const noexcept { return patch_types.size() * dim; }
  std::size_t count() const noexcept { return stride() == 0 ? 0 : values.size() / stride(); }

  DescriptorView at(std::size_t i) const noexcept;
  std::span<float> mutable_vector(std::size_t i, std::size_t p) noexcept;
  void push_back(const Descriptor& d);

  /// Returns a copy keeping only `subset` (in that order). Throws MissingPatchType.
  DescriptorSet select(std::span<const PatchType> subset) const;

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

enum class TemplateVariant : std::uint8_t { Latent1 = 0, Latent2 = 1, Reference = 2 };
enum class TextureSide : std::uint8_t { Latent = 0, Reference = 1 };

struct MinutiaeTemplate {
  std::string source_id;
  TemplateVariant variant = TemplateVariant::Reference;
  double width = 0.0;   // image bounds in pixels
  double height = 0.0;
  std::vector<Minutia> minutiae;
  DescriptorSet descriptors;
  OrientationField field;

  friend bool operator==(const MinutiaeTemplate&, const MinutiaeTemplate&) = default;
};

struct TextureTemplate {
  std::string source_id;
  TextureSide side = TextureSide::Reference;
  double width = 0.0;
  double height = 0.0;
  int block_size = 16;
  std::vector<Minutia> virtual_minutiae;
  DescriptorSet descriptors;

  friend bool operator==(const TextureTemplate&, const TextureTemplate&) = default;
};

struct SubjectRecord {
  std::string subject_id;
  MinutiaeTemplate minutiae_template;
  TextureTemplate texture_template;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

/// Minutiae plus descriptors, the input to correspondence search. Both template
/// kinds provide one.
struct PointSet {
  std::span<const Minutia> minutiae;
  const DescriptorSet* descriptors = nullptr;
};

inline PointSet point_set(const MinutiaeTemplate& t) noexcept { return {t.minutiae, &t.descriptors}; }
inline PointSet point_set(const TextureTemplate& t) noexcept { return {t.virtual_minutiae, &t.descriptors}; }

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string to_json() const;
};

ValidationReport validate_template(const MinutiaeTemplate& t);
ValidationReport validate_template(const TextureTemplate& t);

}  // namespace lfid
