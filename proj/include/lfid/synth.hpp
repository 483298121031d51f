#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lfid/core.hpp"
#include "lfid/descriptor.hpp"
#include "lfid/scoring.hpp"

namespace lfid {

/// Seeded generator with platform-independent uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box–Muller).
  double normal();
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fills `v` with a uniformly distributed unit vector.
void random_unit_vector(Rng& rng, std::span<float> v);

struct FieldSpec {
  double width = 320.0;
  double height = 320.0;
  int block_size = 16;
  double min_separation = 12.0;
  std::vector<PatchType> patch_types = PatchTypeCatalog::standard().selected;
  std::size_t descriptor_dim = kDefaultDescriptorDim;
};

struct DistortionSpec {
  double occlusion_fraction = 0.0;
  double position_jitter_sigma = 0.0;   // pixels
  double angle_jitter_sigma = 0.0;      // radians
  double spurious_fraction = 0.0;
  double rigid_rotation = 0.0;          // latent → reference, (−π, π]
  double rigid_translation_x = 0.0;
  double rigid_translation_y = 0.0;
  double descriptor_noise_sigma = 0.0;  // per component, before re-normalization
  std::uint64_t seed = 0;

  bool valid() const noexcept;

  /// Sets the rigid part to a rotation about the canvas center followed by a shift.
  DistortionSpec& centered_rigid(double rotation, double shift_x, double shift_y, double width, double height);

  std::string to_json() const;
  static DistortionSpec from_json(const std::string& text);
};

struct GroundTruth {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> map;  // latent index → reference index
  Alignment alignment;
};

struct LatentSample {
  std::string subject_id;
  LatentQuery query;
  GroundTruth truth;  // shared by both minutiae templates
};

/// Smooth doubled-angle polynomial ridge flow inside an elliptical ROI, minutiae
/// at least `min_separation` apart with directions along the flow (± π), and
/// random unit descriptors. Throws PlacementFailure.
SubjectRecord generate_reference(std::uint64_t seed, std::size_t n_minutiae, const FieldSpec& spec = {},
                                 std::string subject_id = {});

/// Latent templates derived from a reference: rigid transform, half-plane
/// occlusion, jitter, spurious minutiae, descriptor noise. The two minutiae
/// templates draw their noise independently.
LatentSample derive_latent(const SubjectRecord& ref, const DistortionSpec& spec, std::string query_id = {});

std::string ground_truth_json(const LatentSample& sample);

}  // namespace lfid
