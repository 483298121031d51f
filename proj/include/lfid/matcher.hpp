#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lfid/core.hpp"
#include "lfid/descriptor.hpp"

namespace lfid {

/// Parameters of the truncated sigmoid Z(v) = 1 / (1 + exp(−τ(v − μ))) for v ≤ t, else 0.
struct SigmoidParams {
  double mu = 0.0;
  double tau = 0.0;
  double t = 0.0;
};

inline constexpr SigmoidParams kEuclideanSigmoid{15.0, -1.0 / 5.0, 40.0};
inline constexpr SigmoidParams kDirectionalSigmoid{1.0 / 12.0, -15.0, kPi / 4.0};
/// Alternative reading of the directional midpoint as π/12 rather than 1/12 rad.
inline constexpr SigmoidParams kDirectionalSigmoidPiOver12{kPi / 12.0, -15.0, kPi / 4.0};

struct CompatibilityParams {
  SigmoidParams euclidean = kEuclideanSigmoid;
  SigmoidParams directional = kDirectionalSigmoid;
};

struct MatcherConfig {
  std::size_t top_n = 120;
  double second_order_threshold = 0.2;  // relative to max(Y)
  double third_order_threshold = 0.1;   // relative to max(Y)
  CompatibilityParams compat;
  int max_iterations = 100;
  double tolerance = 1e-6;

  static MatcherConfig minutiae() { return {}; }
  static MatcherConfig texture() {
    MatcherConfig c;
    c.top_n = 200;
    return c;
  }
};

double truncated_sigmoid(double v, const SigmoidParams& p) noexcept;

/// (d, θ_i, θ_j, θ_ij) of an ordered minutiae pair.
struct PairFeature {
  double d = 0.0;
  double theta_i = 0.0;
  double theta_j = 0.0;
  double theta_ij = 0.0;
};

/// Throws CoincidentMinutiae when the two locations coincide.
PairFeature pair_feature(const Minutia& mi, const Minutia& mj);

/// Side lengths, minutia-to-side angles and interior angles per vertex, in the
/// vertex order of the triangle.
struct TripletFeature {
  std::array<double, 3> d{};
  std::array<double, 3> theta{};
  std::array<double, 3> phi{};
};

/// Feature with vertices in counter-clockwise order starting from `mi`. Throws
/// DegenerateTriplet for coincident or collinear vertices.
TripletFeature triplet_feature(const Minutia& mi, const Minutia& mj, const Minutia& mk);

/// Feature with vertices taken in the given order (no reordering). Returns false
/// for degenerate triangles.
bool ordered_triplet_feature(const Minutia& a, const Minutia& b, const Minutia& c, TripletFeature& out) noexcept;

/// Dense symmetric N × N compatibility matrix; zero diagonal.
struct H2Matrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t a, std::size_t b) const noexcept { return values[a * n + b]; }
  bool all_zero() const noexcept;
};

/// Sparse symmetric third-order tensor. One entry per unordered triple (a < b < c).
struct H3Tensor {
  struct Entry {
    std::uint32_t a = 0, b = 0, c = 0;
    double value = 0.0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };
  std::size_t n = 0;
  std::vector<Entry> entries;

  /// Value at any index permutation; 0 when absent.
  double at(std::size_t i, std::size_t j, std::size_t k) const noexcept;
};

/// Compatibility of two candidate pairs a = (i1, i2), b = (j1, j2). Zero when
/// they share a minutia on either side.
double pair_compatibility(const CandidatePair& a, const CandidatePair& b, std::span<const Minutia> latent,
                          std::span<const Minutia> reference, const CompatibilityParams& p) noexcept;

/// Compatibility of three candidate pairs (index order irrelevant).
double triplet_compatibility(const CandidatePair& a, const CandidatePair& b, const CandidatePair& c,
                             std::span<const Minutia> latent, std::span<const Minutia> reference,
                             const CompatibilityParams& p) noexcept;

H2Matrix build_h2(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p = {});
H3Tensor build_h3(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p = {});

struct PowerIterationResult {
  std::vector<double> y;
  int iterations = 0;
  bool converged = false;
};

/// Y ← H·Y / ‖H·Y‖₂ from the uniform positive start. Throws ZeroMatrix.
PowerIterationResult power_iteration_2(const H2Matrix& h, int max_iterations = 100, double tolerance = 1e-6);
/// Y_i ← Σ_{j,k} H_ijk Y_j Y_k, then normalize. Throws ZeroTensor.
PowerIterationResult power_iteration_3(const H3Tensor& h, int max_iterations = 100, double tolerance = 1e-6);

enum class MatchStage : std::uint8_t { SecondOrder = 0, ThirdOrder = 1 };

struct CorrespondenceSet {
  std::vector<CandidatePair> pairs;  // in acceptance order
  MatchStage stage = MatchStage::SecondOrder;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  bool is_one_to_one() const;
};

/// Greedy one-to-one selection in descending Y (ties by candidate index) while
/// the remaining maximum exceeds `threshold`.
CorrespondenceSet discretize(std::span<const double> y, std::span<const CandidatePair> pairs, double threshold);

/// Second-order objective Σ_{a,b} H_ab over the selected candidates.
double second_order_objective(const H2Matrix& h, std::span<const std::size_t> selected) noexcept;

/// Full correspondence pipeline: similarity matrix, top-N candidates, second-order
/// power iteration + discretization, then third-order refinement on the survivors
/// (skipped with fewer than three). Throws EmptyTemplate.
CorrespondenceSet match_minutiae(const PointSet& latent, const PointSet& reference, const MatcherConfig& cfg);

struct MatchTrace {
  std::vector<CandidatePair> candidates;
  H2Matrix h2;
  std::vector<double> y2;
  CorrespondenceSet second_order;
  CorrespondenceSet result;
};

/// As match_minutiae, also returning the intermediate stages.
MatchTrace match_minutiae_traced(const PointSet& latent, const PointSet& reference, const MatcherConfig& cfg);

}  // namespace lfid
