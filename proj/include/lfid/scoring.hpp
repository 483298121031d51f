#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "lfid/core.hpp"
#include "lfid/matcher.hpp"

namespace lfid {

/// Rigid latent → reference transform: p_r = R(delta_alpha) · p_l + (delta_x, delta_y).
struct Alignment {
  double delta_alpha = 0.0;  // (−π, π]
  double delta_x = 0.0;
  double delta_y = 0.0;

  /// Maps a latent point into the reference frame.
  void apply(double x, double y, double& out_x, double& out_y) const noexcept;
  /// Maps a latent minutia (location and direction) into the reference frame.
  Minutia apply(const Minutia& m) const noexcept;
  /// Maps a reference minutia back into the latent frame.
  Minutia apply_inverse(const Minutia& m) const noexcept;
};

/// Sum of descriptor similarities over the correspondences.
double minutiae_similarity(const CorrespondenceSet& corr) noexcept;

/// Circular mean of (α_r − α_l) and mean translation residual. Throws
/// EmptyCorrespondences.
Alignment estimate_alignment(const CorrespondenceSet& corr, std::span<const Minutia> latent,
                             std::span<const Minutia> reference);

/// (1/K) |Σ exp(2i(O_l + Δα − O_r))| over the K masked latent blocks whose
/// aligned centers fall on masked reference blocks; 0 when K = 0.
double ridge_flow_similarity(const OrientationField& latent, const OrientationField& reference,
                             const Alignment& a);

struct FusionWeights {
  double mt1 = 1.0;
  double mt2 = 1.0;
  double tt = 2.0;
};

struct IdentificationConfig {
  MatcherConfig minutiae = MatcherConfig::minutiae();
  MatcherConfig texture = MatcherConfig::texture();
  FusionWeights weights;
};

struct MinutiaeComparison {
  double s_mt = 0.0;
  double s_m = 0.0;
  double s_o = 0.0;
  Alignment alignment;
  CorrespondenceSet correspondences;
};

/// S_MT = S_M · S_O. Zero when no correspondence survives.
MinutiaeComparison minutiae_template_similarity(const MinutiaeTemplate& latent, const MinutiaeTemplate& reference,
                                                const MatcherConfig& cfg);

struct TextureComparison {
  double s_tt = 0.0;
  CorrespondenceSet correspondences;
};

/// Sum of descriptor similarities of matched virtual minutiae. Zero for an empty
/// template on either side.
TextureComparison texture_template_similarity(const TextureTemplate& latent, const TextureTemplate& reference,
                                              const MatcherConfig& cfg);

double fuse_scores(double s_mt1, double s_mt2, double s_tt, const FusionWeights& w);

struct ScoreBreakdown {
  double s_mt1 = 0.0;
  double s_mt2 = 0.0;
  double s_tt = 0.0;
  double s_final = 0.0;
  std::size_t n_corr_1 = 0;
  std::size_t n_corr_2 = 0;
  std::size_t n_corr_tt = 0;

  friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;
};

/// Query side of one search: two latent minutiae templates and a texture template.
struct LatentQuery {
  std::string query_id;
  MinutiaeTemplate mt1;
  MinutiaeTemplate mt2;
  TextureTemplate tt;
};

ScoreBreakdown compare(const LatentQuery& latent, const SubjectRecord& subject, const IdentificationConfig& cfg);

/// One JSON object (single line) describing a latent × subject comparison.
std::string score_breakdown_json(const std::string& query_id, const std::string& subject_id,
                                 const ScoreBreakdown& s);

}  // namespace lfid
