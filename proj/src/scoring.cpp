#include "lfid/scoring.hpp"

#include <cmath>
#include <complex>

#include "json.hpp"
#include "lfid/error.hpp"

namespace lfid {

void Alignment::apply(double x, double y, double& out_x, double& out_y) const noexcept {
  const double c = std::cos(delta_alpha);
  const double s = std::sin(delta_alpha);
  out_x = x * c - y * s + delta_x;
  out_y = x * s + y * c + delta_y;
}

Minutia Alignment::apply(const Minutia& m) const noexcept {
  Minutia out = m;
  apply(m.x, m.y, out.x, out.y);
  out.alpha = wrap_two_pi(m.alpha + delta_alpha);
  return out;
}

Minutia Alignment::apply_inverse(const Minutia& m) const noexcept {
  const double c = std::cos(delta_alpha);
  const double s = std::sin(delta_alpha);
  const double dx = m.x - delta_x;
  const double dy = m.y - delta_y;
  Minutia out = m;
  out.x = dx * c + dy * s;
  out.y = -dx * s + dy * c;
  out.alpha = wrap_two_pi(m.alpha - delta_alpha);
  return out;
}

double minutiae_similarity(const CorrespondenceSet& corr) noexcept {
  double s = 0.0;
  for (const auto& p : corr.pairs) s += p.sim;
  return s;
}

Alignment estimate_alignment(const CorrespondenceSet& corr, std::span<const Minutia> latent,
                             std::span<const Minutia> reference) {
  if (corr.empty()) throw Error(ErrorCode::EmptyCorrespondences, "alignment needs at least one correspondence");
  double ss = 0.0, sc = 0.0;
  for (const auto& p : corr.pairs) {
    const double d = reference[p.i2].alpha - latent[p.i1].alpha;
    ss += std::sin(d);
    sc += std::cos(d);
  }
  Alignment a;
  a.delta_alpha = wrap_signed_pi(std::atan2(ss, sc));
  const double c = std::cos(a.delta_alpha);
  const double s = std::sin(a.delta_alpha);
  double sx = 0.0, sy = 0.0;
  for (const auto& p : corr.pairs) {
    const Minutia& l = latent[p.i1];
    const Minutia& r = reference[p.i2];
    sx += r.x - l.x * c + l.y * s;
    sy += r.y - l.y * c - l.x * s;
  }
  const auto n = static_cast<double>(corr.size());
  a.delta_x = sx / n;
  a.delta_y = sy / n;
  return a;
}

double ridge_flow_similarity(const OrientationField& latent, const OrientationField& reference,
                             const Alignment& a) {
  std::complex<double> sum{0.0, 0.0};
  std::size_t k = 0;
  for (int by = 0; by < latent.height_blocks; ++by) {
    for (int bx = 0; bx < latent.width_blocks; ++bx) {
      if (!latent.masked_in(bx, by)) continue;
      double rx, ry;
      a.apply(latent.center_x(bx), latent.center_y(by), rx, ry);
      const auto idx = reference.block_at(rx, ry);
      if (!idx || !reference.mask[*idx]) continue;
      const double o1 = wrap_pi(latent.theta[latent.index(bx, by)] + a.delta_alpha);
      const double o2 = reference.theta[*idx];
      sum += std::polar(1.0, 2.0 * (o1 - o2));
      ++k;
    }
  }
  if (k == 0) return 0.0;
  return std::min(1.0, std::abs(sum) / static_cast<double>(k));
}

MinutiaeComparison minutiae_template_similarity(const MinutiaeTemplate& latent, const MinutiaeTemplate& reference,
                                                const MatcherConfig& cfg) {
  MinutiaeComparison out;
  if (latent.minutiae.empty() || reference.minutiae.empty()) return out;
  out.correspondences = match_minutiae(point_set(latent), point_set(reference), cfg);
  if (out.correspondences.empty()) return out;
  out.s_m = minutiae_similarity(out.correspondences);
  out.alignment = estimate_alignment(out.correspondences, latent.minutiae, reference.minutiae);
  out.s_o = ridge_flow_similarity(latent.field, reference.field, out.alignment);
  out.s_mt = out.s_m * out.s_o;
  return out;
}

TextureComparison texture_template_similarity(const TextureTemplate& latent, const TextureTemplate& reference,
                                              const MatcherConfig& cfg) {
  TextureComparison out;
  if (latent.virtual_minutiae.empty() || reference.virtual_minutiae.empty()) return out;
  out.correspondences = match_minutiae(point_set(latent), point_set(reference), cfg);
  out.s_tt = minutiae_similarity(out.correspondences);
  return out;
}

double fuse_scores(double s_mt1, double s_mt2, double s_tt, const FusionWeights& w) {
  if (w.mt1 < 0.0 || w.mt2 < 0.0 || w.tt < 0.0) throw Error(ErrorCode::InvalidArgument, "fusion weights must be >= 0");
  return w.mt1 * s_mt1 + w.mt2 * s_mt2 + w.tt * s_tt;
}

ScoreBreakdown compare(const LatentQuery& latent, const SubjectRecord& subject, const IdentificationConfig& cfg) {
  ScoreBreakdown s;
  const auto c1 = minutiae_template_similarity(latent.mt1, subject.minutiae_template, cfg.minutiae);
  const auto c2 = minutiae_template_similarity(latent.mt2, subject.minutiae_template, cfg.minutiae);
  const auto ct = texture_template_similarity(latent.tt, subject.texture_template, cfg.texture);
  s.s_mt1 = c1.s_mt;
  s.s_mt2 = c2.s_mt;
  s.s_tt = ct.s_tt;
  s.n_corr_1 = c1.correspondences.size();
  s.n_corr_2 = c2.correspondences.size();
  s.n_corr_tt = ct.correspondences.size();
  s.s_final = fuse_scores(s.s_mt1, s.s_mt2, s.s_tt, cfg.weights);
  return s;
}

std::string score_breakdown_json(const std::string& query_id, const std::string& subject_id,
                                 const ScoreBreakdown& s) {
  nlohmann::ordered_json j;
  j["query_id"] = query_id;
  j["subject_id"] = subject_id;
  j["s_mt1"] = s.s_mt1;
  j["s_mt2"] = s.s_mt2;
  j["s_tt"] = s.s_tt;
  j["s_final"] = s.s_final;
  j["n_corr_1"] = s.n_corr_1;
  j["n_corr_2"] = s.n_corr_2;
  j["n_corr_tt"] = s.n_corr_tt;
  return j.dump();
}

}  // namespace lfid
