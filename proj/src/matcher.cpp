#include "lfid/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "lfid/error.hpp"
#include "lfid/kernels.hpp"

namespace lfid {

double truncated_sigmoid(double v, const SigmoidParams& p) noexcept {
  if (v > p.t) return 0.0;
  return 1.0 / (1.0 + std::exp(-p.tau * (v - p.mu)));
}

PairFeature pair_feature(const Minutia& mi, const Minutia& mj) {
  const double dx = mj.x - mi.x;
  const double dy = mj.y - mi.y;
  const double d = std::hypot(dx, dy);
  if (d == 0.0) throw Error(ErrorCode::CoincidentMinutiae, "pair feature of coincident minutiae");
  const double phi = std::atan2(dy, dx);
  return {d, wrap_two_pi(mi.alpha - phi), wrap_two_pi(mj.alpha - phi), wrap_two_pi(mi.alpha - mj.alpha)};
}

bool ordered_triplet_feature(const Minutia& a, const Minutia& b, const Minutia& c, TripletFeature& out) noexcept {
  const Minutia* v[3] = {&a, &b, &c};
  double ex[3], ey[3];
  double longest = 0.0;
  for (int p = 0; p < 3; ++p) {
    const Minutia& from = *v[p];
    const Minutia& to = *v[(p + 1) % 3];
    ex[p] = to.x - from.x;
    ey[p] = to.y - from.y;
    out.d[p] = std::hypot(ex[p], ey[p]);
    if (out.d[p] == 0.0) return false;
    longest = std::max(longest, out.d[p]);
  }
  const double cross = ex[0] * ey[2] - ey[0] * ex[2];
  if (std::fabs(cross) <= 1e-9 * longest * longest) return false;
  for (int p = 0; p < 3; ++p) {
    out.theta[p] = wrap_two_pi(v[p]->alpha - std::atan2(ey[p], ex[p]));
    // Interior angle between the outgoing side and the reversed incoming side.
    const int q = (p + 2) % 3;
    const double ix = -ex[q];
    const double iy = -ey[q];
    out.phi[p] = std::atan2(std::fabs(ex[p] * iy - ey[p] * ix), ex[p] * ix + ey[p] * iy);
  }
  return true;
}

namespace {

double orientation(const Minutia& a, const Minutia& b, const Minutia& c) noexcept {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

}  // namespace

TripletFeature triplet_feature(const Minutia& mi, const Minutia& mj, const Minutia& mk) {
  TripletFeature f;
  const bool ccw = orientation(mi, mj, mk) > 0.0;
  const bool ok = ccw ? ordered_triplet_feature(mi, mj, mk, f) : ordered_triplet_feature(mi, mk, mj, f);
  if (!ok) throw Error(ErrorCode::DegenerateTriplet, "coincident or collinear minutiae");
  return f;
}

bool H2Matrix::all_zero() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double H3Tensor::at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
  std::array<std::size_t, 3> key{i, j, k};
  std::sort(key.begin(), key.end());
  const auto it = std::lower_bound(entries.begin(), entries.end(), key, [](const Entry& e, const auto& k3) {
    return std::tie(e.a, e.b, e.c) < std::make_tuple(static_cast<std::uint32_t>(k3[0]),
                                                      static_cast<std::uint32_t>(k3[1]),
                                                      static_cast<std::uint32_t>(k3[2]));
  });
  if (it != entries.end() && it->a == key[0] && it->b == key[1] && it->c == key[2]) return it->value;
  return 0.0;
}

double pair_compatibility(const CandidatePair& a, const CandidatePair& b, std::span<const Minutia> latent,
                          std::span<const Minutia> reference, const CompatibilityParams& p) noexcept {
  if (a.i1 == b.i1 || a.i2 == b.i2) return 0.0;
  const Minutia& la = latent[a.i1];
  const Minutia& lb = latent[b.i1];
  const Minutia& ra = reference[a.i2];
  const Minutia& rb = reference[b.i2];
  if ((la.x == lb.x && la.y == lb.y) || (ra.x == rb.x && ra.y == rb.y)) return 0.0;
  const PairFeature fl = pair_feature(la, lb);
  const PairFeature fr = pair_feature(ra, rb);
  double h = truncated_sigmoid(std::fabs(fl.d - fr.d), p.euclidean);
  if (h == 0.0) return 0.0;
  for (const auto& [tl, tr] : {std::pair{fl.theta_i, fr.theta_i}, std::pair{fl.theta_j, fr.theta_j},
                              std::pair{fl.theta_ij, fr.theta_ij}}) {
    h *= truncated_sigmoid(circular_distance(tl, tr), p.directional);
    if (h == 0.0) return 0.0;
  }
  return h;
}

double triplet_compatibility(const CandidatePair& a, const CandidatePair& b, const CandidatePair& c,
                             std::span<const Minutia> latent, std::span<const Minutia> reference,
                             const CompatibilityParams& p) noexcept {
  if (a.i1 == b.i1 || a.i1 == c.i1 || b.i1 == c.i1) return 0.0;
  if (a.i2 == b.i2 || a.i2 == c.i2 || b.i2 == c.i2) return 0.0;
  std::array<const CandidatePair*, 3> v{&a, &b, &c};
  std::sort(v.begin(), v.end(), [](const CandidatePair* x, const CandidatePair* y) { return x->i1 < y->i1; });
  // Counter-clockwise on the latent side; the reference takes the induced order.
  if (orientation(latent[v[0]->i1], latent[v[1]->i1], latent[v[2]->i1]) < 0.0) std::swap(v[1], v[2]);

  TripletFeature fl, fr;
  if (!ordered_triplet_feature(latent[v[0]->i1], latent[v[1]->i1], latent[v[2]->i1], fl)) return 0.0;
  if (!ordered_triplet_feature(reference[v[0]->i2], reference[v[1]->i2], reference[v[2]->i2], fr)) return 0.0;

  double h = 1.0;
  for (int q = 0; q < 3; ++q) {
    h *= truncated_sigmoid(std::fabs(fl.d[q] - fr.d[q]), p.euclidean);
    if (h == 0.0) return 0.0;
  }
  for (int q = 0; q < 3; ++q) {
    h *= truncated_sigmoid(circular_distance(fl.theta[q], fr.theta[q]), p.directional);
    if (h == 0.0) return 0.0;
    h *= truncated_sigmoid(circular_distance(fl.phi[q], fr.phi[q]), p.directional);
    if (h == 0.0) return 0.0;
  }
  return h;
}

H2Matrix build_h2(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p) {
  return parallel::build_h2(pairs, latent, reference, p);
}

H3Tensor build_h3(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p) {
  return parallel::build_h3(pairs, latent, reference, p);
}

namespace {

double l2(const std::vector<double>& v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

template <typename Step>
PowerIterationResult iterate(std::size_t n, int max_iterations, double tolerance, Step&& step) {
  PowerIterationResult r;
  r.y.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> next(n);
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    step(r.y, next);
    const double nrm = l2(next);
    if (nrm == 0.0) break;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= nrm;
      delta += (next[i] - r.y[i]) * (next[i] - r.y[i]);
    }
    r.y.swap(next);
    r.iterations = it + 1;
    if (std::sqrt(delta) < tolerance) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace

PowerIterationResult power_iteration_2(const H2Matrix& h, int max_iterations, double tolerance) {
  if (h.n == 0 || h.all_zero()) throw Error(ErrorCode::ZeroMatrix, "H2 has no nonzero entry");
  return iterate(h.n, max_iterations, tolerance, [&](const std::vector<double>& y, std::vector<double>& out) {
    for (std::size_t a = 0; a < h.n; ++a) {
      const double* row = &h.values[a * h.n];
      double s = 0.0;
      for (std::size_t b = 0; b < h.n; ++b) s += row[b] * y[b];
      out[a] = s;
    }
  });
}

PowerIterationResult power_iteration_3(const H3Tensor& h, int max_iterations, double tolerance) {
  if (h.entries.empty()) throw Error(ErrorCode::ZeroTensor, "H3 has no stored entry");
  return iterate(h.n, max_iterations, tolerance, [&](const std::vector<double>& y, std::vector<double>& out) {
    // Each unordered entry stands for its six permutations; (j, k) and (k, j)
    // both contribute to Y_i.
    for (const auto& e : h.entries) {
      const double w = 2.0 * e.value;
      out[e.a] += w * y[e.b] * y[e.c];
      out[e.b] += w * y[e.a] * y[e.c];
      out[e.c] += w * y[e.a] * y[e.b];
    }
  });
}

bool CorrespondenceSet::is_one_to_one() const {
  std::vector<std::uint32_t> l, r;
  for (const auto& p : pairs) {
    l.push_back(p.i1);
    r.push_back(p.i2);
  }
  std::sort(l.begin(), l.end());
  std::sort(r.begin(), r.end());
  return std::adjacent_find(l.begin(), l.end()) == l.end() && std::adjacent_find(r.begin(), r.end()) == r.end();
}

CorrespondenceSet discretize(std::span<const double> y, std::span<const CandidatePair> pairs, double threshold) {
  if (y.size() != pairs.size()) throw Error(ErrorCode::InvalidArgument, "Y and candidate list differ in length");
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

  std::uint32_t max_l = 0, max_r = 0;
  for (const auto& p : pairs) {
    max_l = std::max(max_l, p.i1);
    max_r = std::max(max_r, p.i2);
  }
  std::vector<std::uint8_t> used_l(pairs.empty() ? 0 : max_l + 1, 0);
  std::vector<std::uint8_t> used_r(pairs.empty() ? 0 : max_r + 1, 0);

  CorrespondenceSet out;
  for (std::size_t k : order) {
    if (!(y[k] > threshold)) break;
    const auto& p = pairs[k];
    if (used_l[p.i1] || used_r[p.i2]) continue;
    used_l[p.i1] = used_r[p.i2] = 1;
    out.pairs.push_back(p);
  }
  return out;
}

double second_order_objective(const H2Matrix& h, std::span<const std::size_t> selected) noexcept {
  double s = 0.0;
  for (std::size_t a : selected) {
    for (std::size_t b : selected) s += h(a, b);
  }
  return s;
}

MatchTrace match_minutiae_traced(const PointSet& latent, const PointSet& reference, const MatcherConfig& cfg) {
  if (latent.minutiae.empty() || reference.minutiae.empty()) {
    throw Error(ErrorCode::EmptyTemplate, "cannot match an empty minutiae set");
  }
  if (!latent.descriptors || !reference.descriptors ||
      latent.descriptors->count() != latent.minutiae.size() ||
      reference.descriptors->count() != reference.minutiae.size()) {
    throw Error(ErrorCode::InvalidArgument, "every minutia needs a descriptor");
  }

  MatchTrace t;
  const SimilarityMatrix sim = similarity_matrix(*latent.descriptors, *reference.descriptors);
  t.candidates = select_top_pairs(sim, cfg.top_n);
  t.h2 = build_h2(t.candidates, latent.minutiae, reference.minutiae, cfg.compat);
  if (t.h2.all_zero()) {
    // No pair of candidates is geometrically compatible.
    t.y2.assign(t.candidates.size(), 0.0);
    return t;
  }
  const auto pi2 = power_iteration_2(t.h2, cfg.max_iterations, cfg.tolerance);
  t.y2 = pi2.y;
  const double max2 = *std::max_element(t.y2.begin(), t.y2.end());
  t.second_order = discretize(t.y2, t.candidates, cfg.second_order_threshold * max2);
  t.second_order.stage = MatchStage::SecondOrder;
  t.result = t.second_order;
  if (t.second_order.size() < 3) return t;

  const auto& survivors = t.second_order.pairs;
  const H3Tensor h3 = build_h3(survivors, latent.minutiae, reference.minutiae, cfg.compat);
  if (h3.entries.empty()) return t;
  const auto pi3 = power_iteration_3(h3, cfg.max_iterations, cfg.tolerance);
  const double max3 = *std::max_element(pi3.y.begin(), pi3.y.end());
  t.result = discretize(pi3.y, survivors, cfg.third_order_threshold * max3);
  t.result.stage = MatchStage::ThirdOrder;
  return t;
}

CorrespondenceSet match_minutiae(const PointSet& latent, const PointSet& reference, const MatcherConfig& cfg) {
  return match_minutiae_traced(latent, reference, cfg).result;
}

}  // namespace lfid
