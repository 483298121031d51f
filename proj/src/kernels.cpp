#include "lfid/kernels.hpp"

#include <omp.h>

#include <algorithm>

#include "lfid/error.hpp"
#include "numeric.hpp"

namespace lfid {

namespace {

void check_compatible(const DescriptorSet& l, const DescriptorSet& r) {
  if (l.count() == 0 || r.count() == 0) return;
  if (l.patch_types != r.patch_types || l.dim != r.dim) {
    throw Error(ErrorCode::PatchSetMismatch, "templates use different descriptor patch types");
  }
}

std::vector<double> vector_norms(const DescriptorSet& d) {
  const std::size_t np = d.patch_types.size();
  std::vector<double> out(d.count() * np);
  for (std::size_t i = 0; i < d.count(); ++i) {
    const auto v = d.at(i);
    for (std::size_t p = 0; p < np; ++p) out[i * np + p] = detail::norm(v.vector(p));
  }
  return out;
}

struct SimilarityJob {
  const DescriptorSet& l;
  const DescriptorSet& r;
  std::vector<double> norm_l;
  std::vector<double> norm_r;
  SimilarityMatrix out;

  SimilarityJob(const DescriptorSet& latent, const DescriptorSet& reference)
      : l(latent), r(reference), norm_l(vector_norms(latent)), norm_r(vector_norms(reference)) {
    out.rows = l.count();
    out.cols = r.count();
    out.values.assign(out.rows * out.cols, 0.0);
  }

  // Same arithmetic as descriptor_similarity, with the norms cached.
  void row(std::size_t i) {
    const std::size_t np = l.patch_types.size();
    const auto a = l.at(i);
    for (std::size_t j = 0; j < out.cols; ++j) {
      const auto b = r.at(j);
      double sum = 0.0;
      for (std::size_t p = 0; p < np; ++p) {
        sum += detail::cosine(a.vector(p), b.vector(p), norm_l[i * np + p], norm_r[j * np + p]);
      }
      out.values[i * out.cols + j] = sum / static_cast<double>(np);
    }
  }
};

void h3_row(std::size_t a, std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
            std::span<const Minutia> reference, const CompatibilityParams& p, std::vector<H3Tensor::Entry>& out) {
  const std::size_t n = pairs.size();
  for (std::size_t b = a + 1; b < n; ++b) {
    if (pairs[a].i1 == pairs[b].i1 || pairs[a].i2 == pairs[b].i2) continue;
    for (std::size_t c = b + 1; c < n; ++c) {
      const double v = triplet_compatibility(pairs[a], pairs[b], pairs[c], latent, reference, p);
      if (v > 0.0) {
        out.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c), v});
      }
    }
  }
}

}  // namespace

namespace serial {

SimilarityMatrix similarity_matrix(const DescriptorSet& latent, const DescriptorSet& reference) {
  check_compatible(latent, reference);
  SimilarityJob job(latent, reference);
  for (std::size_t i = 0; i < job.out.rows; ++i) job.row(i);
  return std::move(job.out);
}

H2Matrix build_h2(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p) {
  H2Matrix h{pairs.size(), std::vector<double>(pairs.size() * pairs.size(), 0.0)};
  for (std::size_t a = 0; a < h.n; ++a) {
    for (std::size_t b = a + 1; b < h.n; ++b) {
      const double v = pair_compatibility(pairs[a], pairs[b], latent, reference, p);
      h.values[a * h.n + b] = v;
      h.values[b * h.n + a] = v;
    }
  }
  return h;
}

H3Tensor build_h3(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p) {
  H3Tensor h;
  h.n = pairs.size();
  for (std::size_t a = 0; a < h.n; ++a) h3_row(a, pairs, latent, reference, p, h.entries);
  return h;
}

}  // namespace serial

namespace parallel {

SimilarityMatrix similarity_matrix(const DescriptorSet& latent, const DescriptorSet& reference) {
  check_compatible(latent, reference);
  SimilarityJob job(latent, reference);
  const auto rows = static_cast<std::ptrdiff_t>(job.out.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) job.row(static_cast<std::size_t>(i));
  return std::move(job.out);
}

H2Matrix build_h2(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p) {
  H2Matrix h{pairs.size(), std::vector<double>(pairs.size() * pairs.size(), 0.0)};
  const auto n = static_cast<std::ptrdiff_t>(h.n);
  // Row a owns cells (a, b) and (b, a) for b > a.
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t a = 0; a < n; ++a) {
    for (std::ptrdiff_t b = a + 1; b < n; ++b) {
      const double v = pair_compatibility(pairs[a], pairs[b], latent, reference, p);
      h.values[a * n + b] = v;
      h.values[b * n + a] = v;
    }
  }
  return h;
}

H3Tensor build_h3(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p) {
  H3Tensor h;
  h.n = pairs.size();
  std::vector<std::vector<H3Tensor::Entry>> rows(h.n);
  const auto n = static_cast<std::ptrdiff_t>(h.n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t a = 0; a < n; ++a) h3_row(static_cast<std::size_t>(a), pairs, latent, reference, p, rows[a]);
  // Concatenate in row order so storage matches the serial build.
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  h.entries.reserve(total);
  for (auto& r : rows) h.entries.insert(h.entries.end(), r.begin(), r.end());
  return h;
}

}  // namespace parallel

void set_worker_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int worker_count() { return omp_get_max_threads(); }

}  // namespace lfid
