#pragma once

// Data-parallel kernels. Each has a serial reference in lfid::serial and an
// OpenMP version in lfid::parallel; both produce bit-identical output for any
// thread count. The public entry points in descriptor.hpp / matcher.hpp call the
// parallel versions.

#include <span>

#include "lfid/descriptor.hpp"
#include "lfid/matcher.hpp"

namespace lfid {

namespace serial {

SimilarityMatrix similarity_matrix(const DescriptorSet& latent, const DescriptorSet& reference);
H2Matrix build_h2(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p);
H3Tensor build_h3(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p);

}  // namespace serial

namespace parallel {

SimilarityMatrix similarity_matrix(const DescriptorSet& latent, const DescriptorSet& reference);
H2Matrix build_h2(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p);
H3Tensor build_h3(std::span<const CandidatePair> pairs, std::span<const Minutia> latent,
                  std::span<const Minutia> reference, const CompatibilityParams& p);

}  // namespace parallel

/// Sets the OpenMP worker count used by parallel kernels and search. n ≤ 0 keeps
/// the runtime default.
void set_worker_count(int n);
int worker_count();

}  // namespace lfid
