// Serial reference kernels against their OpenMP counterparts on a synthetic
// texture comparison (about 200 virtual minutiae per side). Parallel variants
// take the worker count as their argument.
#include <benchmark/benchmark.h>

#include "lfid/kernels.hpp"
#include "lfid/matcher.hpp"
#include "lfid/scoring.hpp"
#include "lfid/synth.hpp"

namespace {

struct Fixture {
  lfid::SubjectRecord ref;
  lfid::LatentSample lat;
  std::vector<lfid::CandidatePair> pairs;

  Fixture() : ref(lfid::generate_reference(7, 40)) {
    lfid::DistortionSpec s;
    s.occlusion_fraction = 0.3;
    s.position_jitter_sigma = 2.0;
    s.spurious_fraction = 0.2;
    s.descriptor_noise_sigma = 0.1;
    s.seed = 1;
    lat = lfid::derive_latent(ref, s);
    const auto sim = lfid::serial::similarity_matrix(lat.query.tt.descriptors, ref.texture_template.descriptors);
    pairs = lfid::select_top_pairs(sim, lfid::MatcherConfig::texture().top_n);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_SimilaritySerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(lfid::serial::similarity_matrix(f.lat.query.tt.descriptors, f.ref.texture_template.descriptors));
}

void BM_SimilarityParallel(benchmark::State& state) {
  const auto& f = fixture();
  lfid::set_worker_count(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(lfid::parallel::similarity_matrix(f.lat.query.tt.descriptors, f.ref.texture_template.descriptors));
}

void BM_H2Serial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(lfid::serial::build_h2(f.pairs, f.lat.query.tt.virtual_minutiae,
                                                    f.ref.texture_template.virtual_minutiae, {}));
}

void BM_H2Parallel(benchmark::State& state) {
  const auto& f = fixture();
  lfid::set_worker_count(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(lfid::parallel::build_h2(f.pairs, f.lat.query.tt.virtual_minutiae,
                                                      f.ref.texture_template.virtual_minutiae, {}));
}

// The third-order tensor is only built on second-order survivors, so a
// realistic input is a few dozen pairs.
std::span<const lfid::CandidatePair> h3_pairs() { return std::span(fixture().pairs).first(48); }

void BM_H3Serial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(lfid::serial::build_h3(h3_pairs(), f.lat.query.tt.virtual_minutiae,
                                                    f.ref.texture_template.virtual_minutiae, {}));
}

void BM_H3Parallel(benchmark::State& state) {
  const auto& f = fixture();
  lfid::set_worker_count(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(lfid::parallel::build_h3(h3_pairs(), f.lat.query.tt.virtual_minutiae,
                                                      f.ref.texture_template.virtual_minutiae, {}));
}

void BM_FullComparison(benchmark::State& state) {
  const auto& f = fixture();
  lfid::set_worker_count(1);
  for (auto _ : state) benchmark::DoNotOptimize(lfid::compare(f.lat.query, f.ref, {}));
}

}  // namespace

BENCHMARK(BM_SimilaritySerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SimilarityParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_H2Serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_H2Parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_H3Serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_H3Parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FullComparison)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
