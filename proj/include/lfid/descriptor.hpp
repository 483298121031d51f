#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lfid/core.hpp"
#include "lfid/ingest.hpp"

namespace lfid {

/// The fourteen patch types plus the subset used to build descriptors.
struct PatchTypeCatalog {
  std::vector<PatchType> entries;
  std::vector<PatchType> selected;

  /// All fourteen types; selection = the 80×80 centered window plus two offset
  /// 96×96 windows.
  static PatchTypeCatalog standard();
  bool valid() const;
};

/// Baseline handcrafted descriptor: magnitude-weighted gradient orientation
/// histograms on a grid × grid cell layout with `bins` signed orientation bins,
/// L2-normalized per patch type. dim = grid² · bins (128 by default).
struct DescriptorConfig {
  int grid = 4;
  int bins = 8;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(grid * grid * bins); }
};

/// One descriptor vector per type in `subset`, in that order. Throws
/// MissingPatchType if a patch of some selected type is absent.
Descriptor compute_descriptor(std::span<const Patch> patches, std::span<const PatchType> subset,
                              const DescriptorConfig& cfg = {});

/// Descriptors for every minutia of an image, one extract_patch per selected type.
DescriptorSet compute_descriptors(const GrayImage& img, std::span<const Minutia> minutiae,
                                  std::span<const PatchType> subset, const DescriptorConfig& cfg = {});

/// Mean over the shared patch types of the per-type cosine similarity.
/// Throws PatchSetMismatch when the patch-type lists differ.
double descriptor_similarity(const DescriptorView& a, const DescriptorView& b);

/// Dense row-major n_l × n_r matrix of descriptor similarities.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * cols + j]; }
};

/// Parallel over rows; identical output to lfid::serial::similarity_matrix.
SimilarityMatrix similarity_matrix(const DescriptorSet& latent, const DescriptorSet& reference);

struct CandidatePair {
  std::uint32_t i1 = 0;  // latent minutia
  std::uint32_t i2 = 0;  // reference minutia
  double sim = 0.0;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

/// The `n` most similar entries, sorted by similarity descending; ties by (i1, i2).
std::vector<CandidatePair> select_top_pairs(const SimilarityMatrix& sim, std::size_t n);

// Sidecar descriptor files let externally computed descriptors replace the
// baseline. Text, one line per (minutia, patch type):
//   source_id,minutia_index,patch_type,v0 v1 ... v{D-1}
// Lines for other source ids are ignored. Vectors are L2-normalized on load.
DescriptorSet load_descriptor_sidecar(const std::filesystem::path& path, const std::string& source_id,
                                      std::size_t minutia_count, std::span<const PatchType> subset);
void save_descriptor_sidecar(const std::filesystem::path& path, const std::string& source_id,
                             const DescriptorSet& d);

/// Fills each per-patch vector with a normalized copy of itself. Zero vectors
/// become the uniform unit vector.
void normalize_in_place(std::span<float> v) noexcept;

}  // namespace lfid
