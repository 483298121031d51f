#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lfid/core.hpp"
#include "lfid/scoring.hpp"

namespace lfid {

struct ManifestEntry {
  std::string subject_id;
  std::string minutiae_file;
  std::string texture_file;
  std::uint64_t minutiae_checksum = 0;  // FNV-1a of the file bytes
  std::uint64_t texture_checksum = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::size_t count() const noexcept { return entries.size(); }
  std::string to_json() const;
  static Manifest from_json(const std::string& text);
  /// FNV-1a over the canonical JSON form, as 16 hex digits.
  std::string hash() const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept;

/// A directory holding manifest.json plus two template files per subject.
/// Records are loaded and checksum-verified on open.
class ReferenceDb {
 public:
  /// Throws Io, or a data-integrity error for damaged files.
  static ReferenceDb open(const std::filesystem::path& root);

  const std::filesystem::path& root() const noexcept { return root_; }
  const Manifest& manifest() const noexcept { return manifest_; }
  std::span<const SubjectRecord> subjects() const noexcept { return subjects_; }
  std::size_t size() const noexcept { return subjects_.size(); }

 private:
  std::filesystem::path root_;
  Manifest manifest_;
  std::vector<SubjectRecord> subjects_;
};

/// Writes a fresh database at `root`, replacing any previous manifest.
/// Throws DuplicateSubject.
ReferenceDb enroll(std::span<const SubjectRecord> records, const std::filesystem::path& root);

struct CandidateEntry {
  std::string subject_id;
  ScoreBreakdown scores;

  friend bool operator==(const CandidateEntry&, const CandidateEntry&) = default;
};

/// Ranked by s_final descending, ties by subject_id ascending.
struct CandidateList {
  std::string query_id;
  std::vector<CandidateEntry> entries;

  /// 1-based rank of `subject_id`, 0 when absent.
  std::size_t rank_of(const std::string& subject_id) const noexcept;

  friend bool operator==(const CandidateList&, const CandidateList&) = default;
};

enum class ScoreKey { Fused, Mt1, Mt2, Tt };

/// Scores of `query` against every subject, in subject order. Parallel over
/// subjects; the result does not depend on the worker count.
std::vector<ScoreBreakdown> score_all(const LatentQuery& query, std::span<const SubjectRecord> subjects,
                                      const IdentificationConfig& cfg);

/// Sorts subjects by the chosen score (descending, ties by id) and keeps the top k.
CandidateList rank_candidates(const std::string& query_id, std::span<const SubjectRecord> subjects,
                              std::span<const ScoreBreakdown> scores, std::size_t k, ScoreKey key = ScoreKey::Fused);

/// Throws EmptyDb.
CandidateList search(const LatentQuery& query, std::span<const SubjectRecord> subjects, std::size_t k,
                     const IdentificationConfig& cfg = {});
CandidateList search(const LatentQuery& query, const ReferenceDb& db, std::size_t k,
                     const IdentificationConfig& cfg = {});

// CSV with header query_id,rank,subject_id,score,s_mt1,s_mt2,s_tt,n_mt1,n_mt2,n_tt.
// Reading also accepts external lists carrying only the first four columns.
void write_candidate_csv(std::ostream& out, std::span<const CandidateList> lists);
std::vector<CandidateList> read_candidate_csv(std::istream& in);

struct CmcCurve {
  std::vector<double> rates;  // rates[k - 1] = rank-k identification rate
  std::size_t query_count = 0;

  double at(std::size_t k) const { return rates.at(k - 1); }
  std::string to_csv() const;  // rank,rate
};

/// Throws MissingTruth.
CmcCurve compute_cmc(std::span<const CandidateList> lists, const std::map<std::string, std::string>& truth,
                     std::size_t k_max);

std::map<std::string, std::string> read_truth_csv(std::istream& in);  // query_id,subject_id

enum class FusionMode { ScoreEqualWeight, Borda };

/// Score mode: min-max normalize each list (a constant list maps to 1), sum.
/// Borda: rank r ≤ L earns L − r points. Absent candidates contribute 0.
/// Throws QueryMismatch.
CandidateList fuse_external_scores(const CandidateList& ours, const CandidateList& theirs, FusionMode mode,
                                   std::size_t borda_depth = 100);

struct SfsBenchmark {
  std::vector<SubjectRecord> subjects;
  std::vector<LatentQuery> queries;
  std::map<std::string, std::string> truth;
  IdentificationConfig config;
};

struct SfsStep {
  PatchType added;
  std::vector<PatchType> subset;
  double rank1 = 0.0;
};

/// Fraction of queries whose mate is ranked first, using descriptors restricted
/// to `subset`.
double rank1_accuracy(const SfsBenchmark& bench, std::span<const PatchType> subset);

/// Greedy forward selection over `catalog` maximizing rank-1 accuracy; ties go
/// to the earlier catalog entry. Stops at max_k types or when no addition
/// strictly improves accuracy.
std::vector<SfsStep> sfs_patch_selection(const SfsBenchmark& bench, std::span<const PatchType> catalog,
                                         std::size_t max_k);

}  // namespace lfid
