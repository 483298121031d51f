#include "lfid/dbsearch.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "lfid/error.hpp"
#include "lfid/template_io.hpp"

namespace lfid {

namespace fs = std::filesystem;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorCode::MalformedPayload, "bad checksum '" + s + "'");
  return v;
}

}  // namespace

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "lfid-db";
  j["version"] = 1;
  j["count"] = entries.size();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    arr.push_back({{"subject_id", e.subject_id},
                   {"minutiae", e.minutiae_file},
                   {"texture", e.texture_file},
                   {"minutiae_fnv", hex64(e.minutiae_checksum)},
                   {"texture_fnv", hex64(e.texture_checksum)}});
  }
  j["subjects"] = arr;
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "lfid-db") throw Error(ErrorCode::MagicMismatch, "not an lfid manifest");
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::VersionMismatch, "unsupported manifest version");
    for (const auto& s : j.at("subjects")) {
      ManifestEntry e;
      e.subject_id = s.at("subject_id").get<std::string>();
      e.minutiae_file = s.at("minutiae").get<std::string>();
      e.texture_file = s.at("texture").get<std::string>();
      e.minutiae_checksum = parse_hex64(s.at("minutiae_fnv").get<std::string>());
      e.texture_checksum = parse_hex64(s.at("texture_fnv").get<std::string>());
      m.entries.push_back(std::move(e));
    }
    if (j.at("count").get<std::size_t>() != m.entries.size()) {
      throw Error(ErrorCode::MalformedPayload, "manifest count does not match its entries");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedPayload, std::string("manifest: ") + e.what());
  }
  return m;
}

std::string Manifest::hash() const {
  const std::string text = to_json();
  return hex64(fnv1a({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}));
}

ReferenceDb ReferenceDb::open(const fs::path& root) {
  ReferenceDb db;
  db.root_ = root;
  const auto bytes = read_file_bytes(root / "manifest.json");
  db.manifest_ = Manifest::from_json(std::string(bytes.begin(), bytes.end()));
  std::set<std::string> seen;
  for (const auto& e : db.manifest_.entries) {
    if (!seen.insert(e.subject_id).second) {
      throw Error(ErrorCode::DuplicateSubject, "manifest lists '" + e.subject_id + "' twice");
    }
    SubjectRecord rec;
    rec.subject_id = e.subject_id;
    const auto mb = read_file_bytes(root / e.minutiae_file);
    const auto tb = read_file_bytes(root / e.texture_file);
    if (fnv1a(mb) != e.minutiae_checksum || fnv1a(tb) != e.texture_checksum) {
      throw Error(ErrorCode::MalformedPayload, "checksum mismatch for subject '" + e.subject_id + "'");
    }
    auto mt = decode_template(mb);
    auto tt = decode_template(tb);
    if (!std::holds_alternative<MinutiaeTemplate>(mt) || !std::holds_alternative<TextureTemplate>(tt)) {
      throw Error(ErrorCode::MalformedPayload, "wrong template kind for subject '" + e.subject_id + "'");
    }
    rec.minutiae_template = std::get<MinutiaeTemplate>(std::move(mt));
    rec.texture_template = std::get<TextureTemplate>(std::move(tt));
    db.subjects_.push_back(std::move(rec));
  }
  return db;
}

ReferenceDb enroll(std::span<const SubjectRecord> records, const fs::path& root) {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.subject_id).second) {
      throw Error(ErrorCode::DuplicateSubject, "subject '" + r.subject_id + "' enrolled twice");
    }
  }
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + root.string() + ": " + ec.message());

  Manifest m;
  for (std::size_t i = 0; i < records.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "s%06zu", i);
    ManifestEntry e;
    e.subject_id = records[i].subject_id;
    e.minutiae_file = std::string(stem) + ".mt.lfrt";
    e.texture_file = std::string(stem) + ".tt.lfrt";
    const auto mb = encode_template(records[i].minutiae_template);
    const auto tb = encode_template(records[i].texture_template);
    write_file_bytes(root / e.minutiae_file, mb);
    write_file_bytes(root / e.texture_file, tb);
    e.minutiae_checksum = fnv1a(mb);
    e.texture_checksum = fnv1a(tb);
    m.entries.push_back(std::move(e));
  }
  const std::string text = m.to_json();
  write_file_bytes(root / "manifest.json", {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  return ReferenceDb::open(root);
}

std::size_t CandidateList::rank_of(const std::string& subject_id) const noexcept {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].subject_id == subject_id) return i + 1;
  }
  return 0;
}

std::vector<ScoreBreakdown> score_all(const LatentQuery& query, std::span<const SubjectRecord> subjects,
                                      const IdentificationConfig& cfg) {
  std::vector<ScoreBreakdown> out(subjects.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(subjects.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = compare(query, subjects[i], cfg);
    } catch (...) {
#pragma omp critical(lfid_score_all)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

double key_value(const ScoreBreakdown& s, ScoreKey key) noexcept {
  switch (key) {
    case ScoreKey::Mt1: return s.s_mt1;
    case ScoreKey::Mt2: return s.s_mt2;
    case ScoreKey::Tt: return s.s_tt;
    case ScoreKey::Fused: break;
  }
  return s.s_final;
}

void sort_entries(std::vector<CandidateEntry>& entries, ScoreKey key = ScoreKey::Fused) {
  std::sort(entries.begin(), entries.end(), [key](const CandidateEntry& a, const CandidateEntry& b) {
    const double sa = key_value(a.scores, key);
    const double sb = key_value(b.scores, key);
    if (sa != sb) return sa > sb;
    return a.subject_id < b.subject_id;
  });
}

}  // namespace

CandidateList rank_candidates(const std::string& query_id, std::span<const SubjectRecord> subjects,
                              std::span<const ScoreBreakdown> scores, std::size_t k, ScoreKey key) {
  CandidateList list;
  list.query_id = query_id;
  list.entries.reserve(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) list.entries.push_back({subjects[i].subject_id, scores[i]});
  sort_entries(list.entries, key);
  if (list.entries.size() > k) list.entries.resize(k);
  return list;
}

CandidateList search(const LatentQuery& query, std::span<const SubjectRecord> subjects, std::size_t k,
                     const IdentificationConfig& cfg) {
  if (subjects.empty()) throw Error(ErrorCode::EmptyDb, "reference database is empty");
  const auto scores = score_all(query, subjects, cfg);
  return rank_candidates(query.query_id, subjects, scores, k);
}

CandidateList search(const LatentQuery& query, const ReferenceDb& db, std::size_t k, const IdentificationConfig& cfg) {
  return search(query, db.subjects(), k, cfg);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": bad number '" + s + "'");
}

std::size_t to_count(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": bad count '" + s + "'");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_candidate_csv(std::ostream& out, std::span<const CandidateList> lists) {
  out << "query_id,rank,subject_id,score,s_mt1,s_mt2,s_tt,n_mt1,n_mt2,n_tt\n";
  for (const auto& l : lists) {
    for (std::size_t r = 0; r < l.entries.size(); ++r) {
      const auto& e = l.entries[r];
      out << l.query_id << ',' << (r + 1) << ',' << e.subject_id << ',' << fmt_double(e.scores.s_final) << ','
          << fmt_double(e.scores.s_mt1) << ',' << fmt_double(e.scores.s_mt2) << ',' << fmt_double(e.scores.s_tt)
          << ',' << e.scores.n_corr_1 << ',' << e.scores.n_corr_2 << ',' << e.scores.n_corr_tt << '\n';
    }
  }
}

std::vector<CandidateList> read_candidate_csv(std::istream& in) {
  std::vector<CandidateList> lists;
  std::unordered_map<std::string, std::size_t> by_query;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    for (auto& c : cells) c = trim(c);
    if (lineno == 1 && cells[0] == "query_id") continue;
    if (cells.size() < 4) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": too few columns");
    auto [it, fresh] = by_query.try_emplace(cells[0], lists.size());
    if (fresh) lists.push_back(CandidateList{cells[0], {}});
    CandidateEntry e;
    e.subject_id = cells[2];
    e.scores.s_final = to_double(cells[3], lineno);
    if (cells.size() >= 10) {
      e.scores.s_mt1 = to_double(cells[4], lineno);
      e.scores.s_mt2 = to_double(cells[5], lineno);
      e.scores.s_tt = to_double(cells[6], lineno);
      e.scores.n_corr_1 = to_count(cells[7], lineno);
      e.scores.n_corr_2 = to_count(cells[8], lineno);
      e.scores.n_corr_tt = to_count(cells[9], lineno);
    }
    const std::size_t rank = to_count(cells[1], lineno);
    auto& entries = lists[it->second].entries;
    if (rank != entries.size() + 1) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": ranks must be consecutive");
    }
    entries.push_back(std::move(e));
  }
  return lists;
}

std::string CmcCurve::to_csv() const {
  std::string out = "rank,rate\n";
  for (std::size_t k = 0; k < rates.size(); ++k) out += std::to_string(k + 1) + "," + fmt_double(rates[k]) + "\n";
  return out;
}

CmcCurve compute_cmc(std::span<const CandidateList> lists, const std::map<std::string, std::string>& truth,
                     std::size_t k_max) {
  if (k_max == 0) throw Error(ErrorCode::InvalidArgument, "K_max must be >= 1");
  std::vector<std::size_t> hits(k_max, 0);
  for (const auto& l : lists) {
    const auto it = truth.find(l.query_id);
    if (it == truth.end()) throw Error(ErrorCode::MissingTruth, "no mate recorded for query '" + l.query_id + "'");
    const std::size_t r = l.rank_of(it->second);
    if (r == 0 || r > k_max) continue;
    for (std::size_t k = r - 1; k < k_max; ++k) ++hits[k];
  }
  CmcCurve c;
  c.query_count = lists.size();
  c.rates.resize(k_max, 0.0);
  if (!lists.empty()) {
    for (std::size_t k = 0; k < k_max; ++k) c.rates[k] = static_cast<double>(hits[k]) / static_cast<double>(lists.size());
  }
  return c;
}

std::map<std::string, std::string> read_truth_csv(std::istream& in) {
  std::map<std::string, std::string> truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() < 2) throw Error(ErrorCode::InvalidArgument, "truth line " + std::to_string(lineno) + ": expected query_id,subject_id");
    if (lineno == 1 && trim(cells[0]) == "query_id") continue;
    truth[trim(cells[0])] = trim(cells[1]);
  }
  return truth;
}

namespace {

std::map<std::string, double> normalized_scores(const CandidateList& l) {
  std::map<std::string, double> out;
  if (l.entries.empty()) return out;
  double lo = l.entries.front().scores.s_final;
  double hi = lo;
  for (const auto& e : l.entries) {
    lo = std::min(lo, e.scores.s_final);
    hi = std::max(hi, e.scores.s_final);
  }
  const double range = hi - lo;
  for (const auto& e : l.entries) out[e.subject_id] = range > 0.0 ? (e.scores.s_final - lo) / range : 1.0;
  return out;
}

std::map<std::string, double> borda_points(const CandidateList& l, std::size_t depth) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < l.entries.size() && i < depth; ++i) {
    out[l.entries[i].subject_id] = static_cast<double>(depth - (i + 1));
  }
  return out;
}

}  // namespace

CandidateList fuse_external_scores(const CandidateList& ours, const CandidateList& theirs, FusionMode mode,
                                   std::size_t borda_depth) {
  if (ours.query_id != theirs.query_id) {
    throw Error(ErrorCode::QueryMismatch, "fusing lists of '" + ours.query_id + "' and '" + theirs.query_id + "'");
  }
  const auto a = mode == FusionMode::Borda ? borda_points(ours, borda_depth) : normalized_scores(ours);
  const auto b = mode == FusionMode::Borda ? borda_points(theirs, borda_depth) : normalized_scores(theirs);

  std::map<std::string, ScoreBreakdown> merged;
  for (const auto& e : theirs.entries) merged[e.subject_id] = ScoreBreakdown{};
  for (const auto& e : ours.entries) merged[e.subject_id] = e.scores;  // keep our per-template scores

  CandidateList out;
  out.query_id = ours.query_id;
  for (auto& [id, s] : merged) {
    const auto ia = a.find(id);
    const auto ib = b.find(id);
    s.s_final = (ia == a.end() ? 0.0 : ia->second) + (ib == b.end() ? 0.0 : ib->second);
    out.entries.push_back({id, s});
  }
  sort_entries(out.entries);
  return out;
}

namespace {

LatentQuery restrict(const LatentQuery& q, std::span<const PatchType> subset) {
  LatentQuery r = q;
  r.mt1.descriptors = q.mt1.descriptors.select(subset);
  r.mt2.descriptors = q.mt2.descriptors.select(subset);
  r.tt.descriptors = q.tt.descriptors.select(subset);
  return r;
}

SubjectRecord restrict(const SubjectRecord& s, std::span<const PatchType> subset) {
  SubjectRecord r = s;
  r.minutiae_template.descriptors = s.minutiae_template.descriptors.select(subset);
  r.texture_template.descriptors = s.texture_template.descriptors.select(subset);
  return r;
}

}  // namespace

double rank1_accuracy(const SfsBenchmark& bench, std::span<const PatchType> subset) {
  if (bench.queries.empty()) return 0.0;
  std::vector<SubjectRecord> subjects;
  subjects.reserve(bench.subjects.size());
  for (const auto& s : bench.subjects) subjects.push_back(restrict(s, subset));
  std::size_t hits = 0;
  for (const auto& q : bench.queries) {
    const auto it = bench.truth.find(q.query_id);
    if (it == bench.truth.end()) throw Error(ErrorCode::MissingTruth, "no mate recorded for query '" + q.query_id + "'");
    const auto list = search(restrict(q, subset), subjects, 1, bench.config);
    if (!list.entries.empty() && list.entries.front().subject_id == it->second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(bench.queries.size());
}

std::vector<SfsStep> sfs_patch_selection(const SfsBenchmark& bench, std::span<const PatchType> catalog,
                                         std::size_t max_k) {
  std::vector<SfsStep> steps;
  std::vector<PatchType> chosen;
  std::vector<PatchType> remaining(catalog.begin(), catalog.end());
  double best_so_far = -1.0;
  while (chosen.size() < max_k && !remaining.empty()) {
    std::size_t best = remaining.size();
    double best_acc = -1.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      auto trial = chosen;
      trial.push_back(remaining[i]);
      const double acc = rank1_accuracy(bench, trial);
      if (acc > best_acc) {
        best_acc = acc;
        best = i;
      }
    }
    if (best_acc <= best_so_far) break;
    best_so_far = best_acc;
    chosen.push_back(remaining[best]);
    steps.push_back({remaining[best], chosen, best_acc});
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return steps;
}

}  // namespace lfid
