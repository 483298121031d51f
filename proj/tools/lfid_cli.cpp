// Command-line front end: extract, enroll, search, eval, fuse, synth, sfs, validate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lfid/config.hpp"
#include "lfid/dbsearch.hpp"
#include "lfid/descriptor.hpp"
#include "lfid/error.hpp"
#include "lfid/ingest.hpp"
#include "lfid/kernels.hpp"
#include "lfid/synth.hpp"
#include "lfid/template_io.hpp"

namespace fs = std::filesystem;
using namespace lfid;

namespace {

// Template file layout on disk:
//   reference  <prefix>.mt.lfrt  <prefix>.tt.lfrt
//   latent     <prefix>.mt1.lfrt <prefix>.mt2.lfrt <prefix>.tt.lfrt
fs::path with_suffix(const std::string& prefix, const char* suffix) { return fs::path(prefix + suffix); }

void save_reference(const SubjectRecord& r, const std::string& prefix) {
  save_template(r.minutiae_template, with_suffix(prefix, ".mt.lfrt"));
  save_template(r.texture_template, with_suffix(prefix, ".tt.lfrt"));
}

SubjectRecord load_reference(const std::string& prefix) {
  SubjectRecord r;
  r.minutiae_template = load_minutiae_template(with_suffix(prefix, ".mt.lfrt"));
  r.texture_template = load_texture_template(with_suffix(prefix, ".tt.lfrt"));
  r.subject_id = r.minutiae_template.source_id;
  return r;
}

void save_query(const LatentQuery& q, const std::string& prefix) {
  save_template(q.mt1, with_suffix(prefix, ".mt1.lfrt"));
  save_template(q.mt2, with_suffix(prefix, ".mt2.lfrt"));
  save_template(q.tt, with_suffix(prefix, ".tt.lfrt"));
}

LatentQuery load_query(const std::string& prefix) {
  LatentQuery q;
  q.mt1 = load_minutiae_template(with_suffix(prefix, ".mt1.lfrt"));
  q.mt2 = load_minutiae_template(with_suffix(prefix, ".mt2.lfrt"));
  q.tt = load_texture_template(with_suffix(prefix, ".tt.lfrt"));
  q.query_id = q.mt1.source_id;
  return q;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Relative entries in a list file resolve against the list's directory.
std::vector<std::string> gather(const std::vector<std::string>& direct, const std::string& list_file) {
  std::vector<std::string> out = direct;
  if (!list_file.empty()) {
    const fs::path base = fs::path(list_file).parent_path();
    for (const auto& l : read_lines(list_file)) out.push_back(fs::path(l).is_absolute() ? l : (base / l).string());
  }
  return out;
}

// Minutiae CSV: x,y,alpha (radians); an optional header line is skipped.
std::vector<Minutia> read_minutiae_csv(const std::string& path) {
  std::vector<Minutia> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    double x, y, a;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &a) != 3) {
      if (lineno == 1) continue;
      throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected x,y,alpha");
    }
    out.push_back(make_minutia(x, y, a));
  }
  return out;
}

std::map<std::string, std::string> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_truth_csv(in);
}

std::vector<CandidateList> load_lists(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_candidate_csv(in);
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + out_path);
  out << text;
}

IdentificationConfig load_config(const std::string& path) {
  return path.empty() ? IdentificationConfig{} : load_identification_config(path);
}

std::vector<PatchType> parse_subset(const std::vector<std::string>& names) {
  if (names.empty()) return PatchTypeCatalog::standard().selected;
  std::vector<PatchType> out;
  for (const auto& n : names) {
    const auto t = parse_patch_type(n);
    if (!t) throw Error(ErrorCode::InvalidArgument, "unknown patch type '" + n + "'");
    out.push_back(*t);
  }
  return out;
}

// splitmix64 step; derives independent per-item seeds from --seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent fingerprint identification"};
  app.require_subcommand(1);
  int workers = 0;
  std::uint64_t seed = 1;
  app.add_option("--workers", workers, "OpenMP worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "seed for every random draw");

  // extract
  auto* extract = app.add_subcommand("extract", "build templates from an image and a minutiae list");
  std::string ex_image, ex_mask, ex_minutiae, ex_minutiae2, ex_side = "reference", ex_id, ex_out, ex_sidecar;
  std::vector<std::string> ex_patches;
  int ex_block = kDefaultBlockSize;
  extract->add_option("--image", ex_image, "PGM or PNG image")->required();
  extract->add_option("--mask", ex_mask, "ROI mask image (non-zero = inside)");
  extract->add_option("--minutiae", ex_minutiae, "minutiae CSV x,y,alpha")->required();
  extract->add_option("--minutiae2", ex_minutiae2, "second latent minutiae set (defaults to --minutiae)");
  extract->add_option("--side", ex_side, "latent or reference")->check(CLI::IsMember({"latent", "reference"}));
  extract->add_option("--id", ex_id, "source id (defaults to the image stem)");
  extract->add_option("--out", ex_out, "output prefix")->required();
  extract->add_option("--patches", ex_patches, "patch types to describe");
  extract->add_option("--sidecar", ex_sidecar, "descriptor sidecar replacing the baseline minutiae descriptors");
  extract->add_option("--block-size", ex_block, "orientation block size")->check(CLI::PositiveNumber);

  // enroll
  auto* enroll_cmd = app.add_subcommand("enroll", "write a reference database");
  std::string en_db, en_list;
  std::vector<std::string> en_refs;
  enroll_cmd->add_option("--db", en_db, "database directory")->required();
  enroll_cmd->add_option("--list", en_list, "file with one reference prefix per line");
  enroll_cmd->add_option("refs", en_refs, "reference prefixes");

  // search
  auto* search_cmd = app.add_subcommand("search", "1:N search of latent queries");
  std::string se_db, se_list, se_out, se_config, se_scores;
  std::vector<std::string> se_queries;
  std::size_t se_k = 100;
  search_cmd->add_option("--db", se_db, "database directory")->required();
  search_cmd->add_option("--top-k", se_k, "candidate list length")->check(CLI::PositiveNumber);
  search_cmd->add_option("--list", se_list, "file with one query prefix per line");
  search_cmd->add_option("--out", se_out, "candidate list CSV (default stdout)");
  search_cmd->add_option("--config", se_config, "matcher configuration file");
  search_cmd->add_option("--scores-json", se_scores, "also write per-comparison score breakdowns (JSON lines)");
  search_cmd->add_option("queries", se_queries, "query prefixes");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate candidate lists");
  bool ev_cmc = false;
  std::string ev_lists, ev_truth, ev_out;
  std::size_t ev_kmax = 20;
  eval->add_flag("--cmc", ev_cmc, "emit the CMC curve as CSV rank,rate")->required();
  eval->add_option("--lists", ev_lists, "candidate list CSV")->required();
  eval->add_option("--truth", ev_truth, "truth CSV query_id,subject_id")->required();
  eval->add_option("--k-max", ev_kmax, "largest rank")->check(CLI::PositiveNumber);
  eval->add_option("--out", ev_out, "output CSV (default stdout)");

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse our candidate lists with another matcher's");
  std::string fu_mode = "score", fu_ours, fu_theirs, fu_out;
  std::size_t fu_depth = 100;
  fuse->add_option("--mode", fu_mode, "score or borda")->check(CLI::IsMember({"score", "borda"}));
  fuse->add_option("--ours", fu_ours, "our candidate list CSV")->required();
  fuse->add_option("--theirs", fu_theirs, "external candidate list CSV")->required();
  fuse->add_option("--depth", fu_depth, "Borda list depth L")->check(CLI::PositiveNumber);
  fuse->add_option("--out", fu_out, "output CSV (default stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
  std::size_t sy_subjects = 100, sy_minutiae = 40;
  std::string sy_spec, sy_out;
  bool sy_random_rigid = false;
  double sy_max_shift = 10.0;
  std::vector<std::string> sy_patches;
  synth->add_option("--subjects", sy_subjects, "number of subjects (one latent each)")->check(CLI::PositiveNumber);
  synth->add_option("--minutiae", sy_minutiae, "minutiae per reference")->check(CLI::PositiveNumber);
  synth->add_option("--spec", sy_spec, "distortion spec JSON");
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->add_flag("--random-rigid", sy_random_rigid, "draw a rotation about the center and a shift per latent");
  synth->add_option("--max-shift", sy_max_shift, "shift bound for --random-rigid");
  synth->add_option("--patches", sy_patches, "patch types carried by the descriptors");

  // sfs
  auto* sfs = app.add_subcommand("sfs", "sequential forward selection of patch types");
  std::string sf_refs, sf_queries, sf_truth, sf_config, sf_out;
  std::size_t sf_max_k = 3;
  std::vector<std::string> sf_catalog;
  sfs->add_option("--refs", sf_refs, "file listing reference prefixes")->required();
  sfs->add_option("--queries", sf_queries, "file listing query prefixes")->required();
  sfs->add_option("--truth", sf_truth, "truth CSV")->required();
  sfs->add_option("--max-k", sf_max_k, "largest subset size")->check(CLI::PositiveNumber);
  sfs->add_option("--catalog", sf_catalog, "candidate patch types (default: all carried by the templates)");
  sfs->add_option("--config", sf_config, "matcher configuration file");
  sfs->add_option("--out", sf_out, "output CSV (default stdout)");

  // validate
  auto* validate = app.add_subcommand("validate", "check template files");
  std::vector<std::string> va_files;
  validate->add_option("files", va_files, "template files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    set_worker_count(workers);

    if (*extract) {
      GrayImage img = ex_mask.empty() ? read_gray_image(ex_image) : read_gray_image(ex_image, ex_mask);
      const auto subset = parse_subset(ex_patches);
      const std::string id = ex_id.empty() ? fs::path(ex_image).stem().string() : ex_id;
      const OrientationField field = estimate_orientation_field(img, ex_block);
      auto minutiae_template = [&](const std::string& csv, TemplateVariant variant) {
        MinutiaeTemplate t;
        t.source_id = id;
        t.variant = variant;
        t.width = img.width;
        t.height = img.height;
        t.minutiae = read_minutiae_csv(csv);
        t.field = field;
        t.descriptors = ex_sidecar.empty() ? compute_descriptors(img, t.minutiae, subset)
                                           : load_descriptor_sidecar(ex_sidecar, id, t.minutiae.size(), subset);
        return t;
      };
      TextureTemplate tt;
      tt.source_id = id;
      tt.width = img.width;
      tt.height = img.height;
      tt.block_size = ex_block;
      const bool latent = ex_side == "latent";
      tt.side = latent ? TextureSide::Latent : TextureSide::Reference;
      tt.virtual_minutiae = latent ? latent_virtual_minutiae(field) : reference_virtual_minutiae(field);
      tt.descriptors = compute_descriptors(img, tt.virtual_minutiae, subset);
      if (latent) {
        LatentQuery q;
        q.query_id = id;
        q.mt1 = minutiae_template(ex_minutiae, TemplateVariant::Latent1);
        q.mt2 = minutiae_template(ex_minutiae2.empty() ? ex_minutiae : ex_minutiae2, TemplateVariant::Latent2);
        q.tt = std::move(tt);
        save_query(q, ex_out);
      } else {
        SubjectRecord r;
        r.subject_id = id;
        r.minutiae_template = minutiae_template(ex_minutiae, TemplateVariant::Reference);
        r.texture_template = std::move(tt);
        save_reference(r, ex_out);
      }
    } else if (*enroll_cmd) {
      std::vector<SubjectRecord> records;
      for (const auto& p : gather(en_refs, en_list)) records.push_back(load_reference(p));
      const ReferenceDb db = enroll(records, en_db);
      std::cout << "enrolled " << db.size() << " subjects, manifest " << db.manifest().hash() << "\n";
    } else if (*search_cmd) {
      const ReferenceDb db = ReferenceDb::open(se_db);
      const IdentificationConfig cfg = load_config(se_config);
      std::vector<CandidateList> lists;
      std::string breakdown;
      for (const auto& p : gather(se_queries, se_list)) {
        const LatentQuery q = load_query(p);
        if (db.size() == 0) throw Error(ErrorCode::EmptyDb, "reference database is empty");
        const auto scores = score_all(q, db.subjects(), cfg);
        lists.push_back(rank_candidates(q.query_id, db.subjects(), scores, se_k));
        if (!se_scores.empty()) {
          for (std::size_t i = 0; i < scores.size(); ++i) {
            breakdown += score_breakdown_json(q.query_id, db.subjects()[i].subject_id, scores[i]) + "\n";
          }
        }
      }
      std::ostringstream csv;
      write_candidate_csv(csv, lists);
      emit(se_out, csv.str());
      if (!se_scores.empty()) emit(se_scores, breakdown);
    } else if (*eval) {
      const auto lists = load_lists(ev_lists);
      const auto cmc = compute_cmc(lists, load_truth(ev_truth), ev_kmax);
      emit(ev_out, cmc.to_csv());
    } else if (*fuse) {
      const auto ours = load_lists(fu_ours);
      const auto theirs = load_lists(fu_theirs);
      std::map<std::string, const CandidateList*> by_query;
      for (const auto& l : theirs) by_query[l.query_id] = &l;
      const FusionMode mode = fu_mode == "borda" ? FusionMode::Borda : FusionMode::ScoreEqualWeight;
      std::vector<CandidateList> fused;
      for (const auto& l : ours) {
        const auto it = by_query.find(l.query_id);
        if (it == by_query.end()) throw Error(ErrorCode::QueryMismatch, "no external list for query '" + l.query_id + "'");
        fused.push_back(fuse_external_scores(l, *it->second, mode, fu_depth));
      }
      std::ostringstream csv;
      write_candidate_csv(csv, fused);
      emit(fu_out, csv.str());
    } else if (*synth) {
      DistortionSpec base;
      if (!sy_spec.empty()) {
        const auto bytes = read_file_bytes(sy_spec);
        base = DistortionSpec::from_json(std::string(bytes.begin(), bytes.end()));
      }
      FieldSpec field;
      if (!sy_patches.empty()) field.patch_types = parse_subset(sy_patches);
      const fs::path out = sy_out;
      fs::create_directories(out / "refs");
      fs::create_directories(out / "queries");
      fs::create_directories(out / "truth");
      std::string refs_list, queries_list, truth_csv = "query_id,subject_id\n";
      for (std::size_t i = 0; i < sy_subjects; ++i) {
        char sid[32], qid[32];
        std::snprintf(sid, sizeof sid, "S%05zu", i);
        std::snprintf(qid, sizeof qid, "Q%05zu", i);
        const SubjectRecord ref = generate_reference(derive_seed(seed, 2 * i), sy_minutiae, field, sid);
        DistortionSpec spec = base;
        spec.seed = derive_seed(seed ^ base.seed, 2 * i + 1);
        if (sy_random_rigid) {
          Rng rng(spec.seed ^ 0x5bd1e995ull);
          double rot = rng.uniform(-kPi, kPi);
          if (rot == -kPi) rot = kPi;
          spec.centered_rigid(rot, rng.uniform(-sy_max_shift, sy_max_shift), rng.uniform(-sy_max_shift, sy_max_shift),
                              field.width, field.height);
        }
        const LatentSample sample = derive_latent(ref, spec, qid);
        save_reference(ref, (out / "refs" / sid).string());
        save_query(sample.query, (out / "queries" / qid).string());
        emit((out / "truth" / (std::string(qid) + ".json")).string(), ground_truth_json(sample) + "\n");
        refs_list += std::string("refs/") + sid + "\n";
        queries_list += std::string("queries/") + qid + "\n";
        truth_csv += std::string(qid) + "," + sid + "\n";
      }
      emit((out / "refs.txt").string(), refs_list);
      emit((out / "queries.txt").string(), queries_list);
      emit((out / "truth.csv").string(), truth_csv);
    } else if (*sfs) {
      SfsBenchmark bench;
      bench.config = load_config(sf_config);
      for (const auto& p : gather({}, sf_refs)) bench.subjects.push_back(load_reference(p));
      for (const auto& p : gather({}, sf_queries)) bench.queries.push_back(load_query(p));
      bench.truth = load_truth(sf_truth);
      if (bench.subjects.empty()) throw Error(ErrorCode::EmptyDb, "no references listed");
      std::vector<PatchType> catalog = bench.subjects.front().minutiae_template.descriptors.patch_types;
      if (!sf_catalog.empty()) catalog = parse_subset(sf_catalog);
      const auto steps = sfs_patch_selection(bench, catalog, sf_max_k);
      std::string csv = "step,patch_type,rank1\n";
      for (std::size_t i = 0; i < steps.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", steps[i].rank1);
        csv += std::to_string(i + 1) + "," + std::string(patch_type_name(steps[i].added)) + "," + buf + "\n";
      }
      emit(sf_out, csv);
    } else if (*validate) {
      bool all_ok = true;
      auto report = nlohmann::ordered_json::array();
      for (const auto& f : va_files) {
        const auto t = load_template(f);
        const ValidationReport r = std::visit([](const auto& x) { return validate_template(x); }, t);
        all_ok = all_ok && r.ok();
        report.push_back({{"file", f}, {"ok", r.ok()}, {"violations", r.violations}});
      }
      std::cout << report.dump(2) << "\n";
      return all_ok ? 0 : 3;
    }
  } catch (const Error& e) {
    std::cerr << "lfid: " << e.what() << "\n";
    return is_data_integrity_error(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "lfid: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
