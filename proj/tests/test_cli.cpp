#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "lfid/ingest.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "lfid_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(LFID_CLI_PATH) + " " + args + " >" + (kWork / "stdout.txt").string() + " 2>" +
                          (kWork / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string w(const std::string& rel) { return (kWork / rel).string(); }

}  // namespace

TEST_CASE("cli end to end") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  {
    std::ofstream spec(w("spec.json"));
    spec << R"({"occlusion_fraction":0.2,"position_jitter_sigma":2,"angle_jitter_sigma":0.05,)"
         << R"("spurious_fraction":0.1,"descriptor_noise_sigma":0.05,"seed":4})";
  }

  CHECK(run("--help") == 0);
  CHECK(run("no-such-command") == 2);
  CHECK(run("search --db " + w("missing")) == 2);

  REQUIRE(run("--seed 11 synth --subjects 5 --minutiae 30 --random-rigid --spec " + w("spec.json") + " --out " +
              w("bench")) == 0);
  CHECK(fs::exists(w("bench/refs/S00000.mt.lfrt")));
  CHECK(fs::exists(w("bench/queries/Q00004.mt2.lfrt")));
  CHECK(fs::exists(w("bench/truth/Q00000.json")));
  CHECK(slurp(w("bench/truth.csv")).rfind("query_id,subject_id\nQ00000,S00000\n", 0) == 0);

  REQUIRE(run("enroll --db " + w("db") + " --list " + w("bench/refs.txt")) == 0);
  CHECK(fs::exists(w("db/manifest.json")));

  REQUIRE(run("search --db " + w("db") + " --top-k 3 --list " + w("bench/queries.txt") + " --out " + w("c.csv") +
              " --scores-json " + w("s.jsonl")) == 0);
  const std::string lists = slurp(w("c.csv"));
  CHECK(lists.rfind("query_id,rank,subject_id,score,", 0) == 0);
  CHECK(std::count(lists.begin(), lists.end(), '\n') == 1 + 5 * 3);
  const std::string scores = slurp(w("s.jsonl"));
  CHECK(std::count(scores.begin(), scores.end(), '\n') == 5 * 5);

  REQUIRE(run("eval --cmc --lists " + w("c.csv") + " --truth " + w("bench/truth.csv") + " --k-max 3 --out " +
              w("cmc.csv")) == 0);
  CHECK(slurp(w("cmc.csv")) == "rank,rate\n1,1\n2,1\n3,1\n");

  SUBCASE("fuse") {
    CHECK(run("fuse --mode borda --ours " + w("c.csv") + " --theirs " + w("c.csv") + " --out " + w("f.csv")) == 0);
    CHECK(slurp(w("f.csv")).rfind("query_id,rank,subject_id,score,", 0) == 0);
    std::ofstream other(w("other.csv"));
    other << "query_id,rank,subject_id,score\nZZZ,1,S00000,1\n";
    other.close();
    CHECK(run("fuse --ours " + w("c.csv") + " --theirs " + w("other.csv")) != 0);
  }
  SUBCASE("eval without a mate on record") {
    std::ofstream t(w("t.csv"));
    t << "query_id,subject_id\nQ00000,S00000\n";
    t.close();
    CHECK(run("eval --cmc --lists " + w("c.csv") + " --truth " + w("t.csv")) == 2);
  }
  SUBCASE("validate") {
    CHECK(run("validate " + w("bench/refs/S00001.mt.lfrt") + " " + w("bench/queries/Q00001.tt.lfrt")) == 0);
    CHECK(slurp(w("stdout.txt")).find("\"ok\": true") != std::string::npos);
    const auto bytes = slurp(w("bench/refs/S00001.mt.lfrt"));
    std::ofstream cut(w("cut.lfrt"), std::ios::binary);
    cut.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    cut.close();
    CHECK(run("validate " + w("cut.lfrt")) == 3);
  }
  SUBCASE("a damaged database is a data error") {
    std::ofstream(w("db/s000002.tt.lfrt"), std::ios::binary | std::ios::app) << "junk";
    CHECK(run("search --db " + w("db") + " " + w("bench/queries/Q00000")) == 3);
  }
  SUBCASE("sfs") {
    REQUIRE(run("sfs --refs " + w("bench/refs.txt") + " --queries " + w("bench/queries.txt") + " --truth " +
                w("bench/truth.csv") + " --max-k 2 --out " + w("sfs.csv")) == 0);
    CHECK(slurp(w("sfs.csv")).rfind("step,patch_type,rank1\n1,", 0) == 0);
  }
  SUBCASE("extract") {
    const auto img = testing_support::grating(200, 200, 0.4);
    lfid::write_pgm(img, w("img.pgm"));
    std::ofstream m(w("m.csv"));
    m << "x,y,alpha\n60,60,0.4\n140,90,3.5\n100,150,0.3\n";
    m.close();
    REQUIRE(run("extract --image " + w("img.pgm") + " --minutiae " + w("m.csv") + " --side latent --out " +
                w("lat")) == 0);
    CHECK(run("validate " + w("lat.mt1.lfrt") + " " + w("lat.mt2.lfrt") + " " + w("lat.tt.lfrt")) == 0);
    REQUIRE(run("extract --image " + w("img.pgm") + " --minutiae " + w("m.csv") + " --out " + w("ref")) == 0);
    CHECK(run("validate " + w("ref.mt.lfrt") + " " + w("ref.tt.lfrt")) == 0);
    CHECK(run("extract --image " + w("img.pgm") + " --minutiae " + w("m.csv") + " --patches Nope --out " +
              w("x")) == 2);
  }
}
