#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("KGSC_CLI");
  REQUIRE_MESSAGE(env != nullptr, "KGSC_CLI must point at the kgsc binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  Workspace() : dir(fs::temp_directory_path() / "kgsc_cli_test") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
};

const Workspace& ws() {
  static Workspace w;
  return w;
}

// One tiny world + kg + both training stages, shared by the cases below.
// Everything is seeded, so later cases can re-run commands and compare bytes.
void ensure_pipeline() {
  static bool done = false;
  if (done) return;
  REQUIRE(run("gen-synthetic --out-dir " + ws().p("world") +
              " --seed 5 --n-seen 4 --n-unseen 2 --n-attributes 6 --min-attr-distance 2"
              " --samples-per-class 10 --test-samples-per-class 5"
              " --feature-dim 16 --word-dim 12") == 0);
  REQUIRE(run("build-kg --triples " + ws().p("world/triples.tsv") + " --vectors " +
              ws().p("world/vectors.txt") + " --seen " + ws().p("world/seen.txt") +
              " --unseen " + ws().p("world/unseen.txt") + " --word-dim 12 --seed 5"
              " --out " + ws().p("kg.json")) == 0);
  REQUIRE(run("train --stage 1 --kg " + ws().p("kg.json") + " --features " +
              ws().p("world/train.feat") + " --labels " + ws().p("world/labels.tsv") +
              " --semantic-dim 16 --channel-dim 8 --epochs 3 --lr 0.002"
              " --batch-size 16 --seed 5 --out " + ws().p("stage1.kgsc")) == 0);
  REQUIRE(run("train --stage 2 --checkpoint " + ws().p("stage1.kgsc") +
              " --features " + ws().p("world/train.feat") + " --labels " +
              ws().p("world/labels.tsv") + " --epochs 2 --seed 5 --out " +
              ws().p("stage2.kgsc")) == 0);
  done = true;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);                    // missing subcommand
  CHECK(run("--help") == 0);
  CHECK(run("no-such-command") == 2);
  CHECK(run("eval --checkpoint a") == 2);  // missing required flags
}

TEST_CASE("missing input files exit with code 2") {
  CHECK(run("build-kg --triples /nonexistent/t.tsv --vectors /nonexistent/v.txt"
            " --seen /nonexistent/s.txt") == 2);
  CHECK(run("export-pca --checkpoint /nonexistent/ck") == 2);
}

TEST_CASE("gen-synthetic produces byte-identical worlds per seed") {
  ensure_pipeline();
  REQUIRE(run("gen-synthetic --out-dir " + ws().p("world_b") +
              " --seed 5 --n-seen 4 --n-unseen 2 --n-attributes 6 --min-attr-distance 2"
              " --samples-per-class 10 --test-samples-per-class 5"
              " --feature-dim 16 --word-dim 12") == 0);
  for (const char* f : {"triples.tsv", "vectors.txt", "labels.tsv", "train.feat",
                        "test.feat"}) {
    CHECK(slurp(ws().dir / "world" / f) == slurp(ws().dir / "world_b" / f));
  }
  // A different seed changes the feature payload.
  REQUIRE(run("gen-synthetic --out-dir " + ws().p("world_c") +
              " --seed 6 --n-seen 4 --n-unseen 2 --n-attributes 6 --min-attr-distance 2"
              " --samples-per-class 10 --test-samples-per-class 5"
              " --feature-dim 16 --word-dim 12") == 0);
  CHECK(slurp(ws().dir / "world/train.feat") !=
        slurp(ws().dir / "world_c/train.feat"));
}

TEST_CASE("build-kg is idempotent and validates categories") {
  ensure_pipeline();
  REQUIRE(run("build-kg --triples " + ws().p("world/triples.tsv") + " --vectors " +
              ws().p("world/vectors.txt") + " --seen " + ws().p("world/seen.txt") +
              " --unseen " + ws().p("world/unseen.txt") + " --word-dim 12 --seed 5"
              " --out " + ws().p("kg_b.json")) == 0);
  CHECK(slurp(ws().dir / "kg.json") == slurp(ws().dir / "kg_b.json"));

  {
    std::ofstream bogus(ws().dir / "bogus.txt");
    bogus << "not_a_category\n";
  }
  CHECK(run("build-kg --triples " + ws().p("world/triples.tsv") + " --vectors " +
            ws().p("world/vectors.txt") + " --seen " + ws().p("bogus.txt") +
            " --word-dim 12 --out " + ws().p("kg_c.json")) == 1);
}

TEST_CASE("train orders stages and reruns deterministically") {
  ensure_pipeline();
  // Stage 2 without a stage-1 checkpoint is rejected up front.
  CHECK(run("train --stage 2 --checkpoint " + ws().p("missing.kgsc") +
            " --features " + ws().p("world/train.feat") + " --labels " +
            ws().p("world/labels.tsv") + " --out " + ws().p("x.kgsc")) == 2);
  // Feeding a stage-2 checkpoint back into stage 2 is a domain error.
  CHECK(run("train --stage 2 --checkpoint " + ws().p("stage2.kgsc") +
            " --features " + ws().p("world/train.feat") + " --labels " +
            ws().p("world/labels.tsv") + " --epochs 1 --out " + ws().p("x.kgsc")) == 1);

  REQUIRE(run("train --stage 1 --kg " + ws().p("kg.json") + " --features " +
              ws().p("world/train.feat") + " --labels " + ws().p("world/labels.tsv") +
              " --semantic-dim 16 --channel-dim 8 --epochs 3 --lr 0.002"
              " --batch-size 16 --seed 5 --out " + ws().p("stage1_b.kgsc")) == 0);
  CHECK(slurp(ws().dir / "stage1.kgsc") == slurp(ws().dir / "stage1_b.kgsc"));
}

TEST_CASE("eval writes reports and honors the exit-code contract") {
  ensure_pipeline();
  REQUIRE(run("eval --checkpoint " + ws().p("stage2.kgsc") + " --features " +
              ws().p("world/test.feat") + " --labels " + ws().p("world/labels.tsv") +
              " --snr-db 15 --episodes 3 --seed 1 --out-dir " + ws().p("eval")) == 0);
  CHECK(fs::exists(ws().dir / "eval/report.csv"));
  CHECK(fs::exists(ws().dir / "eval/report_per_category.csv"));
  CHECK(fs::exists(ws().dir / "eval/manifest.json"));

  const std::string report = slurp(ws().dir / "eval/report.csv");
  CHECK(report.rfind("snr_db,metric,mean,std", 0) == 0);

  // Re-running with the same seed reproduces the report bytes.
  REQUIRE(run("eval --checkpoint " + ws().p("stage2.kgsc") + " --features " +
              ws().p("world/test.feat") + " --labels " + ws().p("world/labels.tsv") +
              " --snr-db 15 --episodes 3 --seed 1 --out-dir " + ws().p("eval_b")) == 0);
  CHECK(report == slurp(ws().dir / "eval_b/report.csv"));

  // Dataset/checkpoint dimension mismatch is a domain error.
  CHECK(run("eval --checkpoint " + ws().p("stage2.kgsc") + " --features " +
            ws().p("world/vectors.txt") + " --labels " + ws().p("world/labels.tsv") +
            " --snr-db 15 --episodes 1 --out-dir " + ws().p("eval_bad")) == 1);

  // Malformed config key value is a named error.
  {
    std::ofstream cfg(ws().dir / "bad.cfg");
    cfg << "episodes = banana\n";
  }
  CHECK(run("eval --checkpoint " + ws().p("stage2.kgsc") + " --features " +
            ws().p("world/test.feat") + " --labels " + ws().p("world/labels.tsv") +
            " --config " + ws().p("bad.cfg") + " --out-dir " + ws().p("eval_cfg")) == 1);
}

TEST_CASE("exports are deterministic with the expected shapes") {
  ensure_pipeline();
  REQUIRE(run("export-pca --checkpoint " + ws().p("stage2.kgsc") + " --out " +
              ws().p("pca.csv")) == 0);
  const std::string pca = slurp(ws().dir / "pca.csv");
  // Header plus one row per category (4 seen + 2 unseen).
  CHECK(std::count(pca.begin(), pca.end(), '\n') == 7);

  REQUIRE(run("export-pca --checkpoint " + ws().p("stage2.kgsc") + " --out " +
              ws().p("pca_b.csv")) == 0);
  CHECK(pca == slurp(ws().dir / "pca_b.csv"));

  REQUIRE(run("export-similarity --checkpoint " + ws().p("stage2.kgsc") +
              " --features " + ws().p("world/test.feat") + " --labels " +
              ws().p("world/labels.tsv") + " --snr-db 15 --top-n 3 --seed 4"
              " --out " + ws().p("sim.csv")) == 0);
  REQUIRE(run("export-similarity --checkpoint " + ws().p("stage2.kgsc") +
              " --features " + ws().p("world/test.feat") + " --labels " +
              ws().p("world/labels.tsv") + " --snr-db 15 --top-n 3 --seed 4"
              " --out " + ws().p("sim_b.csv")) == 0);
  const std::string sim = slurp(ws().dir / "sim.csv");
  CHECK(sim == slurp(ws().dir / "sim_b.csv"));
  // 30 test samples plus the header line.
  CHECK(std::count(sim.begin(), sim.end(), '\n') == 31);
}
