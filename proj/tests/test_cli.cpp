#include <catch2/catch_amalgamated.hpp>

#include <abl/common.hpp>
#include <abl/dataset.hpp>
#include <abl/trainer.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ABL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status < 0 ? status : (status >> 8) & 0xFF;
}

fs::path work_dir() {
  static fs::path dir = [] {
    auto p = fs::temp_directory_path() / "abl_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("gen-data writes a loadable dataset with a run manifest") {
  auto dir = work_dir() / "data_a";
  REQUIRE(run("gen-data --semantics add --glyphs easy --lengths 5..6 --per-length 4 --seed 9 --out " +
              q(dir)) == 0);
  for (const char* f : {"manifest.json", "images.bin", "labels.bin", "truth.sidecar", "run_manifest.json"})
    REQUIRE(fs::exists(dir / f));
  auto ds = abl::data::load(dir.string());
  REQUIRE(ds.instances.size() == 8);
  REQUIRE(abl::data::load_truth(dir.string()).size() == 8);
}

TEST_CASE("gen-data is reproducible bit for bit") {
  auto a = work_dir() / "data_b1";
  auto b = work_dir() / "data_b2";
  const std::string flags = "gen-data --semantics xor --glyphs hard --lengths 5,7 --per-length 4 --seed 4 --out ";
  REQUIRE(run(flags + q(a)) == 0);
  REQUIRE(run(flags + q(b)) == 0);
  for (const char* f : {"images.bin", "labels.bin", "truth.sidecar"})
    REQUIRE(abl::file_checksum((a / f).string()) == abl::file_checksum((b / f).string()));
}

TEST_CASE("validation failures exit with code 1") {
  REQUIRE(run("gen-data --lengths 4..5 --per-length 2 --out " + q(work_dir() / "bad")) == 1);
  REQUIRE(run("gen-data --semantics mul --per-length 2 --out " + q(work_dir() / "bad2")) == 1);
  REQUIRE(run("train --data nowhere --out " + q(work_dir() / "bad3") +
              " --freeze-perception") == 1);  // missing --from
  REQUIRE(run("report --out " + q(work_dir() / "bad4")) == 1);  // no inputs
  REQUIRE(run("definitely-not-a-subcommand") == 1);
}

TEST_CASE("missing files exit with code 2") {
  REQUIRE(run("train --data " + q(work_dir() / "missing_dataset") + " --out " +
              q(work_dir() / "m1") + " --iters 1") == 2);
  REQUIRE(run("eval --model " + q(work_dir() / "missing_model") + " --data " +
              q(work_dir() / "missing_dataset") + " --out " + q(work_dir() / "e.csv")) == 2);
}

TEST_CASE("train, eval, and report run end to end reproducibly") {
  auto dir = work_dir() / "data_c";
  REQUIRE(run("gen-data --semantics add --glyphs easy --lengths 5..6 --per-length 6 --seed 3 --out " +
              q(dir)) == 0);

  const std::string train_flags =
      " --iters 4 --subsample 3..4 --curriculum 5..6 --seed 11 --perception-epochs 2 "
      "--decision-epochs 40 --data " + q(dir) + " --out ";
  auto m1 = work_dir() / "model_c1";
  auto m2 = work_dir() / "model_c2";
  REQUIRE(run("train" + train_flags + q(m1)) == 0);
  REQUIRE(run("train" + train_flags + q(m2)) == 0);
  for (const char* f : {"perception.net", "decision.net", "features.txt"})
    REQUIRE(abl::file_checksum((m1 / f).string()) == abl::file_checksum((m2 / f).string()));
  REQUIRE(fs::exists(m1 / "training_log.csv"));
  REQUIRE(fs::exists(m1 / "run_manifest.json"));

  {
    std::ifstream log(m1 / "training_log.csv");
    auto rows = abl::trainer::read_log_csv(log);
    REQUIRE(rows.size() == 4);
    REQUIRE(rows.back().perception_accuracy >= 0.0);  // probe column populated
  }

  auto eval_csv = work_dir() / "eval_c.csv";
  REQUIRE(run("eval --model " + q(m1) + " --data " + q(dir) + " --out " + q(eval_csv)) == 0);
  std::ifstream ef(eval_csv);
  std::string header, line;
  REQUIRE(std::getline(ef, header));
  REQUIRE(header == "length,n,accuracy,stderr");
  int rows = 0;
  bool overall = false;
  while (std::getline(ef, line)) {
    if (line.rfind("all,", 0) == 0) overall = true;
    ++rows;
  }
  REQUIRE(rows == 3);  // lengths 5 and 6 plus the overall row
  REQUIRE(overall);

  auto report_dir = work_dir() / "report_c";
  REQUIRE(run("report --log " + q(m1 / "training_log.csv") + " --eval " + q(eval_csv) + " --out " +
              q(report_dir)) == 0);
  for (const char* f :
       {"perception_vs_iteration.csv", "scatter.csv", "convergence.csv", "accuracy_by_length.csv"})
    REQUIRE(fs::exists(report_dir / f));

  // scatter rows carry the success flag per abduction trial
  std::ifstream sc(report_dir / "scatter.csv");
  REQUIRE(std::getline(sc, header));
  REQUIRE(header == "log,iteration,perception_accuracy,consistency,subsample_size,success");
  int scatter_rows = 0;
  while (std::getline(sc, line)) ++scatter_rows;
  REQUIRE(scatter_rows == 4);
}

TEST_CASE("cleanup") { fs::remove_all(work_dir()); }
