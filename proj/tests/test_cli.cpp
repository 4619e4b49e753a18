#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "cot/io.hpp"
#include "cot/synth.hpp"
#include "cot/types.hpp"

using namespace cot;

namespace {

const std::filesystem::path& work_dir() {
  static const std::filesystem::path dir = [] {
    const auto d = std::filesystem::temp_directory_path() / "cot_unit_cli";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string in_work(const std::string& name) {
  return (work_dir() / name).string();
}

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string out_path = in_work("stdout." + std::to_string(counter));
  const std::string err_path = in_work("stderr." + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(COT_CLI_PATH) + " " + args + " > " +
                          out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), slurp(out_path), slurp(err_path)};
}

std::string write_text(const std::string& name, const std::string& content) {
  const std::string path = in_work(name);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  REQUIRE(out.good());
  return path;
}

// Labeled validation set and an unlabeled shifted target, both K=4.
struct Fixture {
  std::string val_path;
  std::string target_path;
};

const std::string& sim_config_path() {
  static const std::string path = write_text(
      "sim.json",
      "{\"num_classes\": 3, \"source\": {\"n_samples\": 400, \"accuracy\": "
      "0.85, \"seed\": 9}, \"n_target\": 300, \"sweep\": [{\"accuracy\": "
      "0.8}, {\"accuracy\": 0.65, \"extra_temperature\": 1.3}, "
      "{\"accuracy\": 0.5, \"extra_temperature\": 1.6}]}");
  return path;
}

// Runs `simulate` once; later tests reuse the directory.
const std::string& simulated_dir() {
  static const std::string dir = [] {
    const std::string d = in_work("sim");
    const int code =
        std::system((std::string(COT_CLI_PATH) + " simulate --config " +
                     sim_config_path() + " --out-dir " + d +
                     " > /dev/null 2>&1")
                        .c_str());
    REQUIRE(code == 0);
    return d;
  }();
  return dir;
}

const Fixture& fixture() {
  static const Fixture fix = [] {
    SynthConfig val_config;
    val_config.num_classes = 4;
    val_config.label_dist = LabelDistribution::uniform(4);
    val_config.n_samples = 300;
    val_config.accuracy = 0.85;
    val_config.seed = 42;
    const std::string val_path = in_work("val.csv");
    write_logits_csv(val_path, generate(val_config));

    SynthConfig target_config = val_config;
    target_config.n_samples = 200;
    target_config.accuracy = 0.7;
    target_config.extra_temperature = 1.3;
    target_config.seed = 43;
    const LogitsDataset labeled = generate(target_config);
    const LogitsDataset target(
        4, std::vector<std::optional<std::int32_t>>(labeled.size()),
        labeled.logits());
    const std::string target_path = in_work("target.csv");
    write_logits_csv(target_path, target);
    return Fixture{val_path, target_path};
  }();
  return fix;
}

}  // namespace

TEST_CASE("help exits zero, missing subcommand exits two") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("estimate --help").exit_code == 0);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("emd subcommand prints the distance and small plans") {
  const std::string a = write_text(
      "emd_a.csv", "weight,x_0,x_1,x_2\n1,0.8,0.1,0.1\n");
  const std::string b = write_text("emd_b.csv", "weight,x_0,x_1,x_2\n1,1,0,0\n");
  const RunResult result = run_cli("emd " + a + " " + b + " --certify");
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("emd 0.4\n") != std::string::npos);
  CHECK(result.out.find("mass") != std::string::npos);

  CHECK(run_cli("emd " + a + " " + in_work("absent_measure.csv")).exit_code ==
        2);
}

TEST_CASE("calibrate then estimate pipeline produces deterministic reports") {
  const Fixture& fix = fixture();
  const std::string calib = in_work("calibration.json");

  const RunResult cal =
      run_cli("calibrate --val " + fix.val_path + " --out " + calib);
  CHECK(cal.exit_code == 0);
  CHECK(cal.out.find("temperature") != std::string::npos);
  REQUIRE(std::filesystem::exists(calib));

  const std::string est1 = in_work("estimate1.json");
  const std::string flags = "estimate --method cot --target " +
                            fix.target_path + " --val " + fix.val_path +
                            " --calib " + calib + " --out ";
  const RunResult run1 = run_cli(flags + est1);
  CHECK(run1.exit_code == 0);
  CHECK(run1.out.find("COT estimated error") != std::string::npos);
  CHECK(slurp(est1).find("\"method\": \"COT\"") != std::string::npos);

  const std::string est2 = in_work("estimate2.json");
  CHECK(run_cli(flags + est2).exit_code == 0);
  CHECK(slurp(est1) == slurp(est2));
}

TEST_CASE("estimate accepts a label distribution instead of logits") {
  const Fixture& fix = fixture();
  const std::string dist =
      write_text("dist.json", "[0.25, 0.25, 0.25, 0.25]");
  const RunResult result =
      run_cli("estimate --method cot --target " + fix.target_path +
              " --label-dist " + dist + " --out " + in_work("est_dist.json"));
  CHECK(result.exit_code == 0);
}

TEST_CASE("a small batch size warns on stderr but still runs") {
  const Fixture& fix = fixture();
  const RunResult result = run_cli(
      "estimate --method cot --target " + fix.target_path + " --val " +
      fix.val_path + " --batch-size 20 --out " + in_work("est_small.json"));
  CHECK(result.exit_code == 0);
  CHECK(result.err.find("warning") != std::string::npos);
}

TEST_CASE("estimate validation failures exit two") {
  const Fixture& fix = fixture();
  const std::string target = " --target " + fix.target_path;
  const std::string out = " --out " + in_work("unused.json");

  CHECK(run_cli("estimate --method atc" + target + out).exit_code == 2);
  CHECK(run_cli("estimate --method cot" + target + out).exit_code == 2);
  CHECK(run_cli("estimate --method gde" + target + out).exit_code == 2);
  CHECK(run_cli("estimate --method warp" + target + out).exit_code == 2);
  CHECK(run_cli("estimate --method atc --score xx" + target + " --val " +
                fix.val_path + out)
            .exit_code == 2);
  CHECK(run_cli("estimate --method ac" + out).exit_code == 2);

  const std::string bad =
      write_text("bad.csv", "logit_0,logit_1\n0.5,0.5\n");
  const RunResult result =
      run_cli("estimate --method ac --target " + bad + out);
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("header") != std::string::npos);
}

TEST_CASE("calibrate rejects unlabeled validation data") {
  const Fixture& fix = fixture();
  const RunResult result =
      run_cli("calibrate --val " + fix.target_path + " --out " +
              in_work("cal_bad.json"));
  CHECK(result.exit_code == 2);
}

TEST_CASE("simulate demands exactly one input recipe") {
  CHECK(run_cli("simulate --out-dir " + in_work("sim_none")).exit_code == 2);
  CHECK(run_cli("simulate --default --config " + sim_config_path() +
                " --out-dir " + in_work("sim_both"))
            .exit_code == 2);
}

TEST_CASE("simulate then evaluate round-trip on a small sweep") {
  const std::string& sim_dir = simulated_dir();
  for (const char* name : {"config.json", "source.csv", "manifest.json",
                           "target_00.csv", "target_01.csv", "target_02.csv"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(sim_dir) / name));
  }

  // Reruns must be byte-identical.
  const std::string sim_dir2 = in_work("sim2");
  CHECK(run_cli("simulate --config " + sim_config_path() + " --out-dir " +
                sim_dir2)
            .exit_code == 0);
  for (const char* name : {"manifest.json", "source.csv", "target_01.csv"}) {
    CHECK(slurp(sim_dir + "/" + name) == slurp(sim_dir2 + "/" + name));
  }

  const std::string report_dir = in_work("reports");
  const RunResult eval = run_cli(
      "evaluate --manifest " + sim_dir + "/manifest.json --val " + sim_dir +
      "/source.csv --methods cot,ac,atc_mc --out-dir " + report_dir);
  CHECK(eval.exit_code == 0);
  CHECK(eval.out.find("wrote reports") != std::string::npos);
  for (const char* name :
       {"evaluation_cot.json", "scatter_cot.csv", "evaluation_ac.json",
        "scatter_ac.csv", "evaluation_atc_mc.json", "scatter_atc_mc.csv"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(report_dir) / name));
  }
  CHECK(slurp(report_dir + "/evaluation_cot.json").find("\"r_squared\"") !=
        std::string::npos);
  CHECK(slurp(report_dir + "/scatter_ac.csv")
            .find("target_id,predicted,true_error") == 0);
}

TEST_CASE("evaluate validation failures exit two") {
  const std::string& sim_dir = simulated_dir();
  const std::string manifest = sim_dir + "/manifest.json";
  const std::string out = " --out-dir " + in_work("reports_unused");

  CHECK(run_cli("evaluate --manifest " + manifest + " --val " + sim_dir +
                "/source.csv --methods gde" + out)
            .exit_code == 2);
  CHECK(run_cli("evaluate --manifest " + manifest + " --val " + sim_dir +
                "/source.csv --methods cot,bogus" + out)
            .exit_code == 2);

  const std::string incomplete = write_text(
      "manifest_noerror.json",
      "{\"entries\": [{\"target_id\": \"t0\", \"path\": \"sim/target_00.csv\""
      "}]}");
  const RunResult result =
      run_cli("evaluate --manifest " + incomplete + " --val " + sim_dir +
              "/source.csv" + out);
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("true_error") != std::string::npos);
}
