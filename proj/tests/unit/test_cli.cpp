#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("rescuesim_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args, const std::string& env = "unset RESCUESIM_SEED;") {
  static int n = 0;
  const auto out = scratch() / ("stdout" + std::to_string(n));
  const auto err = scratch() / ("stderr" + std::to_string(n++));
  const std::string cmd = env + " '" + std::string(RESCUESIM_CLI_PATH) + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(("sh -c \"" + cmd + "\"").c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

nlohmann::json effective(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "effective_config.json")); }

}  // namespace

TEST_CASE("se-verify prints a summary and exits 0") {
  const auto dir = scratch() / "se";
  const auto r = run("se-verify --samples 20 --seed 7 -o " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("leader within resolution bound  20/20") != std::string::npos);
  CHECK(r.out.find("follower within one grid cell   20/20") != std::string::npos);
  CHECK(fs::exists(dir / "se_verify.csv"));
  CHECK(effective(dir)["seeds"]["base"] == 7);
}

TEST_CASE("usage and config errors exit 1") {
  auto r = run("consensus -c /definitely/missing.json -o " + (scratch() / "missing").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("/definitely/missing.json") != std::string::npos);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("consensus --no-such-flag").code == 1);
  CHECK(run("").code == 1);
  r = run("consensus -s consensus.comittee=3 -o " + (scratch() / "typo").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("consensus.comittee") != std::string::npos);
  r = run("sweep --param gamma --values 1 -o " + (scratch() / "badsweep").string());
  CHECK(r.code == 1);
}

TEST_CASE("overrides appear verbatim in the effective config") {
  const auto dir = scratch() / "ov";
  const auto r = run("consensus -o " + dir.string() +
                     " -s consensus.heights=5 -s consensus.block_txs=33 -s network.delta=0.5 -s consensus.scheme=art");
  REQUIRE(r.code == 0);
  const auto e = effective(dir);
  CHECK(e["consensus"]["heights"] == 5);
  CHECK(e["consensus"]["block_txs"] == 33);
  CHECK(e["network"]["delta"] == 0.5);
  CHECK(e["consensus"]["scheme"] == "art");
  CHECK(fs::exists(dir / "heights.csv"));
  CHECK(fs::exists(dir / "summary.json"));
}

TEST_CASE("seed handling and determinism") {
  const auto a = scratch() / "seed_a";
  const auto b = scratch() / "seed_b";
  const auto c = scratch() / "seed_c";
  const std::string common = " -s consensus.heights=8 -s network.gst=20";
  REQUIRE(run("consensus --seed 11 -o " + a.string() + common).code == 0);
  REQUIRE(run("consensus --seed 11 -o " + b.string() + common).code == 0);
  CHECK(slurp(a / "heights.csv") == slurp(b / "heights.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));

  REQUIRE(run("consensus -o " + c.string() + common, "RESCUESIM_SEED=11;export RESCUESIM_SEED;").code == 0);
  CHECK(effective(c)["seeds"]["base"] == 11);
  CHECK(slurp(c / "heights.csv") == slurp(a / "heights.csv"));

  const auto d = scratch() / "seed_d";
  REQUIRE(run("consensus --seed 4 -o " + d.string() + common, "RESCUESIM_SEED=11;export RESCUESIM_SEED;").code == 0);
  CHECK(effective(d)["seeds"]["base"] == 4);

  CHECK(run("consensus -o " + (scratch() / "seed_bad").string(), "RESCUESIM_SEED=abc;export RESCUESIM_SEED;").code ==
        1);
}

TEST_CASE("config file plus overrides") {
  const auto cfg = scratch() / "scenario.json";
  std::ofstream(cfg) << R"({"consensus": {"heights": 6}, "seeds": {"base": 21}})";
  const auto dir = scratch() / "file";
  REQUIRE(run("consensus -c " + cfg.string() + " -s consensus.heights=4 -o " + dir.string(),
              "RESCUESIM_SEED=5;export RESCUESIM_SEED;")
              .code == 0);
  const auto e = effective(dir);
  CHECK(e["consensus"]["heights"] == 4);
  CHECK(e["seeds"]["base"] == 21);
}

TEST_CASE("outputs stay under --out") {
  const auto dir = scratch() / "iso" / "nested";
  REQUIRE(run("offload -s offload.repetitions=2 -o " + dir.string()).code == 0);
  std::size_t files = 0;
  for (const auto& f : fs::directory_iterator(scratch() / "iso")) {
    CHECK(f.path() == dir);
    ++files;
  }
  CHECK(files == 1);
  CHECK(fs::exists(dir / "offload.csv"));
  CHECK(fs::exists(dir / "effective_config.json"));
}

TEST_CASE("pb sweep writes the rounds table") {
  const auto dir = scratch() / "sweep";
  const auto r = run("sweep --param pb --values 0,0.1,0.2,0.3 --schemes proposal,art,naive -s consensus.heights=10 -o " +
                     dir.string());
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "sweep_pb.csv");
  CHECK(csv.rfind("pb,scheme,seeds,mean_rounds,stderr_rounds,mean_latency_s,completed\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  CHECK(r.out == csv);
}

TEST_CASE("learn and report") {
  const auto dir = scratch() / "learn";
  auto r = run("learn --scheme greedy -s learning.slots=50 -o " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "training.csv"));
  CHECK(nlohmann::json::parse(slurp(dir / "summary.json"))["scheme"] == "greedy");
  CHECK(run("learn --scheme sarsa -o " + dir.string()).code == 1);

  const auto tdir = scratch() / "traced";
  REQUIRE(run("consensus --trace -s consensus.heights=3 -o " + tdir.string()).code == 0);
  r = run("report " + (tdir / "trace.jsonl").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("trace lines") != std::string::npos);
  r = run("report " + tdir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("mean_rounds") != std::string::npos);
  CHECK(run("report " + (scratch() / "nothing.jsonl").string()).code == 1);
}
