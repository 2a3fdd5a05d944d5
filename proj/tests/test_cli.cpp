// Runs the nlphy executable as a subprocess.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("nlphy_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args, const std::string& env = "") {
  const fs::path o = scratch() / "stdout.txt";
  const fs::path e = scratch() / "stderr.txt";
  const std::string cmd = env + " '" + std::string(NLPHY_CLI_PATH) + "' " + args + " >'" + o.string() + "' 2>'" +
                          e.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

const char* kSmall = R"({"scenario":"cli","n_rb":1,"frames":3,"snr_db":[9,12],"detector":"mmse","seed":2})";

}  // namespace

TEST_CASE("cli: run twice gives byte-identical summary.json") {
  const fs::path cfg = write_config("small.json", kSmall);
  const fs::path a = scratch() / "a";
  const fs::path b = scratch() / "b";
  Result r1 = run("run --config '" + cfg.string() + "' --out '" + a.string() + "' --jobs 1");
  REQUIRE_MESSAGE(r1.code == 0, r1.err);
  Result r2 = run("run --config '" + cfg.string() + "' --out '" + b.string() + "' --jobs 3");
  REQUIRE_MESSAGE(r2.code == 0, r2.err);
  CHECK(nlohmann::json::parse(r1.out)["status"] == "ok");
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(slurp(a / "snr9_boost0/metrics.csv") == slurp(b / "snr9_boost0/metrics.csv"));
  CHECK(fs::exists(a / "config.resolved.json"));
  CHECK(fs::exists(a / "snr12_boost0/baseline/events.csv"));
}

TEST_CASE("cli: resolved config reruns to the same summary") {
  const fs::path cfg = write_config("small2.json", kSmall);
  const fs::path a = scratch() / "r1";
  const fs::path b = scratch() / "r2";
  REQUIRE(run("run --config '" + cfg.string() + "' --out '" + a.string() + "'").code == 0);
  REQUIRE(run("run --config '" + (a / "config.resolved.json").string() + "' --out '" + b.string() + "'").code == 0);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("cli: --seed overrides the config seed") {
  const fs::path cfg = write_config("small3.json", kSmall);
  const fs::path a = scratch() / "s7";
  REQUIRE(run("run --config '" + cfg.string() + "' --out '" + a.string() + "' --seed 7").code == 0);
  const auto j = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(j["seeds"]["base"] == 7);
  CHECK(nlohmann::json::parse(slurp(a / "config.resolved.json"))["seed"] == 7);
}

TEST_CASE("cli: NLPHY_OUT_DIR is used when --out is absent") {
  const fs::path cfg = write_config("small4.json", kSmall);
  const fs::path env_dir = scratch() / "from_env";
  const Result r = run("run --config '" + cfg.string() + "'", "NLPHY_OUT_DIR='" + env_dir.string() + "'");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(env_dir / "summary.json"));

  const fs::path flag_dir = scratch() / "from_flag";
  REQUIRE(run("run --config '" + cfg.string() + "' --out '" + flag_dir.string() + "'",
              "NLPHY_OUT_DIR='" + (scratch() / "unused").string() + "'")
              .code == 0);
  CHECK(fs::exists(flag_dir / "summary.json"));
  CHECK(!fs::exists(scratch() / "unused"));
}

TEST_CASE("cli: sweep writes one row per axis value") {
  const fs::path cfg = write_config(
      "boost.json", R"({"n_rb":1,"frames":2,"snr_db":12,"dmrs_boost_db":[0,3,6],"detector":"mmse"})");
  const fs::path out = scratch() / "sweep";
  const Result r = run("sweep --axis boost --config '" + cfg.string() + "' --out '" + out.string() + "'");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream csv(slurp(out / "sweep.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);
  CHECK(fs::exists(out / "boost_6/metrics.csv"));
}

TEST_CASE("cli: validation failures exit non-zero with a JSON error on stderr") {
  const fs::path bad = write_config("bad.json", R"({"n_bs":4,"framez":10})");
  const Result r = run("run --config '" + bad.string() + "' --out '" + (scratch() / "bad").string() + "'");
  CHECK(r.code != 0);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"] == "config_error");
  CHECK(j["message"].get<std::string>().find("framez") != std::string::npos);
  CHECK(!fs::exists(scratch() / "bad"));

  const fs::path range = write_config("range.json", R"({"frames":0})");
  CHECK(run("run --config '" + range.string() + "'").code != 0);

  const Result axis = run("sweep --axis rho --config '" + range.string() + "'");
  CHECK(axis.code != 0);
  CHECK(nlohmann::json::parse(axis.err)["error"] == "usage_error");

  const Result missing = run("run --config /nonexistent/x.json");
  CHECK(missing.code != 0);
  CHECK(nlohmann::json::parse(missing.err)["error"] == "io_error");
}

TEST_CASE("cli: oracle reports matches") {
  const Result r = run("oracle --kind sphere --trials 40 --dims 4x4");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["trials"] == 40);
  CHECK(j["matches"] == 40);
  CHECK(j["passed"] == true);

  const Result bad = run("oracle --kind vp --dims 3by3");
  CHECK(bad.code != 0);
  CHECK(nlohmann::json::parse(bad.err)["error"] == "invalid_argument");
}

TEST_CASE("cli: mcs-table prints the ladder") {
  const Result r = run("mcs-table");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("index,M,rate,efficiency\n", 0) == 0);
  CHECK(r.out.find("\n0,4,") != std::string::npos);
}
