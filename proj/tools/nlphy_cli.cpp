// Batch runner over the extern-C API.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlphy/nlphy.h"

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kDefaultOutDir = "nlphy_out";

int exit_code(nlphy_status s) {
  switch (s) {
    case NLPHY_OK: return 0;
    case NLPHY_ERR_CONFIG: return 2;
    case NLPHY_ERR_IO: return 3;
    case NLPHY_ERR_NUMERIC: return 4;
    case NLPHY_ERR_INVALID_ARG: return 5;
    case NLPHY_ERR_INTERNAL: return 6;
  }
  return 6;
}

int report_error(const std::string& kind, const std::string& message, int code) {
  json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return code;
}

int report_status(nlphy_status s) { return report_error(nlphy_status_string(s), nlphy_last_error(), exit_code(s)); }

// --out, then NLPHY_OUT_DIR, then ./nlphy_out.
std::string output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("NLPHY_OUT_DIR"); env && *env) return env;
  return kDefaultOutDir;
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON)")->required();
  sub->add_option("--out", c.out, "output directory (default: $NLPHY_OUT_DIR or ./nlphy_out)");
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--jobs", c.jobs, "parallel simulations (0 = all cores)")->check(CLI::NonNegativeNumber);
}

int run_experiment(const Common& c, const std::optional<std::string>& axis) {
  nlphy_experiment* exp = nullptr;
  nlphy_status s = nlphy_experiment_load(c.config.c_str(), &exp);
  if (s != NLPHY_OK) return report_status(s);
  const std::string out = output_root(c.out);
  if (c.seed) s = nlphy_experiment_set_seed(exp, *c.seed);
  if (s == NLPHY_OK) s = nlphy_experiment_set_jobs(exp, c.jobs);
  if (s == NLPHY_OK)
    s = axis ? nlphy_experiment_sweep(exp, axis->c_str(), out.c_str()) : nlphy_experiment_run(exp, out.c_str());
  if (s != NLPHY_OK) {
    const int rc = report_status(s);
    nlphy_experiment_free(exp);
    return rc;
  }
  std::size_t needed = 0;
  nlphy_experiment_summary_json(exp, nullptr, 0, &needed);
  std::string summary(needed, '\0');
  nlphy_experiment_summary_json(exp, summary.data(), summary.size(), &needed);
  nlphy_experiment_free(exp);

  const json sj = json::parse(summary.c_str());
  json j;
  j["status"] = "ok";
  j["out"] = out;
  j["points"] = sj["points"].size();
  std::cout << j.dump() << std::endl;
  return 0;
}

int run_oracle(const std::string& kind, int trials, const std::string& dims, std::uint64_t seed) {
  static const std::regex re(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(dims, m, re))
    return report_error("invalid_argument", "--dims must look like RxC, e.g. 4x4", exit_code(NLPHY_ERR_INVALID_ARG));
  const int rows = std::stoi(m[1]);
  const int cols = std::stoi(m[2]);
  nlphy_oracle_report r{};
  const nlphy_status s = nlphy_oracle_run(kind.c_str(), trials, rows, cols, seed, &r);
  if (s != NLPHY_OK) return report_status(s);
  json j;
  j["kind"] = kind;
  j["dims"] = dims;
  j["seed"] = seed;
  j["trials"] = r.trials;
  j["matches"] = r.matches;
  j["passed"] = r.matches == r.trials;
  j["max_deviation"] = r.max_deviation;
  if (kind == "vp") j["max_perturbation"] = r.max_perturbation;
  j["seconds"] = r.seconds;
  std::cout << j.dump() << std::endl;
  return r.matches == r.trials ? 0 : 1;
}

int run_mcs_table() {
  std::size_t needed = 0;
  nlphy_status s = nlphy_mcs_table_csv(nullptr, 0, &needed);
  if (s != NLPHY_OK) return report_status(s);
  std::string csv(needed, '\0');
  s = nlphy_mcs_table_csv(csv.data(), csv.size(), &needed);
  if (s != NLPHY_OK) return report_status(s);
  std::cout << csv.c_str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlphy: link-level simulator for nonlinear MU-MIMO processing"};
  app.set_version_flag("--version", nlphy_version());
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "simulate every snr x boost point of a config");
  add_common(run, run_opts);

  Common sweep_opts;
  std::string axis;
  auto* sweep = app.add_subcommand("sweep", "simulate one axis of a config, one row per value");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "snr, boost or n_pe")->required()->check(CLI::IsMember({"snr", "boost", "n_pe"}));

  std::string kind;
  int trials = 100;
  std::string dims = "4x4";
  std::uint64_t oracle_seed = 1;
  auto* oracle = app.add_subcommand("oracle", "check a search against its exhaustive reference");
  oracle->add_option("--kind", kind, "sphere, llr or vp")->required()->check(CLI::IsMember({"sphere", "llr", "vp"}));
  oracle->add_option("--trials", trials, "random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--dims", dims, "RxC: receive antennas x streams (vp: UEs x BS antennas)");
  oracle->add_option("--seed", oracle_seed, "instance seed");

  auto* mcs = app.add_subcommand("mcs-table", "print the MCS ladder as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage_error", e.what(), 64);
  }

  if (run->parsed()) return run_experiment(run_opts, std::nullopt);
  if (sweep->parsed()) return run_experiment(sweep_opts, axis);
  if (oracle->parsed()) return run_oracle(kind, trials, dims, oracle_seed);
  if (mcs->parsed()) return run_mcs_table();
  return report_error("usage_error", "no subcommand", 64);
}
