#include "nlphy/nlphy.h"

#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>

#include "nlphy/constellation.hpp"
#include "nlphy/error.hpp"
#include "nlphy/experiment.hpp"
#include "nlphy/oracle.hpp"

struct nlphy_experiment {
  nlphy::ExperimentConfig cfg;
  int jobs = 0;
  std::optional<nlphy::ExperimentResult> result;
  std::string summary;
};

namespace {

thread_local std::string g_last_error;

nlphy_status set_error(nlphy_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

nlphy_status map_code(nlphy::ErrorCode c) {
  switch (c) {
    case nlphy::ErrorCode::ConfigError: return NLPHY_ERR_CONFIG;
    case nlphy::ErrorCode::IoError: return NLPHY_ERR_IO;
    case nlphy::ErrorCode::RankDeficient:
    case nlphy::ErrorCode::Singular:
    case nlphy::ErrorCode::DegenerateMeasurement: return NLPHY_ERR_NUMERIC;
    case nlphy::ErrorCode::LengthMismatch:
    case nlphy::ErrorCode::TooManyLayers:
    case nlphy::ErrorCode::DimMismatch: return NLPHY_ERR_INVALID_ARG;
  }
  return NLPHY_ERR_INTERNAL;
}

template <class F>
nlphy_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const nlphy::Error& e) {
    return set_error(map_code(e.code()), e.what());
  } catch (const std::invalid_argument& e) {
    return set_error(NLPHY_ERR_INVALID_ARG, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NLPHY_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NLPHY_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(NLPHY_ERR_INTERNAL, "unknown exception");
  }
}

nlphy_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  const size_t n = s.size() + 1;
  if (needed) *needed = n;
  if (buf == nullptr && cap == 0) return NLPHY_OK;
  if (buf == nullptr || cap < n)
    return set_error(NLPHY_ERR_INVALID_ARG, "buffer too small: need " + std::to_string(n) + " bytes");
  std::memcpy(buf, s.c_str(), n);
  return NLPHY_OK;
}

nlphy_status finish(nlphy_experiment* exp, nlphy::ExperimentResult r, const char* out_dir) {
  exp->summary = nlphy::summary_json(exp->cfg, r);
  if (out_dir) nlphy::write_artifacts(exp->cfg, r, out_dir);
  exp->result = std::move(r);
  return NLPHY_OK;
}

}  // namespace

extern "C" {

const char* nlphy_version(void) { return "1.0.0"; }

const char* nlphy_status_string(nlphy_status s) {
  switch (s) {
    case NLPHY_OK: return "ok";
    case NLPHY_ERR_CONFIG: return "config_error";
    case NLPHY_ERR_IO: return "io_error";
    case NLPHY_ERR_NUMERIC: return "numeric_error";
    case NLPHY_ERR_INVALID_ARG: return "invalid_argument";
    case NLPHY_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* nlphy_last_error(void) { return g_last_error.c_str(); }

nlphy_status nlphy_experiment_load(const char* path, nlphy_experiment** out) {
  return guarded([&] {
    if (!path || !out) return set_error(NLPHY_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    auto exp = std::make_unique<nlphy_experiment>();
    exp->cfg = nlphy::load_config(path);
    *out = exp.release();
    return NLPHY_OK;
  });
}

nlphy_status nlphy_experiment_from_json(const char* json_text, nlphy_experiment** out) {
  return guarded([&] {
    if (!json_text || !out) return set_error(NLPHY_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    auto exp = std::make_unique<nlphy_experiment>();
    exp->cfg = nlphy::parse_config(json_text);
    *out = exp.release();
    return NLPHY_OK;
  });
}

void nlphy_experiment_free(nlphy_experiment* exp) { delete exp; }

nlphy_status nlphy_experiment_set_seed(nlphy_experiment* exp, uint64_t seed) {
  return guarded([&] {
    if (!exp) return set_error(NLPHY_ERR_INVALID_ARG, "null experiment");
    exp->cfg.sim.seed = seed;
    return NLPHY_OK;
  });
}

nlphy_status nlphy_experiment_set_jobs(nlphy_experiment* exp, int jobs) {
  return guarded([&] {
    if (!exp) return set_error(NLPHY_ERR_INVALID_ARG, "null experiment");
    exp->jobs = jobs;
    return NLPHY_OK;
  });
}

nlphy_status nlphy_experiment_run(nlphy_experiment* exp, const char* out_dir) {
  return guarded([&] {
    if (!exp) return set_error(NLPHY_ERR_INVALID_ARG, "null experiment");
    return finish(exp, nlphy::run_experiment(exp->cfg, exp->jobs), out_dir);
  });
}

nlphy_status nlphy_experiment_sweep(nlphy_experiment* exp, const char* axis, const char* out_dir) {
  return guarded([&] {
    if (!exp || !axis) return set_error(NLPHY_ERR_INVALID_ARG, "null argument");
    const auto a = nlphy::parse_axis(axis);
    return finish(exp, nlphy::run_sweep(exp->cfg, a, exp->jobs), out_dir);
  });
}

nlphy_status nlphy_experiment_summary_json(const nlphy_experiment* exp, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    if (!exp) return set_error(NLPHY_ERR_INVALID_ARG, "null experiment");
    if (!exp->result) return set_error(NLPHY_ERR_INVALID_ARG, "experiment has not been run");
    return copy_out(exp->summary, buf, cap, needed);
  });
}

nlphy_status nlphy_experiment_resolved_json(const nlphy_experiment* exp, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    if (!exp) return set_error(NLPHY_ERR_INVALID_ARG, "null experiment");
    return copy_out(nlphy::resolved_json(exp->cfg), buf, cap, needed);
  });
}

nlphy_status nlphy_oracle_run(const char* kind, int trials, int rows, int cols, uint64_t seed,
                              nlphy_oracle_report* out) {
  return guarded([&] {
    if (!kind || !out) return set_error(NLPHY_ERR_INVALID_ARG, "null argument");
    const std::string k = kind;
    if (k != "sphere" && k != "llr" && k != "vp")
      return set_error(NLPHY_ERR_INVALID_ARG, "oracle kind must be one of sphere, llr, vp");
    if (trials < 1) return set_error(NLPHY_ERR_INVALID_ARG, "trials must be >= 1");
    if (rows < 1 || cols < 1) return set_error(NLPHY_ERR_INVALID_ARG, "dims must be >= 1");
    // Exhaustive references grow as M^K (or 7^(2K) for vp); keep them tractable.
    const int streams = k == "vp" ? rows : cols;
    const int limit = k == "sphere" ? 5 : k == "llr" ? 8 : 4;
    if (streams > limit || rows > 64 || cols > 64)
      return set_error(NLPHY_ERR_INVALID_ARG,
                       "oracle " + k + ": at most " + std::to_string(limit) + " streams for exhaustive search");
    const auto r = nlphy::oracle::run(k, trials, rows, cols, seed);
    *out = {r.rows, r.cols, r.trials, r.matches, r.max_deviation, r.max_perturbation, r.seconds};
    return NLPHY_OK;
  });
}

nlphy_status nlphy_mcs_table_csv(char* buf, size_t cap, size_t* needed) {
  return guarded([&] { return copy_out(nlphy::McsTable::standard().to_csv(), buf, cap, needed); });
}

}  // extern "C"
