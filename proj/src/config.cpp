#include "nlphy/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nlphy/error.hpp"

namespace nlphy {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key())) bad(prefix + it.key(), "unknown key");
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad(key, "out of range");
  return static_cast<int>(x);
}

double get_double(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_doubles(const json& v, const std::string& key) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const json& e : v) out.push_back(get_double(e, key));
  } else {
    bad(key, "expected a number or a list of numbers");
  }
  return out;
}

DetectorKind parse_detector(const std::string& s, const std::string& key) {
  if (s == "zf") return DetectorKind::ZF;
  if (s == "mmse") return DetectorKind::MMSE;
  if (s == "sphere") return DetectorKind::Sphere;
  bad(key, "expected one of zf, mmse, sphere (got '" + s + "')");
}

PrecoderKind parse_precoder(const std::string& s, const std::string& key) {
  if (s == "zf") return PrecoderKind::ZF;
  if (s == "vp") return PrecoderKind::VP;
  bad(key, "expected one of zf, vp (got '" + s + "')");
}

SrsPowerMode parse_srs(const std::string& s, const std::string& key) {
  if (s == "constant") return SrsPowerMode::Constant;
  if (s == "tpc") return SrsPowerMode::Tpc;
  bad(key, "expected one of constant, tpc (got '" + s + "')");
}

void parse_link(const json& j, SimConfig& sim) {
  if (!j.is_object()) bad("link", "expected an object");
  reject_unknown(j,
                 {"n_up", "n_down", "cooloff_frames", "mcs_min", "mcs_max", "mcs_init", "cooloff_counters",
                  "feedback_delay", "max_retx"},
                 "link.");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = "link." + it.key();
    const json& v = it.value();
    if (it.key() == "n_up") sim.link.n_up = get_int(v, key);
    else if (it.key() == "n_down") sim.link.n_down = get_int(v, key);
    else if (it.key() == "cooloff_frames") sim.link.cooloff_frames = get_int(v, key);
    else if (it.key() == "mcs_min") sim.link.mcs_min = get_int(v, key);
    else if (it.key() == "mcs_max") sim.link.mcs_max = get_int(v, key);
    else if (it.key() == "mcs_init") sim.mcs_init = get_int(v, key);
    else if (it.key() == "feedback_delay") sim.feedback_delay = get_int(v, key);
    else if (it.key() == "max_retx") sim.max_retx = get_int(v, key);
    else if (it.key() == "cooloff_counters") {
      const std::string s = get_string(v, key);
      if (s == "accumulate") sim.link.cooloff_counters = CooloffCounters::Accumulate;
      else if (s == "freeze") sim.link.cooloff_counters = CooloffCounters::Freeze;
      else bad(key, "expected accumulate or freeze");
    }
  }
}

void parse_baseline(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) bad("baseline", "expected an object");
  reject_unknown(j, {"enabled", "detector", "precoder"}, "baseline.");
  if (j.contains("enabled")) c.baseline_enabled = get_bool(j["enabled"], "baseline.enabled");
  if (j.contains("detector"))
    c.baseline_detector = parse_detector(get_string(j["detector"], "baseline.detector"), "baseline.detector");
  if (j.contains("precoder"))
    c.baseline_precoder = parse_precoder(get_string(j["precoder"], "baseline.precoder"), "baseline.precoder");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (scenario.empty()) bad("scenario", "must not be empty");
  if (snr_db.empty()) bad("snr_db", "needs at least one value");
  if (dmrs_boost_db.empty()) bad("dmrs_boost_db", "needs at least one value");
  if (sweep_n_pe.empty()) bad("sweep_n_pe", "needs at least one value");
  for (double v : snr_db)
    if (!std::isfinite(v)) bad("snr_db", "values must be finite (use \"noise\": false to disable noise)");
  for (double v : dmrs_boost_db)
    if (!std::isfinite(v) || v < 0.0 || v > 12.0) bad("dmrs_boost_db", "values must lie in [0, 12] dB");
  for (int v : sweep_n_pe)
    if (v < 1) bad("sweep_n_pe", "values must be >= 1");
  if (sim.n_bs != 4 && sim.n_bs != 8) bad("n_bs", "must be 4 or 8");
  if (sim.n_rb > 100) bad("n_rb", "must be <= 100");
  for (double p : sim.pathloss_db)
    if (p < 0.0 || p > 40.0) bad("pathloss_db", "values must lie in [0, 40] dB");
  if (sim.link.mcs_min <= sim.link.mcs_max &&
      (sim.mcs_init < sim.link.mcs_min || sim.mcs_init > sim.link.mcs_max))
    bad("link.mcs_init", "must lie within [mcs_min, mcs_max]");
  SimConfig probe = sim;
  probe.snr_db = snr_db.front();
  probe.dmrs_boost_db = dmrs_boost_db.front();
  probe.validate();
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  reject_unknown(j,
                 {"scenario", "n_bs", "k", "n_rb", "frames", "detector", "precoder", "n_pe_ul", "n_pe_dl",
                  "pe_node_budget", "snr_db", "dmrs_boost_db", "srs_mode", "srs_window", "rho", "pathloss_db",
                  "perfect_csi", "noise", "impairments", "calibration_interval_frames", "calibration_snr_db",
                  "link", "llr_clip", "seed", "baseline", "sweep_n_pe"},
                 "");

  ExperimentConfig c;
  SimConfig& s = c.sim;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "scenario") c.scenario = get_string(v, key);
    else if (key == "n_bs") s.n_bs = get_int(v, key);
    else if (key == "k") s.k = get_int(v, key);
    else if (key == "n_rb") s.n_rb = get_int(v, key);
    else if (key == "frames") s.frames = get_int(v, key);
    else if (key == "detector") s.detector = parse_detector(get_string(v, key), key);
    else if (key == "precoder") s.precoder = parse_precoder(get_string(v, key), key);
    else if (key == "n_pe_ul") s.n_pe_ul = get_int(v, key);
    else if (key == "n_pe_dl") s.n_pe_dl = get_int(v, key);
    else if (key == "pe_node_budget") s.pe_node_budget = get_int(v, key);
    else if (key == "snr_db") c.snr_db = get_doubles(v, key);
    else if (key == "dmrs_boost_db") c.dmrs_boost_db = get_doubles(v, key);
    else if (key == "srs_mode") s.srs_mode = parse_srs(get_string(v, key), key);
    else if (key == "srs_window") s.srs_window = get_int(v, key);
    else if (key == "rho") s.rho = get_double(v, key);
    else if (key == "pathloss_db") {
      if (!v.is_array()) bad(key, "expected a list of numbers");
      s.pathloss_db = get_doubles(v, key);
    } else if (key == "perfect_csi") s.perfect_csi = get_bool(v, key);
    else if (key == "noise") s.noise = get_bool(v, key);
    else if (key == "impairments") s.impairments = get_bool(v, key);
    else if (key == "calibration_interval_frames") s.calibration_interval_frames = get_int(v, key);
    else if (key == "calibration_snr_db") s.calibration_snr_db = get_double(v, key);
    else if (key == "link") parse_link(v, s);
    else if (key == "llr_clip") s.llr_clip = get_double(v, key);
    else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        bad(key, "expected a non-negative integer");
      s.seed = v.get<std::uint64_t>();
    } else if (key == "baseline") parse_baseline(v, c);
    else if (key == "sweep_n_pe") {
      if (!v.is_array()) bad(key, "expected a list of integers");
      c.sweep_n_pe.clear();
      for (const json& e : v) c.sweep_n_pe.push_back(get_int(e, key));
    }
  }
  if (!c.snr_db.empty()) s.snr_db = c.snr_db.front();
  if (!c.dmrs_boost_db.empty()) s.dmrs_boost_db = c.dmrs_boost_db.front();
  try {
    c.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_json(const ExperimentConfig& c) {
  const SimConfig& s = c.sim;
  json j;
  j["scenario"] = c.scenario;
  j["n_bs"] = s.n_bs;
  j["k"] = s.k;
  j["n_rb"] = s.n_rb;
  j["frames"] = s.frames;
  j["detector"] = to_string(s.detector);
  j["precoder"] = to_string(s.precoder);
  j["n_pe_ul"] = s.n_pe_ul;
  j["n_pe_dl"] = s.n_pe_dl;
  j["pe_node_budget"] = s.pe_node_budget;
  j["snr_db"] = c.snr_db;
  j["dmrs_boost_db"] = c.dmrs_boost_db;
  j["srs_mode"] = to_string(s.srs_mode);
  j["srs_window"] = s.srs_window;
  j["rho"] = s.rho;
  j["pathloss_db"] = s.pathloss_db;
  j["perfect_csi"] = s.perfect_csi;
  j["noise"] = s.noise;
  j["impairments"] = s.impairments;
  j["calibration_interval_frames"] = s.calibration_interval_frames;
  j["calibration_snr_db"] = s.calibration_snr_db;
  j["link"] = {{"n_up", s.link.n_up},
               {"n_down", s.link.n_down},
               {"cooloff_frames", s.link.cooloff_frames},
               {"mcs_min", s.link.mcs_min},
               {"mcs_max", s.link.mcs_max},
               {"mcs_init", s.mcs_init},
               {"cooloff_counters",
                s.link.cooloff_counters == CooloffCounters::Accumulate ? "accumulate" : "freeze"},
               {"feedback_delay", s.feedback_delay},
               {"max_retx", s.max_retx}};
  j["llr_clip"] = s.llr_clip;
  j["seed"] = s.seed;
  j["baseline"] = {{"enabled", c.baseline_enabled},
                   {"detector", to_string(c.baseline_detector)},
                   {"precoder", to_string(c.baseline_precoder)}};
  j["sweep_n_pe"] = c.sweep_n_pe;
  return j.dump(2) + "\n";
}

}  // namespace nlphy
