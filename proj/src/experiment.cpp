#include "nlphy/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nlphy/error.hpp"

namespace nlphy {

using json = nlohmann::ordered_json;

SweepAxis parse_axis(const std::string& name) {
  if (name == "snr") return SweepAxis::Snr;
  if (name == "boost") return SweepAxis::Boost;
  if (name == "n_pe") return SweepAxis::NPe;
  fail(ErrorCode::ConfigError, "sweep axis must be one of snr, boost, n_pe (got '" + name + "')");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Snr: return "snr";
    case SweepAxis::Boost: return "boost";
    case SweepAxis::NPe: return "n_pe";
  }
  return "?";
}

double PointResult::gain_pct() const { return baseline ? relative_gain(main, *baseline) : 0.0; }

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

SimConfig at(const ExperimentConfig& cfg, double snr, double boost) {
  SimConfig s = cfg.sim;
  s.snr_db = snr;
  s.dmrs_boost_db = boost;
  return s;
}

SimConfig baseline_of(const ExperimentConfig& cfg, SimConfig s) {
  s.detector = cfg.baseline_detector;
  s.precoder = cfg.baseline_precoder;
  return s;
}

struct Labeled {
  std::string label;
  double value;
  SimConfig sim;
};

std::vector<Labeled> labeled_run(const ExperimentConfig& cfg) {
  std::vector<Labeled> out;
  for (double snr : cfg.snr_db)
    for (double boost : cfg.dmrs_boost_db)
      out.push_back({"snr" + num(snr) + "_boost" + num(boost), snr, at(cfg, snr, boost)});
  return out;
}

std::vector<Labeled> labeled_sweep(const ExperimentConfig& cfg, SweepAxis axis) {
  std::vector<Labeled> out;
  const double snr0 = cfg.snr_db.front();
  const double boost0 = cfg.dmrs_boost_db.front();
  switch (axis) {
    case SweepAxis::Snr:
      for (double v : cfg.snr_db) out.push_back({"snr_" + num(v), v, at(cfg, v, boost0)});
      break;
    case SweepAxis::Boost:
      for (double v : cfg.dmrs_boost_db) out.push_back({"boost_" + num(v), v, at(cfg, snr0, v)});
      break;
    case SweepAxis::NPe:
      for (int v : cfg.sweep_n_pe) {
        SimConfig s = at(cfg, snr0, boost0);
        s.n_pe_ul = v;
        s.n_pe_dl = v;
        out.push_back({"n_pe_" + std::to_string(v), static_cast<double>(v), s});
      }
      break;
  }
  return out;
}

// Runs every point and its baseline as independent tasks on a small pool.
std::vector<PointResult> execute(const ExperimentConfig& cfg, const std::vector<Labeled>& pts, int jobs) {
  std::vector<PointResult> res(pts.size());
  std::vector<std::pair<std::size_t, bool>> tasks;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    res[i].label = pts[i].label;
    res[i].axis_value = pts[i].value;
    res[i].sim = pts[i].sim;
    res[i].sim.validate();
    tasks.emplace_back(i, false);
    if (cfg.baseline_enabled) {
      res[i].baseline.emplace();
      tasks.emplace_back(i, true);
    }
  }

  unsigned n = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(tasks.size()));

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::size_t first_error_task = tasks.size();

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const auto [i, base] = tasks[t];
      try {
        if (base) *res[i].baseline = run_simulation(baseline_of(cfg, res[i].sim));
        else res[i].main = run_simulation(res[i].sim);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        // Report the lowest-index failure so errors do not depend on timing.
        if (t < first_error_task) {
          first_error_task = t;
          first_error = std::current_exception();
        }
      }
    }
  };

  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return res;
}

std::vector<SimConfig> sims(const std::vector<Labeled>& v) {
  std::vector<SimConfig> out;
  for (const auto& l : v) out.push_back(l.sim);
  return out;
}

json stats_json(const DirectionStats& s, double se) {
  json j;
  j["subframes"] = s.subframes;
  j["attempts"] = s.attempts;
  j["errors"] = s.errors;
  j["bler"] = s.bler();
  j["delivered_blocks"] = s.delivered_blocks;
  j["dropped_blocks"] = s.dropped_blocks;
  j["bits"] = s.bits;
  j["spectral_efficiency"] = se;
  j["ue_bits"] = s.ue_bits;
  return j;
}

json metrics_json(const Metrics& m, const SimConfig& s) {
  json j;
  j["detector"] = to_string(s.detector);
  j["precoder"] = to_string(s.precoder);
  j["subframes"] = m.subframes;
  j["sum_goodput_bits_per_subframe"] = m.sum_goodput();
  j["sum_spectral_efficiency"] = m.sum_spectral_efficiency();
  j["power_deviation"] = m.power_deviation;
  j["dl"] = stats_json(m.dl, m.spectral_efficiency(Direction::Downlink));
  j["ul"] = stats_json(m.ul, m.spectral_efficiency(Direction::Uplink));
  return j;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  out << text;
  out.flush();
  if (!out) fail(ErrorCode::IoError, "failed writing '" + p.string() + "'");
}

void make_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory '" + p.string() + "': " + ec.message());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<SimConfig> run_points(const ExperimentConfig& cfg) { return sims(labeled_run(cfg)); }

std::vector<SimConfig> sweep_points(const ExperimentConfig& cfg, SweepAxis axis) {
  return sims(labeled_sweep(cfg, axis));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  return {"run", std::nullopt, execute(cfg, labeled_run(cfg), jobs)};
}

ExperimentResult run_sweep(const ExperimentConfig& cfg, SweepAxis axis, int jobs) {
  cfg.validate();
  return {"sweep", axis, execute(cfg, labeled_sweep(cfg, axis), jobs)};
}

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  json j;
  j["scenario"] = cfg.scenario;
  j["mode"] = r.mode;
  j["axis"] = r.axis ? json(to_string(*r.axis)) : json(nullptr);
  j["seeds"] = {{"base", cfg.sim.seed}};
  j["frames"] = cfg.sim.frames;
  j["n_bs"] = cfg.sim.n_bs;
  j["k"] = cfg.sim.k;
  j["n_rb"] = cfg.sim.n_rb;
  json pts = json::array();
  for (const PointResult& p : r.points) {
    json e;
    e["label"] = p.label;
    e["axis_value"] = p.axis_value;
    e["snr_db"] = p.sim.snr_db;
    e["dmrs_boost_db"] = p.sim.dmrs_boost_db;
    e["n_pe_ul"] = p.sim.n_pe_ul;
    e["n_pe_dl"] = p.sim.n_pe_dl;
    e["seed"] = p.sim.seed;
    e["main"] = metrics_json(p.main, p.sim);
    if (p.baseline) {
      e["baseline"] = metrics_json(*p.baseline, baseline_of(cfg, p.sim));
      e["relative_gain_pct"] = p.gain_pct();
      e["relative_gain_dl_se_pct"] = relative_gain(p.main.spectral_efficiency(Direction::Downlink),
                                                   p.baseline->spectral_efficiency(Direction::Downlink));
      e["relative_gain_ul_se_pct"] = relative_gain(p.main.spectral_efficiency(Direction::Uplink),
                                                   p.baseline->spectral_efficiency(Direction::Uplink));
    }
    pts.push_back(std::move(e));
  }
  j["points"] = std::move(pts);
  return j.dump(2) + "\n";
}

std::string metrics_csv(const Metrics& m, std::uint64_t seed) {
  std::ostringstream os;
  os << kMetricsCsvHeader << '\n';
  for (const SubframeRecord& r : m.records)
    os << r.frame << ',' << r.subframe << ',' << to_string(r.direction) << ',' << r.ue << ',' << r.mcs << ','
       << (r.crc_ok ? 1 : 0) << ',' << r.bits_delivered << ',' << seed << '\n';
  return os.str();
}

std::string events_csv(const Metrics& m, std::uint64_t seed) {
  std::ostringstream os;
  os << kEventsCsvHeader << '\n';
  for (const LinkEvent& e : m.events)
    os << e.frame << ',' << e.ue << ',' << to_string(e.direction) << ','
       << (e.outcome == Feedback::Ack ? "ack" : "nack") << ',' << e.mcs_before << ',' << e.mcs_after << ','
       << seed << '\n';
  return os.str();
}

void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& r, const std::filesystem::path& out) {
  make_dir(out);
  write_file(out / "config.resolved.json", resolved_json(cfg));
  write_file(out / "summary.json", summary_json(cfg, r));
  for (const PointResult& p : r.points) {
    const auto dir = out / p.label;
    make_dir(dir);
    write_file(dir / "metrics.csv", metrics_csv(p.main, p.sim.seed));
    write_file(dir / "events.csv", events_csv(p.main, p.sim.seed));
    if (p.baseline) {
      make_dir(dir / "baseline");
      write_file(dir / "baseline" / "metrics.csv", metrics_csv(*p.baseline, p.sim.seed));
      write_file(dir / "baseline" / "events.csv", events_csv(*p.baseline, p.sim.seed));
    }
  }
  if (r.axis) {
    std::ostringstream os;
    os << kSweepCsvHeader << '\n';
    for (const PointResult& p : r.points) {
      const Metrics& m = p.main;
      os << to_string(*r.axis) << ',' << fmt(p.axis_value) << ',' << fmt(p.sim.snr_db) << ','
         << fmt(p.sim.dmrs_boost_db) << ',' << p.sim.n_pe_ul << ',' << p.sim.n_pe_dl << ',' << p.sim.seed << ','
         << fmt(m.sum_goodput()) << ',' << fmt(m.sum_spectral_efficiency()) << ','
         << fmt(m.spectral_efficiency(Direction::Downlink)) << ','
         << fmt(m.spectral_efficiency(Direction::Uplink)) << ',' << fmt(m.dl.bler()) << ','
         << fmt(m.ul.bler());
      if (p.baseline) {
        const Metrics& b = *p.baseline;
        os << ',' << fmt(b.sum_goodput()) << ',' << fmt(b.sum_spectral_efficiency()) << ','
           << fmt(b.spectral_efficiency(Direction::Downlink)) << ','
           << fmt(b.spectral_efficiency(Direction::Uplink)) << ',' << fmt(p.gain_pct());
      } else {
        os << ",,,,,";
      }
      os << '\n';
    }
    write_file(out / "sweep.csv", os.str());
  }
}

}  // namespace nlphy
