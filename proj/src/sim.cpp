#include "nlphy/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlphy/detect.hpp"
#include "nlphy/error.hpp"
#include "nlphy/precode.hpp"

namespace nlphy {

std::string to_string(Direction d) { return d == Direction::Downlink ? "dl" : "ul"; }

std::string to_string(DetectorKind d) {
  switch (d) {
    case DetectorKind::ZF: return "zf";
    case DetectorKind::MMSE: return "mmse";
    case DetectorKind::Sphere: return "sphere";
  }
  return "?";
}

std::string to_string(PrecoderKind p) { return p == PrecoderKind::ZF ? "zf" : "vp"; }

std::string to_string(SrsPowerMode m) { return m == SrsPowerMode::Constant ? "constant" : "tpc"; }

SubframeRole subframe_role(int sf) {
  switch (sf) {
    case 1: return SubframeRole::Special;
    case 2:
    case 3:
    case 4: return SubframeRole::Uplink;
    default: return SubframeRole::Downlink;
  }
}

void SimConfig::validate() const {
  std::ostringstream os;
  auto bad = [&](const std::string& what) { os << what << "; "; };
  if (n_bs < 1) bad("n_bs must be >= 1");
  if (k < 1) bad("k must be >= 1");
  if (k > kMaxLayers) bad("k exceeds the layer limit of 8");
  if (k > n_bs) bad("k must not exceed n_bs");
  if (n_rb < 1) bad("n_rb must be >= 1");
  if (frames < 1) bad("frames must be >= 1");
  if (n_pe_ul < 1 || n_pe_dl < 1) bad("n_pe must be >= 1");
  if (pe_node_budget < 1) bad("pe_node_budget must be >= 1");
  if (srs_window < 1) bad("srs_window must be >= 1");
  if (rho < 0.0 || rho > 1.0) bad("rho must lie in [0, 1]");
  if (!pathloss_db.empty() && static_cast<int>(pathloss_db.size()) != k)
    bad("pathloss_db needs one entry per UE");
  for (double p : pathloss_db)
    if (!std::isfinite(p)) bad("pathloss_db entries must be finite");
  if (calibration_interval_frames < 1) bad("calibration_interval_frames must be >= 1");
  if (link.mcs_min < 0 || link.mcs_max >= static_cast<int>(McsTable::standard().size()) ||
      link.mcs_min > link.mcs_max)
    bad("mcs bounds must satisfy 0 <= mcs_min <= mcs_max <= 11");
  if (link.n_up < 1 || link.n_down < 1) bad("n_up and n_down must be >= 1");
  if (link.cooloff_frames < 0) bad("cooloff_frames must be >= 0");
  if (feedback_delay < 1) bad("feedback_delay must be >= 1");
  if (max_retx < 0) bad("max_retx must be >= 0");
  if (!(llr_clip > 0.0)) bad("llr_clip must be > 0");
  if (std::isnan(snr_db)) bad("snr_db must be a number");
  if (!std::isfinite(dmrs_boost_db)) bad("dmrs_boost_db must be finite");
  const std::string msg = os.str();
  if (!msg.empty()) fail(ErrorCode::ConfigError, msg.substr(0, msg.size() - 2));
}

Allocation schedule(int k, int n_rb) {
  if (k < 1 || n_rb < 1) fail(ErrorCode::ConfigError, "schedule: k and n_rb must be >= 1");
  Allocation a;
  a.n_layers = k;
  std::vector<int> all(static_cast<std::size_t>(n_rb));
  for (int rb = 0; rb < n_rb; ++rb) all[static_cast<std::size_t>(rb)] = rb;
  a.rbs.assign(static_cast<std::size_t>(k), all);
  return a;
}

double Metrics::sum_goodput() const {
  if (subframes == 0) return 0.0;
  return static_cast<double>(dl.bits + ul.bits) / static_cast<double>(subframes);
}

double Metrics::spectral_efficiency(Direction d) const {
  const DirectionStats& s = d == Direction::Downlink ? dl : ul;
  if (s.subframes == 0 || n_rb == 0) return 0.0;
  const double hz_s = static_cast<double>(s.subframes) * kSubframeSeconds * n_rb * kRbBandwidthHz;
  return static_cast<double>(s.bits) / hz_s;
}

double Metrics::sum_spectral_efficiency() const {
  return spectral_efficiency(Direction::Downlink) + spectral_efficiency(Direction::Uplink);
}

double relative_gain(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * (a - b) / b;
}

double relative_gain(const Metrics& a, const Metrics& b) {
  return relative_gain(a.sum_goodput(), b.sum_goodput());
}

namespace {

constexpr double kNoiseFloor = 1e-10;

struct TxProcess {
  bool busy = false;
  TransportBlock tb;
  int attempts = 0;
};

struct PendingFeedback {
  std::int64_t ready_at;
  std::int64_t tx_subframe;
  Direction dir;
  int ue;
  int pid;
  bool crc_ok;
  ArqDecision decision;
};

struct UeLink {
  LinkState state;
  std::array<TxProcess, kHarqProcesses> tx;
  std::array<ArqState, kHarqProcesses> rx;
  std::deque<int> retx;
  RngStream payload_rng;
};

// What one UE sends in one data subframe.
struct Transmission {
  int ue = 0;
  int pid = -1;  // -1: filler, not accounted
  int mcs = 0;
  int attempt = 0;
  const Constellation* c = nullptr;
  CodeRate rate = CodeRate::R1_2;
  std::size_t payload_bits = 0;
  std::vector<cd> symbols;
  std::vector<double> llr;
};

}  // namespace

struct Engine::Impl {
  ChannelRealization ch;
  ImpairmentModel imp;
  CMat coupling;
  CsiState csi;
  RngStream aging_rng;
  RngStream cal_rng;
  double nv = 0.0;
  double nv_det = 0.0;
  double rho_sub = 1.0;
  ResourceGrid dl_grid, ul_grid, srs_grid;
  std::array<std::vector<UeLink>, 2> links;  // [Downlink, Uplink]
  std::deque<PendingFeedback> pending;

  Impl(const SimConfig& c)
      : csi(c.n_bs, c.k, c.n_rb, c.srs_window),
        aging_rng(c.seed, stream::kAging),
        cal_rng(c.seed, stream::kCalibration, 1),
        dl_grid(c.n_rb, c.k, SubframeRole::Downlink, c.dmrs_boost_db),
        ul_grid(c.n_rb, c.k, SubframeRole::Uplink, 0.0),
        srs_grid(c.n_rb, c.k, SubframeRole::Special, 0.0) {}

  UeLink& link(Direction d, int ue) {
    return links[d == Direction::Downlink ? 0 : 1][static_cast<std::size_t>(ue)];
  }
};

Engine::Engine(SimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  impl_ = std::make_unique<Impl>(cfg_);
  Impl& s = *impl_;

  std::vector<double> gain;
  for (double db : cfg_.pathloss_db) gain.push_back(std::pow(10.0, -db / 10.0));
  s.ch = draw(cfg_.seed, cfg_.n_bs, cfg_.k, cfg_.n_rb, gain);

  RngStream imp_rng(cfg_.seed, stream::kImpairment);
  s.imp = cfg_.impairments ? ImpairmentModel::draw(imp_rng, cfg_.n_bs, cfg_.k)
                           : ImpairmentModel::identity(cfg_.n_bs, cfg_.k);
  RngStream coupling_rng(cfg_.seed, stream::kCalibration, 0);
  s.coupling = draw_array_coupling(coupling_rng, cfg_.n_bs);

  s.nv = cfg_.noise ? noise_var_for_snr(cfg_.snr_db) : 0.0;
  s.nv_det = std::max(s.nv, kNoiseFloor);
  s.rho_sub = std::pow(cfg_.rho, 1.0 / kSubframesPerFrame);

  for (int d = 0; d < 2; ++d) {
    const std::uint64_t tag = d == 0 ? stream::kPayloadDl : stream::kPayloadUl;
    for (int ue = 0; ue < cfg_.k; ++ue)
      s.links[static_cast<std::size_t>(d)].push_back(
          UeLink{LinkState::fresh(cfg_.link, cfg_.mcs_init), {}, {}, {},
                 RngStream(cfg_.seed, tag, static_cast<std::uint64_t>(ue))});
  }
  metrics_.n_rb = cfg_.n_rb;
  metrics_.dl.ue_bits.assign(static_cast<std::size_t>(cfg_.k), 0);
  metrics_.ul.ue_bits.assign(static_cast<std::size_t>(cfg_.k), 0);
}

Engine::~Engine() = default;

const LinkState& Engine::link_state(Direction d, int ue) const {
  return impl_->link(d, ue).state;
}

namespace {

void recalibrate(Engine::Impl& s, const SimConfig& cfg) {
  if (!cfg.impairments) return;
  const double nv_cal = cfg.noise ? noise_var_for_snr(cfg.calibration_snr_db) : 0.0;
  s.csi.set_calibration(calibrate(sound_array(s.coupling, s.imp, nv_cal, s.cal_rng)));
}

// SRS sounding of every UE on every RB, folded into the CSI filter.
void sound(Engine::Impl& s, const SimConfig& cfg, std::uint64_t noise_index) {
  if (cfg.perfect_csi) return;
  RngStream rng(cfg.seed, stream::kSrsNoise, noise_index);
  for (int rb = 0; rb < cfg.n_rb; ++rb) {
    const CMat h_ul = ul_effective(s.ch.h[static_cast<std::size_t>(rb)], s.imp);
    for (int ue = 0; ue < cfg.k; ++ue) {
      const int n_p = s.srs_grid.pilot_cells_per_rb(ue);
      std::vector<cd> pilot(static_cast<std::size_t>(n_p));
      for (int j = 0; j < n_p; ++j) pilot[static_cast<std::size_t>(j)] = pilot_symbol(ue, rb * n_p + j);
      const double p_tx = srs_tx_power(cfg.srs_mode, s.ch.gain[static_cast<std::size_t>(ue)]);
      CMat y(cfg.n_bs, n_p);
      for (int j = 0; j < n_p; ++j)
        for (int a = 0; a < cfg.n_bs; ++a)
          y(a, j) = h_ul(a, ue) * std::sqrt(p_tx) * pilot[static_cast<std::size_t>(j)] +
                    (s.nv > 0.0 ? rng.cgauss(s.nv) : cd{});
      // The BS does not know the power the UE applied.
      s.csi.update(rb, ue, srs_estimate(y, pilot, 1.0));
    }
  }
  s.csi.mark_fresh();
}

std::vector<cd> layer_pilots(int ue, int rb, int n_p) {
  std::vector<cd> p(static_cast<std::size_t>(n_p));
  for (int j = 0; j < n_p; ++j) p[static_cast<std::size_t>(j)] = pilot_symbol(ue, rb * n_p + j);
  return p;
}

}  // namespace

void Engine::run_subframe() {
  Impl& s = *impl_;
  const std::int64_t now = now_;
  const std::int64_t frame = now / kSubframesPerFrame;
  const int sfi = static_cast<int>(now % kSubframesPerFrame);
  const SubframeRole role = subframe_role(sfi);

  if (now == 0) {
    // Initial acquisition: calibration and one sounding before the first frame.
    if (!cfg_.perfect_csi) recalibrate(s, cfg_);
    sound(s, cfg_, 0);
  }

  // Feedback due by now drives link adaptation and the retransmission queue.
  while (!s.pending.empty() && s.pending.front().ready_at <= now) {
    const PendingFeedback fb = s.pending.front();
    s.pending.pop_front();
    UeLink& ul = s.link(fb.dir, fb.ue);
    LinkEvent ev;
    ev.frame = frame;
    ev.ue = fb.ue;
    ev.direction = fb.dir;
    ev.outcome = fb.crc_ok ? Feedback::Ack : Feedback::Nack;
    ev.mcs_before = ul.state.mcs;
    ul.state = on_feedback(ul.state, ev.outcome, frame, cfg_.link);
    ev.mcs_after = ul.state.mcs;
    ev.tx_subframe = fb.tx_subframe;
    ev.rx_subframe = now;
    metrics_.events.push_back(ev);
    if (fb.decision == ArqDecision::Retransmit)
      ul.retx.push_back(fb.pid);
    else
      ul.tx[static_cast<std::size_t>(fb.pid)].busy = false;
  }

  if (role == SubframeRole::Special) {
    if (!cfg_.perfect_csi && frame > 0 && frame % cfg_.calibration_interval_frames == 0)
      recalibrate(s, cfg_);
    s.csi.age();
    sound(s, cfg_, static_cast<std::uint64_t>(now) + 1);
  } else {
    const Direction dir = role == SubframeRole::Downlink ? Direction::Downlink : Direction::Uplink;
    const ResourceGrid& grid = dir == Direction::Downlink ? s.dl_grid : s.ul_grid;
    const int per_rb = grid.data_cells_per_rb();
    const std::size_t n_sym = static_cast<std::size_t>(per_rb) * static_cast<std::size_t>(cfg_.n_rb);
    const double p_data = grid.data_power();
    const double p_pilot = grid.pilot_power();
    if (dir == Direction::Uplink) s.csi.age();

    // (1) TX build.
    std::vector<Transmission> txs(static_cast<std::size_t>(cfg_.k));
    for (int ue = 0; ue < cfg_.k; ++ue) {
      UeLink& ul = s.link(dir, ue);
      Transmission& t = txs[static_cast<std::size_t>(ue)];
      t.ue = ue;
      TransportBlock filler;
      const TransportBlock* tb = nullptr;
      if (!ul.retx.empty()) {
        t.pid = ul.retx.front();
        ul.retx.pop_front();
        TxProcess& proc = ul.tx[static_cast<std::size_t>(t.pid)];
        t.attempt = proc.attempts++;
        t.mcs = proc.tb.mcs;
        tb = &proc.tb;
      } else {
        t.mcs = ul.state.mcs;
        for (int p = 0; p < kHarqProcesses; ++p)
          if (!ul.tx[static_cast<std::size_t>(p)].busy) {
            t.pid = p;
            break;
          }
      }
      const McsEntry& e = McsTable::standard()[static_cast<std::size_t>(t.mcs)];
      t.c = &Constellation::qam(e.order);
      t.rate = e.rate;
      const std::size_t n_coded = n_sym * static_cast<std::size_t>(t.c->bits_per_symbol());
      t.payload_bits = payload_capacity(n_coded, t.rate);
      if (tb == nullptr) {
        TransportBlock fresh;
        fresh.payload.resize(t.payload_bits);
        for (auto& b : fresh.payload) b = static_cast<std::uint8_t>(ul.payload_rng.bit());
        fresh.mcs = t.mcs;
        fresh.ue = ue;
        fresh.arq_process = t.pid;
        fresh.seal();
        if (t.pid >= 0) {
          TxProcess& proc = ul.tx[static_cast<std::size_t>(t.pid)];
          proc.busy = true;
          proc.tb = std::move(fresh);
          proc.attempts = 1;
          ul.rx[static_cast<std::size_t>(t.pid)] = ArqState{};
          tb = &proc.tb;
        } else {
          filler = std::move(fresh);
          tb = &filler;
        }
      }
      t.symbols = modulate(encode(*tb, t.rate, n_coded), *t.c);
      t.llr.assign(n_coded, 0.0);
    }

    // (2) channel apply and (3) RX, RB by RB.
    RngStream noise_rng(cfg_.seed, stream::kNoise, static_cast<std::uint64_t>(now));
    std::vector<const Constellation*> layers;
    std::vector<int> llr_offset;
    int bits_total = 0;
    for (const Transmission& t : txs) {
      layers.push_back(t.c);
      llr_offset.push_back(bits_total);
      bits_total += t.c->bits_per_symbol();
    }

    for (int rb = 0; rb < cfg_.n_rb; ++rb) {
      const CMat& h = s.ch.h[static_cast<std::size_t>(rb)];
      const std::size_t base = static_cast<std::size_t>(rb) * static_cast<std::size_t>(per_rb);
      CMat sym(cfg_.k, per_rb);
      for (int ue = 0; ue < cfg_.k; ++ue)
        for (int j = 0; j < per_rb; ++j)
          sym(ue, j) = txs[static_cast<std::size_t>(ue)].symbols[base + static_cast<std::size_t>(j)];

      if (dir == Direction::Uplink) {
        const CMat y = apply_ul(h, s.imp, sym * std::sqrt(p_data), s.nv, noise_rng);
        CMat h_est(cfg_.n_bs, cfg_.k);
        for (int ue = 0; ue < cfg_.k; ++ue) {
          const int n_p = grid.pilot_cells_per_rb(ue);
          const std::vector<cd> pilot = layer_pilots(ue, rb, n_p);
          CMat xp = CMat::Zero(cfg_.k, n_p);
          for (int j = 0; j < n_p; ++j) xp(ue, j) = std::sqrt(p_pilot) * pilot[static_cast<std::size_t>(j)];
          const CMat yp = apply_ul(h, s.imp, xp, s.nv, noise_rng);
          h_est.col(ue) = srs_estimate(yp, pilot, p_pilot);
        }
        if (cfg_.perfect_csi) h_est = ul_effective(h, s.imp);
        const CMat h_eff = h_est * std::sqrt(p_data);

        auto scatter = [&](const DetectionResult& d, int j) {
          for (int ue = 0; ue < cfg_.k; ++ue) {
            Transmission& t = txs[static_cast<std::size_t>(ue)];
            const int nb = t.c->bits_per_symbol();
            const std::size_t dst = (base + static_cast<std::size_t>(j)) * static_cast<std::size_t>(nb);
            for (int b = 0; b < nb; ++b)
              t.llr[dst + static_cast<std::size_t>(b)] =
                  d.llr[static_cast<std::size_t>(llr_offset[static_cast<std::size_t>(ue)] + b)];
          }
        };
        try {
          if (cfg_.detector == DetectorKind::Sphere) {
            const SphereDetector det(h_eff, layers);
            for (int j = 0; j < per_rb; ++j)
              scatter(det.soft(y.col(j), s.nv_det, cfg_.n_pe_ul, cfg_.llr_clip, cfg_.pe_node_budget), j);
          } else {
            const LinearDetector det(h_eff, s.nv_det,
                                     cfg_.detector == DetectorKind::ZF ? LinearMode::ZF : LinearMode::MMSE,
                                     layers, cfg_.llr_clip);
            for (int j = 0; j < per_rb; ++j) scatter(det.detect(y.col(j)), j);
          }
        } catch (const Error&) {
          // Unusable channel estimate: the RB's LLRs stay erased.
        }
      } else {
        const CMat h_dl = cfg_.perfect_csi ? dl_effective(h, s.imp)
                                           : predict_dl(s.csi.h_ul(rb), s.csi.calibration());
        CMat p, u;
        double gamma = 1.0;
        std::vector<double> tau(static_cast<std::size_t>(cfg_.k));
        for (int ue = 0; ue < cfg_.k; ++ue) tau[static_cast<std::size_t>(ue)] = tau_for(*layers[static_cast<std::size_t>(ue)]);
        bool ok = true;
        try {
          if (cfg_.precoder == PrecoderKind::VP) {
            const VectorPerturbation vp(h_dl, tau, cfg_.n_pe_dl);
            const PerturbedSignal sig = vp.precode(sym);
            p = vp.precoder();
            gamma = sig.gamma;
            u = sym;
            for (int j = 0; j < per_rb; ++j)
              for (int ue = 0; ue < cfg_.k; ++ue)
                u(ue, j) += tau[static_cast<std::size_t>(ue)] *
                            sig.perturbation[static_cast<std::size_t>(j * cfg_.k + ue)].value();
          } else {
            p = right_pinv(h_dl);
            u = sym;
            gamma = (p * u).squaredNorm() / (static_cast<double>(per_rb) * cfg_.k);
            if (!(gamma > 0.0)) gamma = 1.0;
          }
        } catch (const Error&) {
          ok = false;
        }
        if (ok) {
          const double sg = std::sqrt(gamma);
          const CMat x = p * u / sg;
          const double per_stream = x.squaredNorm() / (static_cast<double>(per_rb) * cfg_.k);
          metrics_.power_deviation = std::max(metrics_.power_deviation, std::abs(per_stream - 1.0));
          const CMat y = apply_dl(h, s.imp, x * std::sqrt(p_data), s.nv, noise_rng);

          // DMRS: precoded like data, never perturbed.
          for (int ue = 0; ue < cfg_.k; ++ue) {
            Transmission& t = txs[static_cast<std::size_t>(ue)];
            const int n_p = grid.pilot_cells_per_rb(ue);
            const std::vector<cd> pilot = layer_pilots(ue, rb, n_p);
            CMat xp(cfg_.n_bs, n_p);
            for (int j = 0; j < n_p; ++j)
              xp.col(j) = p.col(ue) * (std::sqrt(p_pilot) * pilot[static_cast<std::size_t>(j)] / sg);
            const CMat yp = apply_dl(h, s.imp, xp, s.nv, noise_rng);
            std::vector<cd> obs(static_cast<std::size_t>(n_p));
            for (int j = 0; j < n_p; ++j) obs[static_cast<std::size_t>(j)] = yp(ue, j);
            const cd h_eff = dmrs_estimate(obs, pilot, p_pilot) * std::sqrt(p_data);
            if (std::abs(h_eff) == 0.0) continue;

            const int nb = t.c->bits_per_symbol();
            const double tau_k = tau[static_cast<std::size_t>(ue)];
            const double nv_eff = s.nv_det / std::norm(h_eff);
            for (int j = 0; j < per_rb; ++j) {
              std::span<double> out(t.llr.data() + (base + static_cast<std::size_t>(j)) * static_cast<std::size_t>(nb),
                                    static_cast<std::size_t>(nb));
              if (cfg_.precoder == PrecoderKind::VP) {
                const cd r = modulo_receive(y(ue, j) / h_eff, 1.0, tau_k);
                demap_llr_modulo(r, *t.c, tau_k, nv_eff, cfg_.llr_clip, out);
              } else {
                demap_llr(y(ue, j), h_eff, *t.c, s.nv_det, cfg_.llr_clip, out);
              }
            }
          }
        }
      }
    }

    // Decode, ARQ and feedback enqueue.
    DirectionStats& st = dir == Direction::Downlink ? metrics_.dl : metrics_.ul;
    ++st.subframes;
    for (Transmission& t : txs) {
      if (t.pid < 0) continue;
      UeLink& ul = s.link(dir, t.ue);
      ArqState& arq = ul.rx[static_cast<std::size_t>(t.pid)];
      const std::vector<double> combined = arq.combine(t.llr);
      const DecodeResult dec = decode(combined, t.rate, t.payload_bits);
      const TransportBlock& sent = ul.tx[static_cast<std::size_t>(t.pid)].tb;
      const bool crc_ok = dec.crc_ok;
      const ArqDecision decision = arq_step(arq, crc_ok, t.llr, cfg_.max_retx);

      SubframeRecord rec;
      rec.frame = frame;
      rec.subframe = sfi;
      rec.direction = dir;
      rec.ue = t.ue;
      rec.mcs = t.mcs;
      rec.crc_ok = crc_ok;
      rec.attempt = t.attempt;
      ++st.attempts;
      if (!crc_ok) ++st.errors;
      if (decision == ArqDecision::Deliver) {
        // A CRC pass on wrong bits is still counted as delivered: the receiver cannot tell.
        rec.bits_delivered = sent.payload.size();
        st.bits += rec.bits_delivered;
        st.ue_bits[static_cast<std::size_t>(t.ue)] += rec.bits_delivered;
        ++st.delivered_blocks;
      } else if (decision == ArqDecision::Drop) {
        ++st.dropped_blocks;
      }
      metrics_.records.push_back(rec);
      s.pending.push_back({now + cfg_.feedback_delay, now, dir, t.ue, t.pid, crc_ok, decision});
    }
  }

  // Aging after the air interface of this subframe.
  if (s.rho_sub < 1.0) evolve(s.ch, s.rho_sub, s.aging_rng);
  ++metrics_.subframes;
  ++now_;
}

Metrics run_simulation(const SimConfig& cfg) {
  Engine e(cfg);
  const std::int64_t total = static_cast<std::int64_t>(cfg.frames) * kSubframesPerFrame;
  while (e.next_subframe() < total) e.run_subframe();
  return e.take_metrics();
}

}  // namespace nlphy
