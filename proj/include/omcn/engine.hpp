#pragma once

// 1 ms TTI loop for the four transfer modes. Per TTI, in this order:
// mobility, link sampling, scheduler evaluation, data movement, reports.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "omcn/cell_scheduler.hpp"
#include "omcn/d2d_scheduler.hpp"
#include "omcn/decision_log.hpp"
#include "omcn/errors.hpp"
#include "omcn/geometry.hpp"
#include "omcn/radio.hpp"
#include "omcn/rng.hpp"
#include "omcn/scenario.hpp"
#include "omcn/transfer.hpp"

#ifndef OMCN_DEFAULT_TBS_PATH
#define OMCN_DEFAULT_TBS_PATH "data/tbs_table.txt"
#endif

namespace omcn {

enum class Mode { cc, opp_cc, mcn, opp_mcn };

inline constexpr Mode kAllModes[] = {Mode::cc, Mode::opp_cc, Mode::mcn, Mode::opp_mcn};

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::cc: return "CC";
    case Mode::opp_cc: return "OppCC";
    case Mode::mcn: return "MCN";
    case Mode::opp_mcn: return "OppMCN";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : kAllModes)
    if (s == to_string(m)) return m;
  throw Error("unknown mode '" + s + "' (expected CC, OppCC, MCN or OppMCN)");
}

inline bool relayed(Mode m) { return m == Mode::mcn || m == Mode::opp_mcn; }
inline bool opportunistic(Mode m) { return m == Mode::opp_cc || m == Mode::opp_mcn; }

// Loaded once from OMCN_TBS_TABLE if set, else the compiled-in path.
inline const TbsTable& default_tbs_table() {
  static const TbsTable table = [] {
    const char* env = std::getenv("OMCN_TBS_TABLE");
    return TbsTable::load(env && *env ? env : OMCN_DEFAULT_TBS_PATH);
  }();
  return table;
}

struct HopWindow {
  std::optional<double> first;
  std::optional<double> last;
};

// Half-open run of TTI indices [begin, end) in which a hop moved data.
struct TickRun {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

struct RunResult {
  std::string scenario;
  Mode mode = Mode::cc;
  std::uint64_t seed = 0;
  bool completed = false;
  double total_time_s = 0.0;
  double cellular_time_s = 0.0;
  double d2d_time_s = 0.0;
  std::int64_t bits_to_bs = 0;
  double mean_itbs = 0.0;
  std::int64_t granted_ttis = 0;
  std::int64_t d2d_ttis = 0;
  HopWindow d2d_window;
  HopWindow cellular_window;
  std::int64_t file_bits = 0;
  std::int64_t distinct_bytes_at_server = 0;
  std::int64_t cell_errored_packets = 0;
  std::int64_t d2d_errored_packets = 0;
  std::int64_t cell_retransmissions = 0;
  std::int64_t d2d_retransmissions = 0;
  std::int64_t conservation_violations = 0;
  double traffic_light_dwell_s = 0.0;
  double tti_s = 0.001;
  // Audit trail.
  Phase initial_cell_phase = Phase::active;
  Phase initial_d2d_phase = Phase::active;
  std::vector<DecisionRecord> decisions;
  std::vector<TickRun> cell_data_ticks;
  std::vector<TickRun> d2d_data_ticks;

  double spectral_bandwidth_hz = 0.0;
};

// What the schedulers were fed, for trace export and replay.
enum class SampleKind { d2d_rssi, cell_rsrp, cell_itbs_grant };

inline const char* to_string(SampleKind k) {
  switch (k) {
    case SampleKind::d2d_rssi: return "d2d_rssi";
    case SampleKind::cell_rsrp: return "cell_rsrp";
    case SampleKind::cell_itbs_grant: return "cell_itbs_grant";
  }
  return "?";
}

struct PacketEvent {
  double t;
  Hop hop;
  Seq seq;
  const char* event;  // "sent", "received", "errored", "acked", "retx"
};

// Where a sample came from; replay needs it to place the sample relative to
// the scheduler evaluation inside a TTI.
enum class SampleOrigin { beacon, ack, rs, dci };

inline const char* to_string(SampleOrigin o) {
  switch (o) {
    case SampleOrigin::beacon: return "beacon";
    case SampleOrigin::ack: return "ack";
    case SampleOrigin::rs: return "rs";
    case SampleOrigin::dci: return "dci";
  }
  return "?";
}

struct RunHooks {
  std::function<void(double t, SampleKind, double value, SampleOrigin)> on_sample;
  std::function<void(const PacketEvent&)> on_packet;
};

namespace detail {

// One radio link with its own shadowing stream.
struct Link {
  Shadowing shadow;
  std::optional<Position> last_a, last_b;
  PowerBudget budget;
  double dbm = 0.0;  // received power including shadowing and mount loss

  void update(Position a, Position b, std::span<const Obstacle> obstacles, const PathLossParams& p,
              double mount_db) {
    const double moved = last_a ? distance(*last_a, a) + distance(*last_b, b) : 0.0;
    last_a = a;
    last_b = b;
    budget = power_budget(a, b, obstacles, p, mount_db);
    dbm = budget.mean_dbm(p) + shadow.advance(moved);
  }
};

inline void mark_tick(std::vector<TickRun>& runs, std::int64_t k) {
  if (!runs.empty() && runs.back().end == k) {
    runs.back().end = k + 1;
  } else {
    runs.push_back({k, k + 1});
  }
}

}  // namespace detail

class Simulation {
 public:
  Simulation(const Scenario& s, Mode mode, std::uint64_t seed, const TbsTable& tbs = default_tbs_table(),
             RunHooks hooks = {})
      : s_(s), mode_(mode), seed_(seed), tbs_(tbs), hooks_(std::move(hooks)),
        transfer_(s.transfer, relayed(mode)), d2d_obstacles_(s.d2d_obstacles()) {
    if (auto pr = validate(s); !pr.empty()) throw ValidationError(pr);
    if (s.grant.n_prb > tbs.max_prb())
      throw ValidationError({"grant.n_prb exceeds the TBS table's PRB coverage"});
    if (relayed(mode) && !s.find(Role::relay))
      throw ValidationError({"relayed mode needs a relay node in scenario '" + s.id + "'"});

    sn_trace_ = s.node(Role::source).trace;
    if (s.static_cc) sn_trace_ = MobilityTrace::fixed(sn_trace_.waypoints.front().pos);
    bs_pos_ = s.node(Role::base_station).trace.waypoints.front().pos;
    sn_mount_ = s.node(Role::source).mount;
    if (const auto* rn = s.find(Role::relay)) {
      rn_trace_ = rn->trace;
      rn_mount_ = rn->mount;
      if (s.traffic_light) {
        Rng r(seed, "traffic_light");
        const auto& tl = *s.traffic_light;
        dwell_ = tl.dwell_s * r.uniform(1.0 - tl.jitter, 1.0 + tl.jitter);
        rn_trace_ = with_dwell(rn_trace_, tl.stop_at_s, dwell_);
      }
    }

    cell_link_.shadow = Shadowing(s.cell_pl.shadowing_sigma_db, s.cell_pl.shadowing_corr_m,
                                  Rng(seed, "shadow.cell"));
    d2d_link_.shadow = Shadowing(s.d2d_pl.shadowing_sigma_db, s.d2d_pl.shadowing_corr_m,
                                 Rng(seed, "shadow.d2d"));
    cell_err_rng_ = Rng(seed, "bler.cell");
    d2d_err_rng_ = Rng(seed, "bler.d2d");
    crossing_rng_ = Rng(seed, "crossings");

    if (opportunistic(mode)) cell_sched_ = CellScheduler::opportunistic(s.cell_sched);
    if (mode == Mode::opp_mcn) d2d_sched_ = D2dScheduler::opportunistic(s.d2d_sched);

    r_.scenario = s.id;
    r_.mode = mode;
    r_.seed = seed;
    r_.tti_s = s.sim.tti_s;
    r_.file_bits = s.transfer.file_bytes * 8;
    r_.traffic_light_dwell_s = dwell_;
    r_.initial_cell_phase = cell_sched_ ? cell_sched_->phase() : Phase::active;
    r_.initial_d2d_phase = d2d_sched_ ? d2d_sched_->state().phase : Phase::active;
    r_.spectral_bandwidth_hz = s.grant.n_prb * 180e3;
  }

  bool done() const { return finished_; }
  std::int64_t tick() const { return k_; }
  double now() const { return static_cast<double>(k_) * s_.sim.tti_s; }
  const TransferState& transfer() const { return transfer_; }
  const RunResult& result() const { return r_; }
  Position sn_position() const { return sn_pos_; }
  Position rn_position() const { return rn_pos_; }
  double cell_power_dbm() const { return cell_link_.dbm; }
  double d2d_power_dbm() const { return d2d_link_.dbm; }
  const std::optional<CellScheduler>& cell_scheduler() const { return cell_sched_; }
  const std::optional<D2dScheduler>& d2d_scheduler() const { return d2d_sched_; }

  void step() {
    if (finished_) return;
    const double t = now();
    const double tti = s_.sim.tti_s;

    // Mobility.
    sn_pos_ = position_at(sn_trace_, t);
    if (relayed(mode_)) rn_pos_ = position_at(rn_trace_, t);

    // Sampling.
    const Position cell_tx = relayed(mode_) ? rn_pos_ : sn_pos_;
    const Mount cell_mount = relayed(mode_) ? rn_mount_ : sn_mount_;
    cell_link_.update(cell_tx, bs_pos_, s_.obstacles, s_.cell_pl, mount_loss_db(cell_mount, s_.cell_pl));
    if (relayed(mode_)) {
      update_crossings(t);
      const double mdb = mount_loss_db(sn_mount_, s_.d2d_pl) + mount_loss_db(rn_mount_, s_.d2d_pl);
      d2d_link_.update(sn_pos_, rn_pos_, d2d_obstacles_, s_.d2d_pl, mdb);
      if (crossing_until_ && t < *crossing_until_) d2d_link_.dbm -= s_.crossings.depth_db;
    }
    if (cell_sched_ && t + kTimeEps >= next_rsrp_t_) {
      cell_sched_->observe_rsrp(t, cell_link_.dbm);
      sample(t, SampleKind::cell_rsrp, cell_link_.dbm, SampleOrigin::rs);
      next_rsrp_t_ += s_.cell_sched.rsrp_sample_period_s;
    }
    if (d2d_sched_ && t + kTimeEps >= next_beacon_t_) {
      sample(t, SampleKind::d2d_rssi, d2d_link_.dbm, SampleOrigin::beacon);
      log(d2d_sched_->observe(t, d2d_link_.dbm));
      next_beacon_t_ += s_.d2d_sched.beacon_interval_s;
    }

    // Scheduler evaluation.
    if (cell_sched_) log(cell_sched_->evaluate(t));
    if (d2d_sched_) log(d2d_sched_->tick(t));

    // Data movement.
    if (relayed(mode_)) move_d2d(t, tti);
    move_cell(t);

    // Reports.
    for (Hop h : {Hop::d2d, Hop::cell}) {
      if (h == Hop::d2d && !relayed(mode_)) continue;
      if (transfer_.report_due(h, t + tti)) {
        const Report rep = transfer_.make_report(h, t + tti);
        if (hooks_.on_packet)
          for (Seq q : rep.acked) hooks_.on_packet({t + tti, h, q, "acked"});
        transfer_.apply_report(rep);
      }
    }

    if (relayed(mode_) && transfer_.client(Hop::cell).distinct_sent_bytes >
                              transfer_.server(Hop::d2d).distinct_bytes) {
      ++r_.conservation_violations;
      throw InvariantError("relay conservation violated at t=" + std::to_string(t));
    }

    ++k_;
    if (transfer_.complete()) {
      finish(true);
    } else if (now() >= s_.sim.cap_s - kTimeEps) {
      finish(false);
    }
  }

  RunResult run() {
    while (!finished_) step();
    return r_;
  }

 private:
  void sample(double t, SampleKind k, double v, SampleOrigin o) {
    if (hooks_.on_sample) hooks_.on_sample(t, k, v, o);
  }

  void log(const std::optional<DecisionRecord>& rec) {
    if (rec) r_.decisions.push_back(*rec);
  }

  void update_crossings(double t) {
    if (!(s_.crossings.rate_per_s > 0.0)) return;
    if (crossing_until_ && t < *crossing_until_) return;
    crossing_until_.reset();
    if (crossing_rng_.bernoulli(s_.crossings.rate_per_s * s_.sim.tti_s))
      crossing_until_ = t + s_.crossings.duration_s;
  }

  void packet(double t, Hop h, Seq q, const char* ev) {
    if (hooks_.on_packet) hooks_.on_packet({t, h, q, ev});
  }

  void move_d2d(double t, double tti) {
    const bool on = !d2d_sched_ || d2d_sched_->is_transmitting();
    if (!on || !transfer_.has_payload(Hop::d2d)) {
      d2d_credit_ = 0.0;
      return;
    }
    const double rssi = d2d_link_.dbm;
    const std::size_t rate_idx = s_.d2d_rates.select(rssi);
    const double margin = rssi - s_.d2d_rates.sensitivity_dbm[rate_idx];
    d2d_credit_ += d2d_phy_rate(rssi, s_.d2d_rates) * tti;
    const double pkt_bits = static_cast<double>(s_.transfer.packet_payload) * 8.0;
    while (d2d_credit_ + 1e-9 >= pkt_bits && transfer_.has_payload(Hop::d2d)) {
      const auto seq = transfer_.next_payload(Hop::d2d, t);
      d2d_credit_ -= pkt_bits;
      const bool err = block_error(margin, s_.d2d_bler, d2d_err_rng_);
      packet(t, Hop::d2d, *seq, "sent");
      transfer_.on_receive(Hop::d2d, *seq, err);
      packet(t, Hop::d2d, *seq, err ? "errored" : "received");
      if (err) ++r_.d2d_errored_packets;
      if (!err && d2d_sched_) {
        // Each ACK carries an RSSI reading of the link.
        sample(t, SampleKind::d2d_rssi, rssi, SampleOrigin::ack);
        log(d2d_sched_->observe(t, rssi));
        if (!d2d_sched_->is_transmitting()) break;
      }
    }
    if (!transfer_.has_payload(Hop::d2d)) d2d_credit_ = 0.0;
    // Transmitting with data queued counts as airtime, credit or not.
    ++r_.d2d_ttis;
    detail::mark_tick(r_.d2d_data_ticks, k_);
    if (!r_.d2d_window.first) r_.d2d_window.first = t;
    r_.d2d_window.last = t;
  }

  void move_cell(double t) {
    const bool on = !cell_sched_ || cell_sched_->is_transmitting();
    if (!on) return;
    if (!inflight_ && !transfer_.has_payload(Hop::cell)) return;

    // The grant follows the link as the network sees it outside any vehicle
    // cabin; the decode margin uses the power actually received.
    const double rsrp = cell_link_.dbm;
    const double grant_power = rsrp + cell_link_.budget.mount_db;
    const int itbs = grant_itbs(grant_power, s_.grant);
    const std::int64_t tbs = tbs_bits(tbs_, itbs, s_.grant.n_prb);
    const double margin = rsrp - s_.grant.decode_threshold_dbm(itbs);
    const bool err = block_error(margin, s_.cell_bler, cell_err_rng_);
    if (cell_sched_) cell_sched_->observe_grant(t, itbs);
    sample(t, SampleKind::cell_itbs_grant, itbs, SampleOrigin::dci);

    ++r_.granted_ttis;
    itbs_sum_ += itbs;
    detail::mark_tick(r_.cell_data_ticks, k_);
    if (!r_.cellular_window.first) r_.cellular_window.first = t;
    r_.cellular_window.last = t;

    std::int64_t cap = tbs;
    while (cap > 0) {
      if (!inflight_) {
        const auto seq = transfer_.next_payload(Hop::cell, t);
        if (!seq) break;
        inflight_ = InFlight{*seq, s_.transfer.payload_bytes(*seq) * 8, false};
        packet(t, Hop::cell, *seq, "sent");
      }
      const std::int64_t take = std::min(cap, inflight_->bits_left);
      inflight_->bits_left -= take;
      cap -= take;
      if (err) inflight_->errored = true;
      if (inflight_->bits_left == 0) {
        const Seq q = inflight_->seq;
        const bool bad = inflight_->errored;
        transfer_.on_receive(Hop::cell, q, bad);
        packet(t, Hop::cell, q, bad ? "errored" : "received");
        if (bad) {
          ++r_.cell_errored_packets;
        } else {
          r_.bits_to_bs += s_.transfer.payload_bytes(q) * 8;
        }
        inflight_.reset();
      }
    }
  }

  void finish(bool completed) {
    finished_ = true;
    const double tti = s_.sim.tti_s;
    r_.completed = completed;
    r_.total_time_s = static_cast<double>(k_) * tti;
    r_.cellular_time_s = static_cast<double>(r_.granted_ttis) * tti;
    r_.d2d_time_s = static_cast<double>(r_.d2d_ttis) * tti;
    r_.mean_itbs = r_.granted_ttis > 0 ? static_cast<double>(itbs_sum_) / r_.granted_ttis : 0.0;
    r_.distinct_bytes_at_server = transfer_.server(Hop::cell).distinct_bytes;
    r_.cell_retransmissions = transfer_.client(Hop::cell).retransmissions;
    if (relayed(mode_)) r_.d2d_retransmissions = transfer_.client(Hop::d2d).retransmissions;
  }

  struct InFlight {
    Seq seq;
    std::int64_t bits_left;
    bool errored;
  };

  const Scenario& s_;
  Mode mode_;
  std::uint64_t seed_;
  const TbsTable& tbs_;
  RunHooks hooks_;
  TransferState transfer_;
  std::vector<Obstacle> d2d_obstacles_;
  MobilityTrace sn_trace_, rn_trace_;
  Mount sn_mount_ = Mount::handheld, rn_mount_ = Mount::handheld;
  Position bs_pos_, sn_pos_, rn_pos_;
  double dwell_ = 0.0;
  detail::Link cell_link_, d2d_link_;
  Rng cell_err_rng_, d2d_err_rng_, crossing_rng_;
  std::optional<double> crossing_until_;
  std::optional<CellScheduler> cell_sched_;
  std::optional<D2dScheduler> d2d_sched_;
  double next_rsrp_t_ = 0.0;
  double next_beacon_t_ = 0.0;
  double d2d_credit_ = 0.0;
  std::optional<InFlight> inflight_;
  std::int64_t itbs_sum_ = 0;
  std::int64_t k_ = 0;
  bool finished_ = false;
  RunResult r_;
};

inline RunResult run(const Scenario& s, Mode mode, std::uint64_t seed,
                     const TbsTable& tbs = default_tbs_table(), RunHooks hooks = {}) {
  Simulation sim(s, mode, seed, tbs, std::move(hooks));
  return sim.run();
}

}  // namespace omcn
