#pragma once

// Demand-driven D2D pause/resume state machine. The link monitor averages the
// RSSI of the last nb_rx packets received from the relay (data ACKs while
// transmitting, beacons always); the scheduler pauses after nb_below_thr
// consecutive averages strictly below rssi_thr and, while paused, re-checks
// every t_d2d seconds, resuming once the average is at or above threshold.

#include <deque>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "omcn/decision_log.hpp"
#include "omcn/errors.hpp"

namespace omcn {

inline constexpr double kTimeEps = 1e-9;

struct D2dSchedulerParams {
  double rssi_thr_dbm = -70.0;
  int nb_rx = 7;
  int nb_below_thr = 3;
  double t_d2d_s = 1.0;
  double beacon_interval_s = 0.1;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (nb_rx < 1) out.emplace_back("d2d.nb_rx must be >= 1");
    if (nb_below_thr < 1) out.emplace_back("d2d.nb_below_thr must be >= 1");
    if (!(t_d2d_s > 0.0)) out.emplace_back("d2d.t_d2d must be > 0");
    if (!(beacon_interval_s > 0.0)) out.emplace_back("d2d.beacon_interval must be > 0");
    return out;
  }
};

struct D2dSchedulerState {
  Phase phase = Phase::active;
  std::deque<double> window;  // most recent last
  int below_counter = 0;
  double next_check_at = 0.0;
  std::optional<double> current_avg;
  std::optional<double> last_sample_t;
};

class D2dScheduler {
 public:
  explicit D2dScheduler(D2dSchedulerParams params = {}, Phase initial = Phase::active)
      : p_(params) {
    if (auto pr = p_.problems(); !pr.empty()) throw ValidationError(pr);
    s_.phase = initial;
  }

  // Opportunistic links start paused with an empty window; the first
  // successful check activates them.
  static D2dScheduler opportunistic(D2dSchedulerParams params) {
    return D2dScheduler(params, Phase::paused);
  }

  std::optional<DecisionRecord> observe(double t, double rssi_dbm) {
    if (s_.last_sample_t && t < *s_.last_sample_t)
      throw OrderingError("d2d observe: sample at t=" + std::to_string(t) +
                          " precedes t=" + std::to_string(*s_.last_sample_t));
    s_.last_sample_t = t;
    s_.window.push_back(rssi_dbm);
    if (static_cast<int>(s_.window.size()) > p_.nb_rx) s_.window.pop_front();
    if (static_cast<int>(s_.window.size()) == p_.nb_rx) {
      s_.current_avg = std::accumulate(s_.window.begin(), s_.window.end(), 0.0) /
                       static_cast<double>(p_.nb_rx);
    }
    if (s_.phase != Phase::active || !s_.current_avg) return std::nullopt;
    if (*s_.current_avg < p_.rssi_thr_dbm) {
      ++s_.below_counter;
    } else {
      s_.below_counter = 0;
    }
    if (s_.below_counter >= p_.nb_below_thr) {
      s_.phase = Phase::paused;
      s_.next_check_at = t + p_.t_d2d_s;
      return record(t, Event::pause);
    }
    return std::nullopt;
  }

  // Resume check; a no-op unless paused and the check instant has come.
  std::optional<DecisionRecord> tick(double now) {
    if (s_.phase != Phase::paused || now + kTimeEps < s_.next_check_at) return std::nullopt;
    if (s_.current_avg && *s_.current_avg >= p_.rssi_thr_dbm) {
      s_.phase = Phase::active;
      s_.below_counter = 0;
      return record(now, Event::resume);
    }
    s_.next_check_at = now + p_.t_d2d_s;
    return std::nullopt;
  }

  bool is_transmitting() const { return s_.phase == Phase::active; }

  DecisionRecord snapshot(double t) const { return record(t, Event::observe); }

  const D2dSchedulerState& state() const { return s_; }
  const D2dSchedulerParams& params() const { return p_; }

 private:
  DecisionRecord record(double t, Event e) const {
    return DecisionRecord{t, e, s_.current_avg, s_.below_counter, s_.phase, Link::d2d};
  }

  D2dSchedulerParams p_;
  D2dSchedulerState s_;
};

}  // namespace omcn
