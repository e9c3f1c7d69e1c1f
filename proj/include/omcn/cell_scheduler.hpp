#pragma once

// Opportunistic uplink cellular scheduler. While active it averages the
// granted I_TBS over the trailing t_cell_avg seconds and pauses when that
// average drops strictly below itbs_thr; while paused (no DCI exists) it
// averages downlink RSRP over the same horizon and resumes when the average
// is strictly above rsrp_thr. No transition is taken on a window that has
// not yet covered a full t_cell_avg.

#include <cstdint>
#include <deque>
#include <optional>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "omcn/decision_log.hpp"
#include "omcn/d2d_scheduler.hpp"
#include "omcn/errors.hpp"
#include "omcn/radio.hpp"

namespace omcn {

struct CellSchedulerParams {
  int itbs_thr = 18;
  double rsrp_thr_dbm = -80.0;
  double t_cell_avg_s = 1.0;
  double rsrp_sample_period_s = 0.005;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (itbs_thr < 0 || itbs_thr > kMaxItbs) out.emplace_back("cell.itbs_thr must be in [0, 26]");
    if (!(t_cell_avg_s > 0.0)) out.emplace_back("cell.t_cell_avg must be > 0");
    if (!(rsrp_sample_period_s > 0.0)) out.emplace_back("cell.rsrp_sample_period must be > 0");
    return out;
  }
};

// Samples within a trailing horizon plus the instant observation began, which
// decides whether the window has covered the full horizon.
template <typename T>
class TrailingWindow {
 public:
  explicit TrailingWindow(double horizon = 1.0) : horizon_(horizon) {}

  void push(double t, T v) {
    if (!since_) since_ = t;
    samples_.emplace_back(t, v);
    add(v);
    evict(t);
  }

  // Drops samples older than t - horizon.
  void evict(double t) {
    while (!samples_.empty() && samples_.front().first < t - horizon_ - kTimeEps) {
      sub(samples_.front().second);
      samples_.pop_front();
    }
  }

  void clear() {
    samples_.clear();
    since_.reset();
    isum_ = 0;
    dirty_ = true;
  }

  bool full(double t) const { return since_ && t - *since_ >= horizon_ - kTimeEps; }
  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  const std::deque<std::pair<double, T>>& samples() const { return samples_; }

  std::optional<double> average() const {
    if (samples_.empty()) return std::nullopt;
    if constexpr (std::is_integral_v<T>) {
      return static_cast<double>(isum_) / static_cast<double>(samples_.size());
    } else {
      if (dirty_) {
        // Summed front to back each time the contents change so the result
        // does not depend on the eviction history.
        double s = 0.0;
        for (const auto& [ts, v] : samples_) s += v;
        cached_ = s / static_cast<double>(samples_.size());
        dirty_ = false;
      }
      return cached_;
    }
  }

 private:
  void add(T v) {
    if constexpr (std::is_integral_v<T>) isum_ += v;
    dirty_ = true;
  }
  void sub(T v) {
    if constexpr (std::is_integral_v<T>) isum_ -= v;
    dirty_ = true;
  }

  double horizon_;
  std::deque<std::pair<double, T>> samples_;
  std::optional<double> since_;
  std::int64_t isum_ = 0;
  mutable bool dirty_ = true;
  mutable double cached_ = 0.0;
};

class CellScheduler {
 public:
  explicit CellScheduler(CellSchedulerParams params = {}, Phase initial = Phase::active)
      : p_(params), phase_(initial), itbs_(params.t_cell_avg_s), rsrp_(params.t_cell_avg_s) {
    if (auto pr = p_.problems(); !pr.empty()) throw ValidationError(pr);
  }

  // Opportunistic links start paused and monitor RSRP from t = 0.
  static CellScheduler opportunistic(CellSchedulerParams params) {
    return CellScheduler(params, Phase::paused);
  }

  void observe_grant(double t, int itbs) {
    if (phase_ != Phase::active)
      throw ProtocolError("cell observe_grant: DCI grant at t=" + std::to_string(t) +
                          " while the uplink is paused");
    check_order(last_grant_t_, t, "grant");
    itbs_.push(t, itbs);
  }

  void observe_rsrp(double t, double rsrp_dbm) {
    check_order(last_rsrp_t_, t, "rsrp");
    rsrp_.push(t, rsrp_dbm);
  }

  std::optional<DecisionRecord> evaluate(double t) {
    itbs_.evict(t);
    rsrp_.evict(t);
    if (phase_ == Phase::active) {
      const auto avg = itbs_.average();
      if (itbs_.full(t) && avg && *avg < static_cast<double>(p_.itbs_thr)) {
        phase_ = Phase::paused;
        return DecisionRecord{t, Event::pause, avg, static_cast<int>(itbs_.size()), phase_,
                              Link::cell};
      }
      return std::nullopt;
    }
    const auto avg = rsrp_.average();
    if (rsrp_.full(t) && avg && *avg > p_.rsrp_thr_dbm) {
      phase_ = Phase::active;
      itbs_.clear();
      return DecisionRecord{t, Event::resume, avg, static_cast<int>(rsrp_.size()), phase_,
                            Link::cell};
    }
    return std::nullopt;
  }

  bool is_transmitting() const { return phase_ == Phase::active; }
  Phase phase() const { return phase_; }
  std::optional<double> itbs_average() const { return itbs_.average(); }
  std::optional<double> rsrp_average() const { return rsrp_.average(); }
  const TrailingWindow<int>& itbs_window() const { return itbs_; }
  const TrailingWindow<double>& rsrp_window() const { return rsrp_; }
  const CellSchedulerParams& params() const { return p_; }

 private:
  static void check_order(std::optional<double>& last, double t, const char* what) {
    if (last && t < *last)
      throw OrderingError(std::string("cell observe_") + what + ": sample at t=" +
                          std::to_string(t) + " precedes t=" + std::to_string(*last));
    last = t;
  }

  CellSchedulerParams p_;
  Phase phase_;
  TrailingWindow<int> itbs_;
  TrailingWindow<double> rsrp_;
  std::optional<double> last_grant_t_;
  std::optional<double> last_rsrp_t_;
};

}  // namespace omcn
