#pragma once

// Link-quality models: received power (D2D RSSI and cellular RSRP), the
// network's RSRP -> I_TBS grant policy, the transport block size table,
// 802.11 rate adaptation and per-block error decisions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "omcn/errors.hpp"
#include "omcn/geometry.hpp"
#include "omcn/rng.hpp"

namespace omcn {

inline constexpr int kMaxItbs = 26;

struct PathLossParams {
  double tx_power_dbm = 0.0;  // transmit power plus antenna gains
  double pl0_db = 40.0;       // loss at d0
  double d0_m = 1.0;
  double exponent_los = 2.0;
  double exponent_nlos = 3.5;
  double shadowing_sigma_db = 0.0;
  double shadowing_corr_m = 10.0;  // AR(1) decorrelation distance
  double corner_loss_db = 0.0;
  double vehicle_cabin_loss_db = 8.0;
  double indoor_depth_loss_db_per_m = 0.0;

  std::vector<std::string> problems(const std::string& where) const {
    std::vector<std::string> out;
    auto bad = [&](const char* what) { out.push_back(where + ": " + what); };
    if (!(d0_m > 0.0)) bad("d0 must be positive");
    if (!(exponent_los >= 1.0) || !(exponent_nlos >= 1.0)) bad("path-loss exponents must be >= 1");
    if (!(shadowing_sigma_db >= 0.0)) bad("shadowing sigma must be >= 0");
    if (!(shadowing_corr_m > 0.0)) bad("shadowing correlation distance must be positive");
    if (!(corner_loss_db >= 0.0) || !(vehicle_cabin_loss_db >= 0.0) ||
        !(indoor_depth_loss_db_per_m >= 0.0))
      bad("losses must be >= 0");
    return out;
  }
};

inline double mount_loss_db(Mount m, const PathLossParams& p) {
  return m == Mount::in_vehicle_cabin ? p.vehicle_cabin_loss_db : 0.0;
}

// Deterministic part of the received power, split so callers can see which
// terms applied.
struct PowerBudget {
  bool los = true;
  double path_loss_db = 0.0;
  double obstruction_db = 0.0;  // penetration + corner loss
  double indoor_db = 0.0;
  double mount_db = 0.0;

  // Received power before shadowing.
  double mean_dbm(const PathLossParams& p) const {
    return p.tx_power_dbm - path_loss_db - obstruction_db - indoor_db - mount_db;
  }
};

inline PowerBudget power_budget(Position tx, Position rx, std::span<const Obstacle> obstacles,
                                const PathLossParams& p, double mount_db = 0.0) {
  const double d = distance(tx, rx);
  if (!(d >= p.d0_m)) {
    throw RangeError("received_power: distance " + std::to_string(d) +
                     " m is below the reference distance");
  }
  const LosResult los = is_los(tx, rx, obstacles);
  PowerBudget b;
  b.los = los.los;
  const double n = los.los ? p.exponent_los : p.exponent_nlos;
  b.path_loss_db = p.pl0_db + 10.0 * n * std::log10(d / p.d0_m);
  b.obstruction_db = los.penetration_loss_db + (los.corner_blocked ? p.corner_loss_db : 0.0);
  b.indoor_db = p.indoor_depth_loss_db_per_m *
                std::max(indoor_depth(tx, obstacles), indoor_depth(rx, obstacles));
  b.mount_db = mount_db;
  return b;
}

// Spatially correlated log-normal shadowing: first-order autoregression over
// the distance travelled by the link's endpoints.
class Shadowing {
 public:
  Shadowing() = default;
  Shadowing(double sigma_db, double corr_m, Rng rng)
      : sigma_(sigma_db), corr_(corr_m), rng_(rng) {
    value_ = sigma_ * rng_.normal();
  }

  // Advances by `moved_m` metres of endpoint displacement; one normal draw per
  // call regardless of distance so the stream position depends only on the
  // call count.
  double advance(double moved_m) {
    const double z = rng_.normal();
    if (moved_m > 0.0 && sigma_ > 0.0) {
      const double rho = std::exp(-moved_m / corr_);
      value_ = rho * value_ + std::sqrt(1.0 - rho * rho) * sigma_ * z;
    }
    return value_;
  }

  double value() const { return value_; }

 private:
  double sigma_ = 0.0;
  double corr_ = 10.0;
  Rng rng_{};
  double value_ = 0.0;
};

// tx_power + gains - path loss - penetration - cabin/indoor losses + shadowing.
inline double received_power(Position tx, Position rx, std::span<const Obstacle> obstacles,
                             const PathLossParams& p, double mount_db, double shadowing_db) {
  return power_budget(tx, rx, obstacles, p, mount_db).mean_dbm(p) + shadowing_db;
}

// Memoryless monotone RSRP -> I_TBS map. threshold_dbm[i] is the lowest RSRP
// granted index i (index 0 has no threshold).
struct GrantPolicy {
  std::array<double, kMaxItbs + 1> threshold_dbm{};
  int n_prb = 50;
  // Link adaptation back-off: a block at index i decodes reliably once the
  // received power clears threshold(i) - link_margin_db.
  double link_margin_db = 8.0;

  // Evenly spaced thresholds anchored at threshold(anchor_itbs) = anchor_dbm.
  static GrantPolicy linear(double anchor_dbm = -80.0, int anchor_itbs = 18,
                            double step_db = 2.5, int n_prb = 50,
                            double link_margin_db = 8.0) {
    GrantPolicy g;
    g.threshold_dbm[0] = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= kMaxItbs; ++i) g.threshold_dbm[i] = anchor_dbm + (i - anchor_itbs) * step_db;
    g.n_prb = n_prb;
    g.link_margin_db = link_margin_db;
    return g;
  }

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    for (int i = 2; i <= kMaxItbs; ++i)
      if (!(threshold_dbm[i] >= threshold_dbm[i - 1]))
        out.push_back("grant thresholds must be non-decreasing (index " + std::to_string(i) + ")");
    if (n_prb < 0) out.emplace_back("n_prb must be >= 0");
    if (!(link_margin_db >= 0.0)) out.emplace_back("link margin must be >= 0");
    return out;
  }

  // Power at which index i is decoded at the logistic midpoint.
  double decode_threshold_dbm(int i) const {
    double t = threshold_dbm[std::clamp(i, 1, kMaxItbs)];
    if (i <= 0) t -= threshold_dbm[2] - threshold_dbm[1];
    return t - link_margin_db;
  }
};

inline int grant_itbs(double rsrp_dbm, const GrantPolicy& policy) {
  const auto first = policy.threshold_dbm.begin() + 1;
  const auto it = std::upper_bound(first, policy.threshold_dbm.end(), rsrp_dbm);
  return static_cast<int>(it - first);
}

class TbsTable {
 public:
  TbsTable() = default;

  static TbsTable parse(std::istream& in, const std::string& source = "<tbs>") {
    std::vector<std::array<std::int64_t, 4>> rows;
    std::string line;
    std::size_t lineno = 0;
    int max_prb = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      std::int64_t i = 0, n = 0, bits = 0;
      if (!(ls >> i)) continue;
      if (!(ls >> n >> bits)) throw ParseError(source, lineno, "expected 'i_tbs n_prb bits'");
      std::string extra;
      if (ls >> extra) throw ParseError(source, lineno, "trailing field '" + extra + "'");
      if (i < 0 || i > kMaxItbs) throw ParseError(source, lineno, "i_tbs out of range");
      if (n < 1 || n > 110) throw ParseError(source, lineno, "n_prb out of range");
      rows.push_back({i, n, bits, static_cast<std::int64_t>(lineno)});
      max_prb = std::max<int>(max_prb, static_cast<int>(n));
    }
    TbsTable t;
    t.max_prb_ = max_prb;
    t.bits_.assign(static_cast<std::size_t>((kMaxItbs + 1) * max_prb), 0);
    for (const auto& r : rows) {
      auto& slot = t.bits_[t.index(static_cast<int>(r[0]), static_cast<int>(r[1]))];
      if (slot != 0) {
        throw ParseError(source, static_cast<std::size_t>(r[3]), "duplicate entry for (" + std::to_string(r[0]) + ", " +
                                        std::to_string(r[1]) + ")");
      }
      slot = r[2];
    }
    if (auto p = t.problems(); !p.empty()) throw ValidationError(p);
    return t;
  }

  static TbsTable load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open TBS table '" + path + "'");
    return parse(f, path);
  }

  // Coverage, positivity and monotonicity in both arguments.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (max_prb_ < 1) {
      out.emplace_back("TBS table is empty");
      return out;
    }
    for (int i = 0; i <= kMaxItbs; ++i) {
      for (int n = 1; n <= max_prb_; ++n) {
        const auto v = bits_[index(i, n)];
        const std::string at = "(" + std::to_string(i) + ", " + std::to_string(n) + ")";
        if (v <= 0) {
          out.push_back("missing or non-positive entry " + at);
          continue;
        }
        if (i > 0 && v < bits_[index(i - 1, n)]) out.push_back("not monotone in i_tbs at " + at);
        if (n > 1 && v < bits_[index(i, n - 1)]) out.push_back("not monotone in n_prb at " + at);
      }
    }
    return out;
  }

  int max_prb() const { return max_prb_; }

  std::int64_t bits(int i_tbs, int n_prb) const {
    if (n_prb == 0) return 0;
    if (i_tbs < 0 || i_tbs > kMaxItbs) throw RangeError("tbs_bits: i_tbs " + std::to_string(i_tbs) + " out of range");
    if (n_prb < 0 || n_prb > max_prb_) throw RangeError("tbs_bits: n_prb " + std::to_string(n_prb) + " out of range");
    return bits_[index(i_tbs, n_prb)];
  }

 private:
  std::size_t index(int i, int n) const {
    return static_cast<std::size_t>(i * max_prb_ + (n - 1));
  }

  int max_prb_ = 0;
  std::vector<std::int64_t> bits_;
};

inline std::int64_t tbs_bits(const TbsTable& table, int i_tbs, int n_prb) {
  return table.bits(i_tbs, n_prb);
}

// 802.11a/g rate adaptation over the standard OFDM rate set.
struct D2dRateTable {
  static constexpr std::array<double, 8> kRatesMbps{6, 9, 12, 18, 24, 36, 48, 54};
  // Receiver sensitivity per rate (dBm).
  std::array<double, 8> sensitivity_dbm{-82, -81, -79, -77, -74, -70, -66, -65};
  // A rate is selected once RSSI clears sensitivity + selection_margin_db.
  double selection_margin_db = 3.0;
  double mac_efficiency = 0.6;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    for (std::size_t i = 1; i < sensitivity_dbm.size(); ++i)
      if (!(sensitivity_dbm[i] >= sensitivity_dbm[i - 1]))
        out.emplace_back("D2D sensitivities must be non-decreasing");
    if (!(mac_efficiency > 0.0 && mac_efficiency <= 1.0))
      out.emplace_back("D2D MAC efficiency must be in (0, 1]");
    return out;
  }

  // Index into kRatesMbps; never below the base rate.
  std::size_t select(double rssi_dbm) const {
    std::size_t r = 0;
    for (std::size_t i = 1; i < kRatesMbps.size(); ++i)
      if (rssi_dbm >= sensitivity_dbm[i] + selection_margin_db) r = i;
    return r;
  }
};

inline double d2d_phy_rate(double rssi_dbm, const D2dRateTable& t) {
  return D2dRateTable::kRatesMbps[t.select(rssi_dbm)] * 1e6 * t.mac_efficiency;
}

// Logistic block-error curve over the decode margin (dB).
struct BlockErrorModel {
  double slope_per_db = 1.0;

  double probability(double margin_db) const {
    return 1.0 / (1.0 + std::exp(slope_per_db * margin_db));
  }
};

inline bool block_error(double margin_db, const BlockErrorModel& m, Rng& rng) {
  return rng.bernoulli(m.probability(margin_db));
}

}  // namespace omcn
