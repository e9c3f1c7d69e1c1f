#pragma once

// Spectral efficiency, gain factors, per-group statistics and report output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "omcn/engine.hpp"
#include "omcn/errors.hpp"

namespace omcn {

inline constexpr double kPrbBandwidthHz = 180e3;

// bits / (seconds * Hz).
inline double spectral_efficiency(double bits, double cellular_time_s, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw RangeError("spectral_efficiency: bandwidth must be > 0");
  if (bits < 0.0 || cellular_time_s < 0.0) throw AccountingError("spectral_efficiency: negative input");
  if (bits == 0.0) return 0.0;
  if (cellular_time_s == 0.0)
    throw AccountingError("spectral_efficiency: nonzero bits over zero cellular time");
  return bits / (cellular_time_s * bandwidth_hz);
}

inline double spectral_efficiency(const RunResult& r) {
  return spectral_efficiency(static_cast<double>(r.bits_to_bs), r.cellular_time_s, r.spectral_bandwidth_hz);
}

inline double gain_factor(double metric, double baseline) {
  if (!(baseline > 0.0)) throw Error("gain_factor: baseline must be > 0");
  return metric / baseline;
}

// Percent.
inline double time_reduction(double time, double baseline_time) {
  if (!(baseline_time > 0.0)) throw Error("time_reduction: baseline must be > 0");
  return 100.0 * (1.0 - time / baseline_time);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Stat {
  double mean = 0.0;
  double median = 0.0;
  double half_width = 0.0;      // 95% CI, Student t
  double half_width_pct = 0.0;  // of |mean|; 0 when the mean is 0
};

inline double t_quantile_975(std::size_t df) {
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

inline Stat summarize(const std::vector<double>& v) {
  if (v.size() < 2) throw Error("summarize: at least two samples are needed for a confidence interval");
  Stat s;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  s.half_width = t_quantile_975(v.size() - 1) * sd / std::sqrt(n);
  s.half_width_pct = s.mean != 0.0 ? 100.0 * s.half_width / std::abs(s.mean) : 0.0;
  s.median = median(v);
  return s;
}

struct AggregateResult {
  std::string scenario;
  Mode mode = Mode::cc;
  std::size_t n_seeds = 0;
  std::size_t completed = 0;
  Stat total_s, cellular_s, d2d_s, mean_itbs, spectral_eff;
  // Against CC over the same seed set; ratios of medians.
  std::optional<double> se_factor;
  std::optional<double> cell_time_reduction_pct;
};

// Groups by scenario (first appearance) and mode (CC, OppCC, MCN, OppMCN).
inline std::vector<AggregateResult> aggregate(const std::vector<RunResult>& results) {
  std::vector<std::string> order;
  std::map<std::pair<std::string, int>, std::vector<const RunResult*>> groups;
  for (const auto& r : results) {
    if (std::find(order.begin(), order.end(), r.scenario) == order.end()) order.push_back(r.scenario);
    groups[{r.scenario, static_cast<int>(r.mode)}].push_back(&r);
  }
  std::vector<AggregateResult> out;
  for (const auto& sc : order) {
    const auto base_it = groups.find({sc, static_cast<int>(Mode::cc)});
    std::vector<std::uint64_t> base_seeds;
    std::optional<Stat> base_se, base_cell;
    if (base_it != groups.end()) {
      for (const auto* r : base_it->second) base_seeds.push_back(r->seed);
      std::sort(base_seeds.begin(), base_seeds.end());
    }
    for (Mode m : kAllModes) {
      auto it = groups.find({sc, static_cast<int>(m)});
      if (it == groups.end()) continue;
      const auto& g = it->second;
      if (g.size() < 2)
        throw Error("aggregate: group " + sc + "/" + to_string(m) + " has fewer than two seeds");
      AggregateResult a;
      a.scenario = sc;
      a.mode = m;
      a.n_seeds = g.size();
      std::vector<double> tot, cel, d2d, itbs, se;
      std::vector<std::uint64_t> seeds;
      for (const auto* r : g) {
        a.completed += r->completed ? 1 : 0;
        tot.push_back(r->total_time_s);
        cel.push_back(r->cellular_time_s);
        d2d.push_back(r->d2d_time_s);
        itbs.push_back(r->mean_itbs);
        se.push_back(spectral_efficiency(*r));
        seeds.push_back(r->seed);
      }
      std::sort(seeds.begin(), seeds.end());
      a.total_s = summarize(tot);
      a.cellular_s = summarize(cel);
      a.d2d_s = summarize(d2d);
      a.mean_itbs = summarize(itbs);
      a.spectral_eff = summarize(se);
      out.push_back(a);
      if (m == Mode::cc) {
        base_se = a.spectral_eff;
        base_cell = a.cellular_s;
      }
      if (base_se && seeds == base_seeds && base_se->median > 0.0 && base_cell->median > 0.0) {
        out.back().se_factor = gain_factor(a.spectral_eff.median, base_se->median);
        out.back().cell_time_reduction_pct = time_reduction(a.cellular_s.median, base_cell->median);
      }
    }
  }
  return out;
}

// ---- per-run CSV ----

inline const char* kCsvHeader =
    "scenario,mode,seed,total_s,cellular_s,d2d_s,bits_to_bs,mean_itbs,spectral_eff_bps_hz,completed";

struct CsvRow {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  double total_s = 0, cellular_s = 0, d2d_s = 0;
  std::int64_t bits_to_bs = 0;
  double mean_itbs = 0, spectral_eff = 0;
  bool completed = false;
  bool operator==(const CsvRow&) const = default;
};

inline CsvRow to_row(const RunResult& r) {
  const double se = spectral_efficiency(r);
  return CsvRow{r.scenario, to_string(r.mode), r.seed, r.total_time_s, r.cellular_time_s, r.d2d_time_s,
                r.bits_to_bs, r.mean_itbs, se, r.completed};
}

inline std::string format_row(const CsvRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.15g,%.15g,%.15g,%lld,%.15g,%.15g,%d", r.scenario.c_str(),
                r.mode.c_str(), static_cast<unsigned long long>(r.seed), r.total_s, r.cellular_s, r.d2d_s,
                static_cast<long long>(r.bits_to_bs), r.mean_itbs, r.spectral_eff, r.completed ? 1 : 0);
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

inline std::vector<CsvRow> parse_csv(std::istream& in, const std::string& source = "<csv>") {
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError(source, 1, "missing or wrong CSV header");
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ParseError(source, lineno, "expected 10 fields");
    try {
      CsvRow r;
      r.scenario = f[0];
      r.mode = f[1];
      r.seed = std::stoull(f[2]);
      r.total_s = std::stod(f[3]);
      r.cellular_s = std::stod(f[4]);
      r.d2d_s = std::stod(f[5]);
      r.bits_to_bs = std::stoll(f[6]);
      r.mean_itbs = std::stod(f[7]);
      r.spectral_eff = std::stod(f[8]);
      if (f[9] != "0" && f[9] != "1") throw std::invalid_argument("completed");
      r.completed = f[9] == "1";
      rows.push_back(r);
    } catch (const std::exception&) {
      throw ParseError(source, lineno, "malformed field");
    }
  }
  return rows;
}

// ---- aggregate reports ----

enum class ReportFormat { csv, table };

inline const char* kAggregateHeader =
    "scenario,mode,n_seeds,completed,total_s_mean,total_s_median,total_s_ci95,cellular_s_mean,"
    "cellular_s_median,cellular_s_ci95,d2d_s_mean,mean_itbs_mean,spectral_eff_bps_hz_mean,"
    "spectral_eff_bps_hz_median,spectral_eff_bps_hz_ci95,se_factor_vs_cc,cell_time_reduction_pct";

// Largest CI half-width in percent of the mean, over the headline metrics.
inline double max_margin_pct(const std::vector<AggregateResult>& aggs) {
  double m = 0.0;
  for (const auto& a : aggs)
    for (const Stat* s : {&a.total_s, &a.cellular_s, &a.spectral_eff}) m = std::max(m, s->half_width_pct);
  return m;
}

inline void emit_report(std::ostream& out, const std::vector<AggregateResult>& aggs, ReportFormat fmt) {
  char buf[1024];
  auto opt = [](const std::optional<double>& v) {
    char b[32];
    if (!v) return std::string{};
    std::snprintf(b, sizeof b, "%.15g", *v);
    return std::string(b);
  };
  if (fmt == ReportFormat::csv) {
    out << kAggregateHeader << '\n';
    for (const auto& a : aggs) {
      std::snprintf(buf, sizeof buf,
                    "%s,%s,%zu,%zu,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,",
                    a.scenario.c_str(), to_string(a.mode), a.n_seeds, a.completed, a.total_s.mean,
                    a.total_s.median, a.total_s.half_width, a.cellular_s.mean, a.cellular_s.median,
                    a.cellular_s.half_width, a.d2d_s.mean, a.mean_itbs.mean, a.spectral_eff.mean,
                    a.spectral_eff.median, a.spectral_eff.half_width);
      out << buf << opt(a.se_factor) << ',' << opt(a.cell_time_reduction_pct) << '\n';
    }
    return;
  }
  std::snprintf(buf, sizeof buf, "%-12s %-7s %5s %16s %16s %20s %7s %8s %8s\n", "scenario", "mode", "seeds",
                "Total tx time s", "Cellular time s", "Spectral eff b/s/Hz", "I_TBS", "factor", "red %");
  out << buf;
  for (const auto& a : aggs) {
    char f[16] = "-", r[16] = "-";
    if (a.se_factor) std::snprintf(f, sizeof f, "%.2f", *a.se_factor);
    if (a.cell_time_reduction_pct) std::snprintf(r, sizeof r, "%.1f", *a.cell_time_reduction_pct);
    std::snprintf(buf, sizeof buf, "%-12s %-7s %5zu %8.1f +-%5.1f %8.1f +-%5.1f %11.3f +-%6.3f %7.2f %8s %8s\n",
                  a.scenario.c_str(), to_string(a.mode), a.n_seeds, a.total_s.mean, a.total_s.half_width,
                  a.cellular_s.mean, a.cellular_s.half_width, a.spectral_eff.mean, a.spectral_eff.half_width,
                  a.mean_itbs.mean, f, r);
    out << buf;
  }
  if (!aggs.empty()) {
    std::snprintf(buf, sizeof buf,
                  "Margin of error for the reported averages is below %.1f%% with 95%% confidence "
                  "intervals (Student t; factor and reduction use medians vs CC).\n",
                  std::floor(max_margin_pct(aggs) * 10.0 + 1.0) / 10.0);
    out << buf;
  }
}

}  // namespace omcn
