#pragma once

// Feeds a recorded sample trace through both schedulers on the 1 ms clock and
// produces their decision log. Trace lines: `t_s kind value origin`, with
// kind in {d2d_rssi, cell_rsrp, cell_itbs_grant} and origin in
// {beacon, ack} for D2D samples, {rs} for RSRP, {dci} for grants.

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "omcn/cell_scheduler.hpp"
#include "omcn/d2d_scheduler.hpp"
#include "omcn/decision_log.hpp"
#include "omcn/engine.hpp"
#include "omcn/errors.hpp"

namespace omcn {

struct TraceSample {
  double t = 0.0;
  SampleKind kind = SampleKind::cell_rsrp;
  double value = 0.0;
  SampleOrigin origin = SampleOrigin::rs;
  std::size_t line = 0;
};

inline std::string format_sample(const TraceSample& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6f %s %.17g %s", s.t, to_string(s.kind), s.value,
                to_string(s.origin));
  return buf;
}

inline std::vector<TraceSample> parse_trace(std::istream& in, const std::string& source = "<trace>") {
  std::vector<TraceSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string ts, kind, value, origin, extra;
    if (!(ls >> ts)) continue;
    if (!(ls >> kind >> value >> origin) || (ls >> extra))
      throw ParseError(source, lineno, "expected 't_s kind value origin'");
    TraceSample s;
    s.line = lineno;
    auto num = [&](const std::string& tok, const char* what) {
      std::size_t used = 0;
      double d = 0.0;
      try {
        d = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(d))
        throw ParseError(source, lineno, std::string("bad ") + what + " '" + tok + "'");
      return d;
    };
    s.t = num(ts, "time");
    s.value = num(value, "value");
    if (s.t < 0.0) throw ParseError(source, lineno, "negative time");
    if (kind == "d2d_rssi") s.kind = SampleKind::d2d_rssi;
    else if (kind == "cell_rsrp") s.kind = SampleKind::cell_rsrp;
    else if (kind == "cell_itbs_grant") s.kind = SampleKind::cell_itbs_grant;
    else throw ParseError(source, lineno, "unknown kind '" + kind + "'");
    if (origin == "beacon") s.origin = SampleOrigin::beacon;
    else if (origin == "ack") s.origin = SampleOrigin::ack;
    else if (origin == "rs") s.origin = SampleOrigin::rs;
    else if (origin == "dci") s.origin = SampleOrigin::dci;
    else throw ParseError(source, lineno, "unknown origin '" + origin + "'");
    const bool ok = (s.kind == SampleKind::d2d_rssi &&
                     (s.origin == SampleOrigin::beacon || s.origin == SampleOrigin::ack)) ||
                    (s.kind == SampleKind::cell_rsrp && s.origin == SampleOrigin::rs) ||
                    (s.kind == SampleKind::cell_itbs_grant && s.origin == SampleOrigin::dci);
    if (!ok) throw ParseError(source, lineno, "origin '" + origin + "' does not fit kind '" + kind + "'");
    if (s.kind == SampleKind::cell_itbs_grant &&
        (s.value != std::floor(s.value) || s.value < 0 || s.value > kMaxItbs))
      throw ParseError(source, lineno, "grant must be an integer I_TBS in [0, 26]");
    if (!out.empty() && s.t < out.back().t)
      throw ParseError(source, lineno, "time goes backwards");
    out.push_back(s);
  }
  return out;
}

inline void write_trace(std::ostream& out, const std::vector<TraceSample>& samples) {
  for (const auto& s : samples) out << format_sample(s) << '\n';
}

struct ReplayOptions {
  double tti_s = 0.001;
  Phase d2d_initial = Phase::paused;
  Phase cell_initial = Phase::paused;
};

// Within each TTI: RSRP and beacon samples, then the cellular evaluation and
// the D2D resume check, then grants and ACK readings. Grants and ACK readings
// that arrive while their link is paused are dropped, as a paused link has
// neither.
inline std::vector<DecisionRecord> replay(const std::vector<TraceSample>& samples,
                                          const D2dSchedulerParams& d2d_params,
                                          const CellSchedulerParams& cell_params,
                                          const ReplayOptions& opt = {}) {
  std::vector<DecisionRecord> log;
  if (samples.empty()) return log;
  D2dScheduler d2d(d2d_params, opt.d2d_initial);
  CellScheduler cell(cell_params, opt.cell_initial);
  auto push = [&](const std::optional<DecisionRecord>& r) {
    if (r) log.push_back(*r);
  };
  auto tick_of = [&](double t) { return std::llround(t / opt.tti_s); };

  const long long last = tick_of(samples.back().t);
  std::size_t i = 0;
  for (long long k = 0; k <= last; ++k) {
    const double tk = static_cast<double>(k) * opt.tti_s;
    std::size_t j = i;
    while (j < samples.size() && tick_of(samples[j].t) == k) ++j;
    for (std::size_t q = i; q < j; ++q) {
      const auto& s = samples[q];
      if (s.kind == SampleKind::cell_rsrp) cell.observe_rsrp(s.t, s.value);
      if (s.origin == SampleOrigin::beacon) push(d2d.observe(s.t, s.value));
    }
    push(cell.evaluate(tk));
    push(d2d.tick(tk));
    for (std::size_t q = i; q < j; ++q) {
      const auto& s = samples[q];
      if (s.kind == SampleKind::cell_itbs_grant && cell.is_transmitting())
        cell.observe_grant(s.t, static_cast<int>(s.value));
      if (s.origin == SampleOrigin::ack && d2d.is_transmitting()) push(d2d.observe(s.t, s.value));
    }
    i = j;
  }
  return log;
}

}  // namespace omcn
