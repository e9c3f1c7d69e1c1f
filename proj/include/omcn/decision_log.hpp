#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "omcn/errors.hpp"

namespace omcn {

enum class Phase { active, paused };
enum class Link { d2d, cell };
enum class Event { observe, pause, resume };

inline const char* to_string(Phase p) { return p == Phase::active ? "active" : "paused"; }
inline const char* to_string(Link l) { return l == Link::d2d ? "d2d" : "cell"; }
inline const char* to_string(Event e) {
  switch (e) {
    case Event::observe: return "observe";
    case Event::pause: return "pause";
    case Event::resume: return "resume";
  }
  return "?";
}

// One scheduler decision. `avg` is the average the decision was based on
// (RSSI for D2D; I_TBS for a cellular pause, RSRP otherwise); `counter` is
// the consecutive below-threshold count for D2D and the window sample count
// for the cellular link.
struct DecisionRecord {
  double t = 0.0;
  Event event = Event::observe;
  std::optional<double> avg;
  int counter = 0;
  Phase phase = Phase::active;  // phase after the decision
  Link link = Link::d2d;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

// `t_s event avg_dbm counter phase link=<d2d|cell>`; an undefined average is
// written as `nan`.
inline std::string format_record(const DecisionRecord& r) {
  char buf[160];
  const double avg = r.avg ? *r.avg : std::nan("");
  std::snprintf(buf, sizeof buf, "%.3f %s %.4f %d %s link=%s", r.t, to_string(r.event), avg,
                r.counter, to_string(r.phase), to_string(r.link));
  return buf;
}

inline DecisionRecord parse_record(std::string_view line, std::size_t lineno = 0,
                                   const std::string& source = "<log>") {
  std::istringstream in{std::string(line)};
  DecisionRecord r;
  std::string event, avg, phase, link;
  if (!(in >> r.t >> event >> avg >> r.counter >> phase >> link))
    throw ParseError(source, lineno, "malformed decision record");
  if (event == "observe") r.event = Event::observe;
  else if (event == "pause") r.event = Event::pause;
  else if (event == "resume") r.event = Event::resume;
  else throw ParseError(source, lineno, "unknown event '" + event + "'");
  if (avg != "nan") r.avg = std::stod(avg);
  if (phase == "active") r.phase = Phase::active;
  else if (phase == "paused") r.phase = Phase::paused;
  else throw ParseError(source, lineno, "unknown phase '" + phase + "'");
  if (link == "link=d2d") r.link = Link::d2d;
  else if (link == "link=cell") r.link = Link::cell;
  else throw ParseError(source, lineno, "unknown link '" + link + "'");
  return r;
}

inline void write_log(std::ostream& out, const std::vector<DecisionRecord>& log) {
  for (const auto& r : log) out << format_record(r) << '\n';
}

}  // namespace omcn
