#pragma once

// Plan-view geometry shared by the radio models: positions, mobility traces,
// axis-aligned building footprints and the line-of-sight test.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omcn/errors.hpp"

namespace omcn {

struct Position {
  double x = 0.0;  // m, planar east
  double y = 0.0;  // m, planar north

  friend bool operator==(const Position&, const Position&) = default;
};

inline Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y}; }
inline Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }
inline Position operator*(double s, Position a) { return {s * a.x, s * a.y}; }

inline double norm(Position v) { return std::hypot(v.x, v.y); }
inline double distance(Position a, Position b) { return norm(a - b); }

inline Position lerp(Position a, Position b, double f) {
  return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
}

// Axis-aligned building footprint.
struct Obstacle {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  double penetration_loss_db = 0.0;  // per traversal
  std::string name;
  bool blocks_d2d = true;

  static Obstacle from_corners(Position a, Position b, double loss_db, std::string name = {}) {
    return {std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y),
            loss_db, std::move(name), true};
  }

  std::array<Position, 4> corners() const {
    return {Position{x_min, y_min}, Position{x_max, y_min}, Position{x_max, y_max},
            Position{x_min, y_max}};
  }

  bool contains(Position p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  // Distance from an interior point to the nearest wall; 0 outside.
  double depth(Position p) const {
    if (!contains(p)) return 0.0;
    return std::min({p.x - x_min, x_max - p.x, p.y - y_min, y_max - p.y});
  }

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
           std::isfinite(y_max) && x_max > x_min && y_max > y_min &&
           penetration_loss_db >= 0.0;
  }
};

// Closed segment vs closed rectangle (Liang-Barsky clipping).
inline bool segment_intersects(Position a, Position b, const Obstacle& r) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - r.x_min, r.x_max - a.x, a.y - r.y_min, r.y_max - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

struct LosResult {
  bool los = true;
  double penetration_loss_db = 0.0;
  // True when at least one blocking obstacle contains neither endpoint, i.e.
  // the path is shadowed by a building corner rather than by the walls a
  // node is standing inside.
  bool corner_blocked = false;
};

inline LosResult is_los(Position a, Position b, std::span<const Obstacle> obstacles) {
  LosResult r;
  for (const auto& o : obstacles) {
    if (!segment_intersects(a, b, o)) continue;
    r.los = false;
    r.penetration_loss_db += o.penetration_loss_db;
    if (!o.contains(a) && !o.contains(b)) r.corner_blocked = true;
  }
  return r;
}

// Deepest indoor depth of p across all footprints that contain it.
inline double indoor_depth(Position p, std::span<const Obstacle> obstacles) {
  double d = 0.0;
  for (const auto& o : obstacles) d = std::max(d, o.depth(p));
  return d;
}

struct Waypoint {
  double t = 0.0;  // s since run start
  Position pos;
};

struct MobilityTrace {
  std::vector<Waypoint> waypoints;
  std::optional<double> indoor_until;  // s; when the node leaves the building

  static MobilityTrace fixed(Position p) { return MobilityTrace{{Waypoint{0.0, p}}, {}}; }

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (waypoints.empty()) out.emplace_back("trace has no waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      const auto& w = waypoints[i];
      if (!(w.t >= 0.0)) out.push_back("waypoint " + std::to_string(i) + " has negative time");
      if (!std::isfinite(w.pos.x) || !std::isfinite(w.pos.y))
        out.push_back("waypoint " + std::to_string(i) + " has a non-finite position");
      if (i > 0 && !(w.t > waypoints[i - 1].t))
        out.push_back("waypoint times not strictly increasing at index " + std::to_string(i));
    }
    if (indoor_until && *indoor_until < 0.0) out.emplace_back("indoor_until is negative");
    return out;
  }

  double end_time() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }
};

// Piecewise-linear interpolation, clamped to the first/last waypoint.
inline Position position_at(const MobilityTrace& trace, double t) {
  const auto& w = trace.waypoints;
  if (w.empty()) throw RangeError("position_at: empty trace");
  if (t <= w.front().t) return w.front().pos;
  if (t >= w.back().t) return w.back().pos;
  auto hi = std::upper_bound(w.begin(), w.end(), t,
                             [](double v, const Waypoint& p) { return v < p.t; });
  auto lo = hi - 1;
  const double f = (t - lo->t) / (hi->t - lo->t);
  return lerp(lo->pos, hi->pos, f);
}

// Stops the node at its position at `at` for `dwell` seconds; later waypoints
// shift by `dwell`.
inline MobilityTrace with_dwell(const MobilityTrace& trace, double at, double dwell) {
  if (dwell <= 0.0) return trace;
  MobilityTrace out;
  out.indoor_until = trace.indoor_until;
  const Position stop = position_at(trace, at);
  bool inserted = false;
  for (const auto& w : trace.waypoints) {
    if (!inserted && w.t >= at) {
      out.waypoints.push_back({at, stop});
      out.waypoints.push_back({at + dwell, stop});
      inserted = true;
      if (w.t == at) continue;
    }
    out.waypoints.push_back(inserted ? Waypoint{w.t + dwell, w.pos} : w);
  }
  if (!inserted) out.waypoints.push_back({at + dwell, stop});
  return out;
}

// Builds a trace walking a polyline at constant speed starting at t0.
inline MobilityTrace walk(std::span<const Position> path, double speed, double t0 = 0.0) {
  MobilityTrace tr;
  if (path.empty()) return tr;
  double t = t0;
  if (t0 > 0.0) tr.waypoints.push_back({0.0, path.front()});
  tr.waypoints.push_back({t, path.front()});
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double d = distance(path[i - 1], path[i]);
    if (d <= 0.0) continue;
    t += d / speed;
    tr.waypoints.push_back({t, path[i]});
  }
  return tr;
}

enum class Role { source, relay, base_station, server };
enum class Mount { handheld, in_vehicle_cabin, vehicle_roof };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::source: return "source";
    case Role::relay: return "relay";
    case Role::base_station: return "base_station";
    case Role::server: return "server";
  }
  return "?";
}

inline const char* to_string(Mount m) {
  switch (m) {
    case Mount::handheld: return "handheld";
    case Mount::in_vehicle_cabin: return "in_vehicle_cabin";
    case Mount::vehicle_roof: return "vehicle_roof";
  }
  return "?";
}

struct NodeSpec {
  std::string id;
  Role role = Role::source;
  MobilityTrace trace;
  Mount mount = Mount::handheld;
};

}  // namespace omcn
