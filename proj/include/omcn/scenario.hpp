#pragma once

// Trial-site reconstructions. Each scenario carries its geometry, node traces
// and the full radio/protocol parameter set for one run; built-in scenarios
// can be patched with `key = value` overrides (dotted paths).

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "omcn/cell_scheduler.hpp"
#include "omcn/d2d_scheduler.hpp"
#include "omcn/errors.hpp"
#include "omcn/geometry.hpp"
#include "omcn/radio.hpp"
#include "omcn/transfer.hpp"

namespace omcn {

// Bursts of extra D2D attenuation from people walking between the nodes.
struct PedestrianCrossings {
  double rate_per_s = 0.0;  // 0 disables
  double depth_db = 10.0;
  double duration_s = 0.5;
};

// Vehicle stop inserted into the relay trace at `stop_at_s`; the dwell is
// drawn per seed from dwell_s * U[1 - jitter, 1 + jitter].
struct TrafficLight {
  double stop_at_s = 0.0;
  double dwell_s = 20.0;
  double jitter = 0.5;
};

struct SimParams {
  double tti_s = 0.001;
  double cap_s = 1800.0;
};

// Inputs to the geometry builders. None of these are reported by the trials;
// they are configuration defaults.
struct GeometryKnobs {
  double pedestrian_speed = 1.4;  // m/s
  double vehicle_speed = 8.3;     // m/s (30 km/h)
  double street_width = 15.0;     // m
  double indoor_depth = 40.0;     // m walked inside before the entrance
  double traffic_light_dwell = 20.0;
  double traffic_light_jitter = 0.5;
};

struct Scenario {
  std::string id;
  std::string description;
  Position bs_position;
  std::vector<Obstacle> obstacles;
  std::vector<NodeSpec> nodes;
  PathLossParams cell_pl;
  PathLossParams d2d_pl;
  GrantPolicy grant;
  D2dRateTable d2d_rates;
  BlockErrorModel cell_bler;
  BlockErrorModel d2d_bler;
  PedestrianCrossings crossings;
  TransferParams transfer;
  D2dSchedulerParams d2d_sched;
  CellSchedulerParams cell_sched;
  bool static_cc = false;
  std::optional<TrafficLight> traffic_light;
  SimParams sim;
  GeometryKnobs knobs;

  const NodeSpec* find(Role r) const {
    for (const auto& n : nodes)
      if (n.role == r) return &n;
    return nullptr;
  }

  const NodeSpec& node(Role r) const {
    if (const auto* n = find(r)) return *n;
    throw Error("scenario '" + id + "' has no " + std::string(to_string(r)) + " node");
  }

  // Obstacles that affect the D2D link.
  std::vector<Obstacle> d2d_obstacles() const {
    std::vector<Obstacle> out;
    for (const auto& o : obstacles)
      if (o.blocks_d2d) out.push_back(o);
    return out;
  }
};

// Every violated invariant, not just the first.
inline std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> out;
  auto append = [&](std::vector<std::string> v) {
    for (auto& x : v) out.push_back(std::move(x));
  };
  int sources = 0, relays = 0, bss = 0;
  for (const auto& n : s.nodes) {
    if (n.role == Role::source) ++sources;
    if (n.role == Role::relay) ++relays;
    if (n.role == Role::base_station) ++bss;
    for (auto& p : n.trace.problems()) out.push_back("node '" + n.id + "': " + p);
    if (n.role == Role::base_station && n.trace.waypoints.size() != 1)
      out.push_back("base station '" + n.id + "' must have a single fixed waypoint");
  }
  if (sources != 1) out.push_back("expected exactly one source node, found " + std::to_string(sources));
  if (bss != 1) out.push_back("expected exactly one base_station node, found " + std::to_string(bss));
  if (relays > 1) out.push_back("expected at most one relay node, found " + std::to_string(relays));
  for (std::size_t i = 0; i < s.obstacles.size(); ++i)
    if (!s.obstacles[i].valid())
      out.push_back("obstacle " + std::to_string(i) + " is degenerate or has negative loss");
  append(s.cell_pl.problems("cell path loss"));
  append(s.d2d_pl.problems("d2d path loss"));
  append(s.grant.problems());
  append(s.d2d_rates.problems());
  append(s.transfer.problems());
  append(s.d2d_sched.problems());
  append(s.cell_sched.problems());
  if (!(s.cell_bler.slope_per_db > 0.0) || !(s.d2d_bler.slope_per_db > 0.0))
    out.emplace_back("block-error slopes must be > 0");
  if (!(s.crossings.rate_per_s >= 0.0) || !(s.crossings.depth_db >= 0.0) ||
      !(s.crossings.duration_s > 0.0))
    out.emplace_back("pedestrian crossing parameters out of range");
  if (s.traffic_light) {
    if (!(s.traffic_light->dwell_s >= 0.0)) out.emplace_back("traffic light dwell must be >= 0");
    if (!(s.traffic_light->jitter >= 0.0 && s.traffic_light->jitter <= 1.0))
      out.emplace_back("traffic light jitter must be in [0, 1]");
    if (!(s.traffic_light->stop_at_s >= 0.0)) out.emplace_back("traffic light stop time must be >= 0");
  }
  if (!(s.sim.tti_s > 0.0) || !(s.sim.cap_s > 0.0)) out.emplace_back("sim tti and cap must be > 0");
  if (s.grant.n_prb < 1) out.emplace_back("grant.n_prb must be >= 1");
  return out;
}

namespace detail {

inline Position unit(Position v) { return (1.0 / norm(v)) * v; }

inline PathLossParams cellular_defaults() {
  PathLossParams p;
  p.pl0_db = 38.0;  // ~free space at 1 m, 1.8 GHz
  p.d0_m = 1.0;
  p.exponent_los = 2.7;
  p.exponent_nlos = 4.0;
  p.shadowing_sigma_db = 4.0;
  p.shadowing_corr_m = 10.0;
  p.corner_loss_db = 12.0;
  p.vehicle_cabin_loss_db = 8.0;
  p.indoor_depth_loss_db_per_m = 0.8;
  p.tx_power_dbm = 55.5;
  return p;
}

inline PathLossParams d2d_defaults(bool five_ghz) {
  PathLossParams p;
  p.tx_power_dbm = 18.0;
  p.pl0_db = five_ghz ? 46.4 : 40.0;
  p.d0_m = 1.0;
  p.exponent_los = five_ghz ? 2.6 : 2.8;
  p.exponent_nlos = 3.5;
  p.shadowing_sigma_db = 3.0;
  p.shadowing_corr_m = 5.0;
  p.corner_loss_db = 15.0;
  p.vehicle_cabin_loss_db = 8.0;
  p.indoor_depth_loss_db_per_m = 0.0;
  return p;
}

inline Scenario base(std::string id, std::string description, const GeometryKnobs& k) {
  Scenario s;
  s.id = std::move(id);
  s.description = std::move(description);
  s.knobs = k;
  s.cell_pl = cellular_defaults();
  s.d2d_pl = d2d_defaults(false);
  s.grant = GrantPolicy::linear(-80.0, 18, 2.5, 50, 8.0);
  s.cell_bler.slope_per_db = 0.7;
  s.d2d_bler.slope_per_db = 1.0;
  return s;
}

inline NodeSpec node(std::string id, Role r, MobilityTrace tr, Mount m = Mount::handheld) {
  return NodeSpec{std::move(id), r, std::move(tr), m};
}

// Pedestrian street that dead-ends into a cross street: the source walks
// north `to_corner` metres, turns west and keeps walking. A building fills
// the block south-west of the intersection, two metres from the walking line,
// so the base station (west-north-west) is hidden until the corner.
struct CornerSite {
  double bs_distance;
  double to_corner;
  double building_penetration_db;
  double building_south_y;  // southern edge of the block (local frame)
  double post_corner_walk;
};

inline constexpr double kWallClearance = 2.0;

inline Obstacle corner_building(const CornerSite& c) {
  return Obstacle::from_corners({-kWallClearance - 80.0, c.building_south_y},
                                {-kWallClearance, c.to_corner - kWallClearance},
                                c.building_penetration_db, "corner block");
}

inline Position corner_bs(const CornerSite& c) {
  return c.bs_distance * unit(Position{-2.0, 1.0});
}

inline Scenario outdoor(const std::string& id, double bs_distance, double penetration_db,
                        double tx_power_dbm, const GeometryKnobs& k) {
  Scenario s = base(id,
                    "pedestrian corner turn, BS " + std::to_string(static_cast<int>(bs_distance)) +
                        " m away under NLOS; relay 25 m ahead",
                    k);
  CornerSite c{bs_distance, 50.0, penetration_db, -150.0, 0.0};
  s.bs_position = corner_bs(c);
  c.post_corner_walk = std::min(300.0, 0.5 * std::abs(s.bs_position.x));
  s.obstacles.push_back(corner_building(c));
  s.cell_pl.tx_power_dbm = tx_power_dbm;

  const double L = c.to_corner;
  const std::vector<Position> sn_path{{0.0, 0.0}, {0.0, L}, {-c.post_corner_walk, L}};
  const std::vector<Position> rn_path{{0.0, 25.0}, {0.0, L}, {-c.post_corner_walk - 25.0, L}};
  s.nodes.push_back(node("sn", Role::source, walk(sn_path, k.pedestrian_speed)));
  s.nodes.push_back(node("rn", Role::relay, walk(rn_path, k.pedestrian_speed)));
  s.nodes.push_back(node("bs", Role::base_station, MobilityTrace::fixed(s.bs_position)));
  return s;
}

// Source starts `indoor_depth` metres inside a building on its centre line and
// walks out through the entrance; the relay walks 20 m ahead. Both stop just
// outside. The outdoor BS faces the entrance.
inline Scenario indoor(const std::string& id, double bs_distance, double tx_power_dbm,
                       const GeometryKnobs& k) {
  Scenario s = base(id,
                    "indoor-to-outdoor walk to the entrance, BS " +
                        std::to_string(static_cast<int>(bs_distance)) +
                        " m from the entrance; relay 20 m ahead",
                    k);
  s.d2d_pl = d2d_defaults(true);
  s.cell_pl.tx_power_dbm = tx_power_dbm;
  const double depth = k.indoor_depth;
  // Entrance at the origin on the building's southern wall.
  Obstacle b = Obstacle::from_corners({-60.0, 0.0}, {60.0, 2.0 * depth + 20.0}, 15.0, "building");
  b.blocks_d2d = false;  // both nodes walk the same open corridor
  s.obstacles.push_back(b);
  s.bs_position = {0.0, -bs_distance};
  s.crossings = PedestrianCrossings{0.2, 10.0, 0.5};

  const double outside = 5.0;
  const std::vector<Position> sn_path{{0.0, depth}, {0.0, -outside}};
  const std::vector<Position> rn_path{{0.0, depth - 20.0}, {0.0, -outside - 20.0}};
  auto sn = walk(sn_path, k.pedestrian_speed);
  sn.indoor_until = depth / k.pedestrian_speed;
  auto rn = walk(rn_path, k.pedestrian_speed);
  rn.indoor_until = (depth - 20.0) / k.pedestrian_speed;
  s.nodes.push_back(node("sn", Role::source, std::move(sn)));
  s.nodes.push_back(node("rn", Role::relay, std::move(rn)));
  s.nodes.push_back(node("bs", Role::base_station, MobilityTrace::fixed(s.bs_position)));
  return s;
}

inline Scenario veh_los(const GeometryKnobs& k) {
  Scenario s = base("veh_los",
                    "pedestrian 440 m from the BS under LOS; relay in a car cabin starting 600 m "
                    "away, stopping at a traffic light next to the pedestrian",
                    k);
  s.bs_position = {0.0, 0.0};
  // Long straight arterial: steeper LOS decay than the pedestrian sites.
  s.cell_pl.exponent_los = 3.3;
  s.cell_pl.tx_power_dbm = 18.2;
  const double lane = 2.0 * k.street_width / 3.0;  // sidewalk-to-lane offset, ~10 m
  const double vp = k.pedestrian_speed, vv = k.vehicle_speed;
  const std::vector<Position> sn_path{{440.0, 0.0}, {30.0, 0.0}};
  // Light placed where the car draws level with the walking pedestrian.
  const double x_light = (440.0 - vp * 600.0 / vv) / (1.0 - vp / vv);
  const double t_light = (600.0 - x_light) / vv;
  const double x_park = 17.0;
  MobilityTrace rn;
  rn.waypoints = {{0.0, {600.0, lane}},
                  {t_light, {x_light, lane}},
                  {t_light + (x_light - x_park) / vv, {x_park, lane}}};
  s.traffic_light = TrafficLight{t_light, k.traffic_light_dwell, k.traffic_light_jitter};
  s.nodes.push_back(node("sn", Role::source, walk(sn_path, vp)));
  s.nodes.push_back(node("rn", Role::relay, std::move(rn), Mount::in_vehicle_cabin));
  s.nodes.push_back(node("bs", Role::base_station, MobilityTrace::fixed(s.bs_position)));
  return s;
}

inline Scenario veh_nlos(const GeometryKnobs& k) {
  Scenario s = base("veh_nlos",
                    "pedestrian 440 m from the BS under NLOS walking to a corner; roof-mounted "
                    "relay car starting 140 m behind follows the same route",
                    k);
  CornerSite c{440.0, 150.0, 20.0, -5.0, 200.0};
  s.bs_position = corner_bs(c);
  s.obstacles.push_back(corner_building(c));
  const double vp = k.pedestrian_speed, vv = k.vehicle_speed;
  const double L = c.to_corner;
  const std::vector<Position> sn_path{{0.0, 0.0}, {0.0, L}, {-c.post_corner_walk, L}};
  // The car drives in a lane `lane` metres off the sidewalk. It catches up to
  // 5 m behind the pedestrian, follows at walking pace to the corner, then
  // drives on towards the BS and parks.
  const double lane = k.street_width / 3.0;
  const double gap = 5.0;
  const double y0 = -std::sqrt(140.0 * 140.0 - lane * lane);
  const double t_meet = (-y0 - gap) / (vv - vp);
  const double y_meet = vp * t_meet - gap;
  const double t_turn = t_meet + (L + lane - y_meet) / vp;
  const double x_park = -250.0;
  MobilityTrace rn;
  rn.waypoints = {{0.0, {lane, y0}},
                  {t_meet, {lane, y_meet}},
                  {t_turn, {lane, L + lane}},
                  {t_turn + (lane - x_park) / vv, {x_park, L + lane}}};
  s.nodes.push_back(node("sn", Role::source, walk(sn_path, vp)));
  s.nodes.push_back(node("rn", Role::relay, std::move(rn), Mount::vehicle_roof));
  s.nodes.push_back(node("bs", Role::base_station, MobilityTrace::fixed(s.bs_position)));
  return s;
}

inline Scenario perfect_link(const GeometryKnobs& k) {
  Scenario s = base("perfect_link", "degenerate fixture: co-located nodes, LOS, no shadowing", k);
  s.bs_position = {0.0, 0.0};
  s.cell_pl.shadowing_sigma_db = 0.0;
  s.d2d_pl.shadowing_sigma_db = 0.0;
  s.cell_pl.tx_power_dbm = 0.0;
  const double d0 = s.cell_pl.d0_m;
  s.nodes.push_back(node("sn", Role::source, MobilityTrace::fixed({d0, 0.0})));
  s.nodes.push_back(node("rn", Role::relay, MobilityTrace::fixed({-d0, 0.0})));
  s.nodes.push_back(node("bs", Role::base_station, MobilityTrace::fixed(s.bs_position)));
  return s;
}

inline Scenario always_nlos(const GeometryKnobs& k) {
  Scenario s = base("always_nlos", "degenerate fixture: static nodes behind a building", k);
  s.bs_position = {0.0, 0.0};
  s.cell_pl.shadowing_sigma_db = 0.0;
  s.cell_pl.tx_power_dbm = 0.0;
  s.obstacles.push_back(Obstacle::from_corners({100.0, -50.0}, {150.0, 50.0}, 20.0, "wall"));
  s.nodes.push_back(node("sn", Role::source, MobilityTrace::fixed({300.0, 0.0})));
  s.nodes.push_back(node("rn", Role::relay, MobilityTrace::fixed({300.0, 20.0})));
  s.nodes.push_back(node("bs", Role::base_station, MobilityTrace::fixed(s.bs_position)));
  return s;
}

}  // namespace detail

struct ScenarioInfo {
  std::string id;
  std::string provenance;
  bool trial;  // reconstructs a field trial (vs. a test fixture)
};

inline const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> c{
      {"outdoor_640", "outdoor pedestrian trial, BS 640 m away behind a building", true},
      {"outdoor_280", "outdoor pedestrian trial, second site with the BS 280 m away", true},
      {"umh1", "indoor-to-outdoor, university building 1, BS 650 m from the entrance", true},
      {"umh2", "indoor-to-outdoor, university building 2, BS 240 m from the entrance", true},
      {"sc", "indoor-to-outdoor, shopping centre, BS 500 m from the entrance", true},
      {"veh_los", "vehicle relay in the cabin, pedestrian 440 m from the BS under LOS", true},
      {"veh_nlos", "roof-mounted vehicle relay, pedestrian 440 m from the BS under NLOS", true},
      {"perfect_link", "test fixture: every link at reference distance, no losses", false},
      {"always_nlos", "test fixture: static nodes permanently shadowed", false},
  };
  return c;
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error("override '" + key + "': not a number: '" + v + "'");
  return d;
}

inline int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw Error("override '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("override '" + key + "': not a boolean: '" + v + "'");
}

using Setter = std::function<void(Scenario&, const std::string&, const std::string&)>;

inline void add_pl(std::map<std::string, Setter>& m, const std::string& prefix,
                   PathLossParams Scenario::*member) {
  auto num = [&](const std::string& name, double PathLossParams::*f) {
    m[prefix + "." + name] = [member, f](Scenario& s, const std::string& k, const std::string& v) {
      (s.*member).*f = to_double(k, v);
    };
  };
  num("tx_power_dbm", &PathLossParams::tx_power_dbm);
  num("pl0_db", &PathLossParams::pl0_db);
  num("d0_m", &PathLossParams::d0_m);
  num("exponent_los", &PathLossParams::exponent_los);
  num("exponent_nlos", &PathLossParams::exponent_nlos);
  num("shadowing_sigma_db", &PathLossParams::shadowing_sigma_db);
  num("shadowing_corr_m", &PathLossParams::shadowing_corr_m);
  num("corner_loss_db", &PathLossParams::corner_loss_db);
  num("vehicle_cabin_loss_db", &PathLossParams::vehicle_cabin_loss_db);
  num("indoor_depth_loss_db_per_m", &PathLossParams::indoor_depth_loss_db_per_m);
}

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> m;
    add_pl(m, "cell", &Scenario::cell_pl);
    add_pl(m, "d2d", &Scenario::d2d_pl);
    auto dnum = [&](const std::string& key, auto apply) {
      m[key] = [apply](Scenario& s, const std::string& k, const std::string& v) {
        apply(s, to_double(k, v));
      };
    };
    dnum("grant.n_prb", [](Scenario& s, double v) { s.grant.n_prb = static_cast<int>(v); });
    dnum("grant.link_margin_db", [](Scenario& s, double v) { s.grant.link_margin_db = v; });
    m["grant.linear"] = [](Scenario& s, const std::string& k, const std::string& v) {
      // "anchor_dbm anchor_itbs step_db"
      std::istringstream in(v);
      double a = 0, step = 0;
      int i = 0;
      if (!(in >> a >> i >> step)) throw Error("override '" + k + "': expected 'anchor_dbm anchor_itbs step_db'");
      s.grant = GrantPolicy::linear(a, i, step, s.grant.n_prb, s.grant.link_margin_db);
    };
    dnum("bler.cell_slope_per_db", [](Scenario& s, double v) { s.cell_bler.slope_per_db = v; });
    dnum("bler.d2d_slope_per_db", [](Scenario& s, double v) { s.d2d_bler.slope_per_db = v; });
    dnum("d2d_rate.mac_efficiency", [](Scenario& s, double v) { s.d2d_rates.mac_efficiency = v; });
    dnum("d2d_rate.selection_margin_db", [](Scenario& s, double v) { s.d2d_rates.selection_margin_db = v; });
    dnum("crossings.rate_per_s", [](Scenario& s, double v) { s.crossings.rate_per_s = v; });
    dnum("crossings.depth_db", [](Scenario& s, double v) { s.crossings.depth_db = v; });
    dnum("crossings.duration_s", [](Scenario& s, double v) { s.crossings.duration_s = v; });
    m["transfer.file_bytes"] = [](Scenario& s, const std::string& k, const std::string& v) {
      s.transfer.file_bytes = static_cast<std::int64_t>(to_double(k, v));
    };
    m["transfer.packet_payload"] = [](Scenario& s, const std::string& k, const std::string& v) {
      s.transfer.packet_payload = to_int(k, v);
    };
    dnum("transfer.report_period_s", [](Scenario& s, double v) { s.transfer.report_period_s = v; });
    dnum("transfer.retransmit_timeout_s", [](Scenario& s, double v) { s.transfer.retransmit_timeout_s = v; });
    dnum("sched.d2d.rssi_thr_dbm", [](Scenario& s, double v) { s.d2d_sched.rssi_thr_dbm = v; });
    m["sched.d2d.nb_rx"] = [](Scenario& s, const std::string& k, const std::string& v) { s.d2d_sched.nb_rx = to_int(k, v); };
    m["sched.d2d.nb_below_thr"] = [](Scenario& s, const std::string& k, const std::string& v) { s.d2d_sched.nb_below_thr = to_int(k, v); };
    dnum("sched.d2d.t_d2d_s", [](Scenario& s, double v) { s.d2d_sched.t_d2d_s = v; });
    dnum("sched.d2d.beacon_interval_s", [](Scenario& s, double v) { s.d2d_sched.beacon_interval_s = v; });
    m["sched.cell.itbs_thr"] = [](Scenario& s, const std::string& k, const std::string& v) { s.cell_sched.itbs_thr = to_int(k, v); };
    dnum("sched.cell.rsrp_thr_dbm", [](Scenario& s, double v) { s.cell_sched.rsrp_thr_dbm = v; });
    dnum("sched.cell.t_cell_avg_s", [](Scenario& s, double v) { s.cell_sched.t_cell_avg_s = v; });
    dnum("sched.cell.rsrp_sample_period_s", [](Scenario& s, double v) { s.cell_sched.rsrp_sample_period_s = v; });
    dnum("sim.cap_s", [](Scenario& s, double v) { s.sim.cap_s = v; });
    dnum("sim.tti_s", [](Scenario& s, double v) { s.sim.tti_s = v; });
    m["static_cc"] = [](Scenario& s, const std::string& k, const std::string& v) { s.static_cc = to_bool(k, v); };
    dnum("traffic_light.dwell_s", [](Scenario& s, double v) {
      if (s.traffic_light) s.traffic_light->dwell_s = v;
    });
    dnum("traffic_light.jitter", [](Scenario& s, double v) {
      if (s.traffic_light) s.traffic_light->jitter = v;
    });
    return m;
  }();
  return m;
}

inline bool apply_geometry_key(GeometryKnobs& k, const std::string& key, const std::string& v) {
  if (key == "geometry.pedestrian_speed") k.pedestrian_speed = to_double(key, v);
  else if (key == "geometry.vehicle_speed") k.vehicle_speed = to_double(key, v);
  else if (key == "geometry.street_width") k.street_width = to_double(key, v);
  else if (key == "geometry.indoor_depth") k.indoor_depth = to_double(key, v);
  else if (key == "geometry.traffic_light_dwell") k.traffic_light_dwell = to_double(key, v);
  else if (key == "geometry.traffic_light_jitter") k.traffic_light_jitter = to_double(key, v);
  else return false;
  return true;
}

}  // namespace detail

inline std::vector<std::string> override_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  for (const char* g : {"geometry.pedestrian_speed", "geometry.vehicle_speed", "geometry.street_width",
                        "geometry.indoor_depth", "geometry.traffic_light_dwell",
                        "geometry.traffic_light_jitter"})
    keys.emplace_back(g);
  return keys;
}

// Builds a scenario by id. Geometry keys shape the traces; every other key
// patches the built scenario. Unknown ids and keys are errors.
inline Scenario build(const std::string& id, const Overrides& overrides = {}) {
  GeometryKnobs k;
  std::vector<std::pair<std::string, std::string>> rest;
  for (const auto& [key, v] : overrides) {
    if (!detail::apply_geometry_key(k, key, v)) rest.emplace_back(key, v);
  }
  if (!(k.pedestrian_speed > 0.0) || !(k.vehicle_speed > k.pedestrian_speed))
    throw ValidationError({"speeds must be positive and vehicles faster than pedestrians"});
  if (!(k.indoor_depth > 20.0)) throw ValidationError({"geometry.indoor_depth must exceed the 20 m relay lead"});
  if (!(k.street_width > 0.0)) throw ValidationError({"geometry.street_width must be > 0"});

  Scenario s;
  if (id == "outdoor_640") s = detail::outdoor(id, 640.0, 20.0, 55.5, k);
  else if (id == "outdoor_280") s = detail::outdoor(id, 280.0, 0.0, 55.5, k);
  else if (id == "umh1") s = detail::indoor(id, 650.0, 52.0, k);
  else if (id == "umh2") s = detail::indoor(id, 240.0, 44.0, k);
  else if (id == "sc") s = detail::indoor(id, 500.0, 52.0, k);
  else if (id == "veh_los") s = detail::veh_los(k);
  else if (id == "veh_nlos") s = detail::veh_nlos(k);
  else if (id == "perfect_link") s = detail::perfect_link(k);
  else if (id == "always_nlos") s = detail::always_nlos(k);
  else throw Error("unknown scenario id '" + id + "'");

  for (const auto& [key, v] : rest) {
    const auto& m = detail::setters();
    auto it = m.find(key);
    if (it == m.end()) throw Error("unknown override key '" + key + "'");
    it->second(s, key, v);
  }
  return s;
}

// `key = value` lines, `#` comments. A `[scenario_id]` header scopes the
// following keys to that scenario; keys before any header apply everywhere.
struct OverrideFile {
  Overrides global;
  std::map<std::string, Overrides> per_scenario;

  Overrides for_scenario(const std::string& id) const {
    Overrides out = global;
    if (auto it = per_scenario.find(id); it != per_scenario.end())
      out.insert(out.end(), it->second.begin(), it->second.end());
    return out;
  }
};

inline OverrideFile parse_overrides(std::istream& in, const std::string& source = "<config>") {
  OverrideFile f;
  std::string line, section;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& c : scenario_catalog()) known = known || c.id == section;
      if (!known) throw ParseError(source, lineno, "unknown scenario section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(source, lineno, "empty key or value");
    const auto keys = override_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ParseError(source, lineno, "unknown key '" + key + "'");
    (section.empty() ? f.global : f.per_scenario[section]).emplace_back(key, value);
  }
  return f;
}

inline OverrideFile load_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_overrides(in, path);
}

}  // namespace omcn
