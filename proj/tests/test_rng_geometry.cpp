#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "omcn/geometry.hpp"
#include "omcn/rng.hpp"
#include "omcn/scenario.hpp"

using namespace omcn;

TEST(Rng, SameSeedAndStreamRepeat) {
  Rng a(42, "shadow.cell"), b(42, "shadow.cell"), c(42, "shadow.d2d");
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, NormalMoments) {
  Rng r(7);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.01);
}

TEST(Geometry, PositionAtClampsAndInterpolates) {
  EXPECT_EQ(position_at(MobilityTrace::fixed({0, 0}), 100.0), (Position{0, 0}));
  MobilityTrace tr{{{0.0, {0, 0}}, {10.0, {10, 0}}}, {}};
  EXPECT_EQ(position_at(tr, 5.0), (Position{5, 0}));
  EXPECT_EQ(position_at(tr, -1.0), (Position{0, 0}));
  EXPECT_EQ(position_at(tr, 11.0), (Position{10, 0}));
}

TEST(Geometry, PositionAtHitsWaypointsExactly) {
  const std::vector<Position> path{{0, 0}, {3, 4}, {3, 10}, {-7, 10}};
  const auto tr = walk(path, 1.3);
  for (const auto& w : tr.waypoints) EXPECT_EQ(position_at(tr, w.t), w.pos);
}

TEST(Geometry, WithDwellHoldsPositionAndShifts) {
  MobilityTrace tr{{{0.0, {0, 0}}, {10.0, {10, 0}}}, {}};
  const auto d = with_dwell(tr, 4.0, 3.0);
  EXPECT_EQ(position_at(d, 4.0), (Position{4, 0}));
  EXPECT_EQ(position_at(d, 6.5), (Position{4, 0}));
  EXPECT_EQ(position_at(d, 7.0), (Position{4, 0}));
  EXPECT_EQ(position_at(d, 13.0), (Position{10, 0}));
  EXPECT_TRUE(d.problems().empty());
  // Dwell exactly at an existing waypoint.
  const auto e = with_dwell(tr, 10.0, 2.0);
  EXPECT_EQ(position_at(e, 11.0), (Position{10, 0}));
  EXPECT_TRUE(e.problems().empty());
}

TEST(Geometry, IsLosEmptyAndBlocked) {
  const auto r0 = is_los({0, 0}, {10, 0}, {});
  EXPECT_TRUE(r0.los);
  EXPECT_EQ(r0.penetration_loss_db, 0.0);
  const std::vector<Obstacle> obs{Obstacle::from_corners({4, -1}, {6, 1}, 20.0)};
  const auto r1 = is_los({0, 0}, {10, 0}, obs);
  EXPECT_FALSE(r1.los);
  EXPECT_EQ(r1.penetration_loss_db, 20.0);
  EXPECT_TRUE(r1.corner_blocked);
}

namespace {

// Dense sampling along the segment; catches any crossing wider than the step.
bool sampled_blocked(Position a, Position b, const std::vector<Obstacle>& obs, int steps = 4000) {
  for (int i = 0; i <= steps; ++i) {
    const Position p = lerp(a, b, static_cast<double>(i) / steps);
    for (const auto& o : obs)
      if (o.contains(p)) return true;
  }
  return false;
}

std::vector<Obstacle> random_obstacles(Rng& r) {
  std::vector<Obstacle> obs;
  const int n = 1 + static_cast<int>(r.uniform() * 4);
  for (int i = 0; i < n; ++i) {
    const Position c{r.uniform(-50, 50), r.uniform(-50, 50)};
    const double w = r.uniform(2, 20), h = r.uniform(2, 20);
    obs.push_back(Obstacle::from_corners({c.x - w, c.y - h}, {c.x + w, c.y + h}, r.uniform(0, 20)));
  }
  return obs;
}

}  // namespace

TEST(Geometry, IsLosMatchesSamplingOracleAndIsSymmetric) {
  Rng r(11);
  int disagreements = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto obs = random_obstacles(r);
    const Position a{r.uniform(-80, 80), r.uniform(-80, 80)}, b{r.uniform(-80, 80), r.uniform(-80, 80)};
    const auto ab = is_los(a, b, obs), ba = is_los(b, a, obs);
    EXPECT_EQ(ab.los, ba.los);
    EXPECT_EQ(ab.penetration_loss_db, ba.penetration_loss_db);
    // The sampler can only miss grazing crossings, never invent one.
    const bool sampled = sampled_blocked(a, b, obs);
    if (sampled) {
      EXPECT_FALSE(ab.los);
    }
    if (sampled == ab.los) ++disagreements;
  }
  EXPECT_LE(disagreements, 4);
}

TEST(Geometry, MovingAwayAlongExteriorNormalKeepsLos) {
  Rng r(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto o = Obstacle::from_corners({r.uniform(-20, 0), r.uniform(-20, 0)}, {r.uniform(1, 20), r.uniform(1, 20)}, 10);
    const std::vector<Obstacle> obs{o};
    // Endpoint a just outside the east wall, b somewhere to the east.
    Position a{o.x_max + r.uniform(0.01, 5), r.uniform(o.y_min, o.y_max)};
    Position b{o.x_max + r.uniform(0.01, 60), r.uniform(-60, 60)};
    if (!is_los(a, b, obs).los) continue;
    for (double step : {0.5, 2.0, 10.0}) {
      const Position a2{a.x + step, a.y};
      EXPECT_TRUE(is_los(a2, b, obs).los);
      EXPECT_FALSE(sampled_blocked(a2, b, obs));
    }
  }
}

TEST(Geometry, IndoorDepthIsDistanceToNearestWall) {
  const std::vector<Obstacle> obs{Obstacle::from_corners({0, 0}, {100, 80}, 15)};
  EXPECT_DOUBLE_EQ(indoor_depth({50, 40}, obs), 40.0);
  EXPECT_DOUBLE_EQ(indoor_depth({50, 5}, obs), 5.0);
  EXPECT_DOUBLE_EQ(indoor_depth({50, -5}, obs), 0.0);
}

TEST(Scenarios, Outdoor640Distances) {
  const auto s = build("outdoor_640");
  const auto& sn = s.node(Role::source).trace;
  const Position start = position_at(sn, 0.0);
  EXPECT_NEAR(distance(start, s.bs_position), 640.0, 1.0);
  EXPECT_NEAR(distance(start, sn.waypoints[1].pos), 50.0, 1.0);
  EXPECT_NEAR(distance(start, position_at(s.node(Role::relay).trace, 0.0)), 25.0, 1.0);
  EXPECT_FALSE(is_los(start, s.bs_position, s.obstacles).los);
  const Position past_corner = position_at(sn, sn.waypoints[1].t + 5.0);
  EXPECT_TRUE(is_los(past_corner, s.bs_position, s.obstacles).los);
  // Stays LOS until the walk ends.
  for (double t = sn.waypoints[1].t + 5.0; t <= sn.end_time() + 10; t += 1.0)
    EXPECT_TRUE(is_los(position_at(sn, t), s.bs_position, s.obstacles).los) << t;
}

TEST(Scenarios, CitedDistances) {
  auto start = [](const Scenario& s, Role r) { return position_at(s.node(r).trace, 0.0); };
  EXPECT_NEAR(distance(start(build("outdoor_280"), Role::source), build("outdoor_280").bs_position), 280.0, 1.0);
  for (auto [id, d] : {std::pair{"umh1", 650.0}, {"umh2", 240.0}, {"sc", 500.0}}) {
    const auto s = build(id);
    EXPECT_NEAR(distance({0, 0}, s.bs_position), d, 1.0) << id;  // entrance at the origin
    EXPECT_NEAR(distance(start(s, Role::source), start(s, Role::relay)), 20.0, 1.0) << id;
    EXPECT_GT(*s.node(Role::source).trace.indoor_until, 0.0) << id;
    EXPECT_GT(indoor_depth(start(s, Role::source), s.obstacles), 0.0) << id;
  }
  const auto vl = build("veh_los");
  EXPECT_NEAR(distance(start(vl, Role::source), vl.bs_position), 440.0, 1.0);
  EXPECT_NEAR(distance(start(vl, Role::relay), vl.bs_position), 600.0, 1.0);
  EXPECT_EQ(vl.node(Role::relay).mount, Mount::in_vehicle_cabin);
  const auto vn = build("veh_nlos");
  EXPECT_NEAR(distance(start(vn, Role::source), vn.bs_position), 440.0, 1.0);
  EXPECT_NEAR(distance(start(vn, Role::source), start(vn, Role::relay)), 140.0, 1.0);
  EXPECT_EQ(vn.node(Role::relay).mount, Mount::vehicle_roof);
  EXPECT_FALSE(is_los(start(vn, Role::source), vn.bs_position, vn.obstacles).los);
}

TEST(Scenarios, VehLosIsLosThroughoutAndStopsNearTheSource) {
  const auto s = build("veh_los");
  const auto& sn = s.node(Role::source).trace;
  for (double t = 0; t <= sn.end_time(); t += 0.5)
    EXPECT_TRUE(is_los(position_at(sn, t), s.bs_position, s.obstacles).los);
  ASSERT_TRUE(s.traffic_light);
  const auto rn = with_dwell(s.node(Role::relay).trace, s.traffic_light->stop_at_s, s.traffic_light->dwell_s);
  const double t0 = s.traffic_light->stop_at_s;
  EXPECT_NEAR(distance(position_at(sn, t0), position_at(rn, t0)), 10.0, 1.0);
  EXPECT_EQ(position_at(rn, t0), position_at(rn, t0 + s.traffic_light->dwell_s));
}

TEST(Scenarios, PerfectLinkFixture) {
  const auto s = build("perfect_link");
  EXPECT_TRUE(s.obstacles.empty());
  EXPECT_EQ(s.cell_pl.shadowing_sigma_db, 0.0);
  for (const auto& n : s.nodes)
    EXPECT_LE(distance(n.trace.waypoints.front().pos, s.bs_position), s.cell_pl.d0_m + 1e-12);
}

TEST(Scenarios, AllBuiltInsValidate) {
  for (const auto& c : scenario_catalog()) EXPECT_TRUE(validate(build(c.id)).empty()) << c.id;
}

TEST(Scenarios, ValidateEnumeratesEveryProblem) {
  auto s = build("outdoor_640");
  s.nodes.push_back(s.nodes.front());  // second source
  s.traffic_light = TrafficLight{1.0, -5.0, 0.5};
  s.nodes[1].trace.waypoints.push_back({0.0, {0, 0}});  // time goes backwards
  const auto p = validate(s);
  EXPECT_EQ(p.size(), 3u);
}

TEST(Scenarios, UnknownIdAndOverrides) {
  EXPECT_THROW(build("nowhere"), Error);
  EXPECT_THROW(build("sc", {{"no.such.key", "1"}}), Error);
  EXPECT_THROW(build("sc", {{"cell.tx_power_dbm", "loud"}}), Error);
  const auto s = build("sc", {{"cell.tx_power_dbm", "12.5"}, {"geometry.pedestrian_speed", "1.0"}});
  EXPECT_EQ(s.cell_pl.tx_power_dbm, 12.5);
  EXPECT_NEAR(s.node(Role::source).trace.waypoints.back().t, 45.0, 1e-9);
}

TEST(Scenarios, OverrideFileSectionsAndErrors) {
  std::istringstream in(
      "# comment\n"
      "grant.n_prb = 25\n"
      "[veh_los]\n"
      "traffic_light.dwell_s = 5   # shorter light\n");
  const auto f = parse_overrides(in);
  EXPECT_EQ(build("veh_los", f.for_scenario("veh_los")).traffic_light->dwell_s, 5.0);
  EXPECT_EQ(build("sc", f.for_scenario("sc")).grant.n_prb, 25);
  std::istringstream bad("grant.n_prb = 25\nnot a pair\n");
  try {
    parse_overrides(bad, "x.cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
