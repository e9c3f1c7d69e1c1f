#include <gtest/gtest.h>

#include <sstream>

#include "omcn/engine.hpp"
#include "omcn/metrics.hpp"
#include "omcn/replay.hpp"
#include "reference_executors.hpp"

using namespace omcn;

namespace {
std::vector<TraceSample> record_samples(const Scenario& s, Mode m, std::uint64_t seed, RunResult& out) {
  std::vector<TraceSample> samples;
  RunHooks h;
  h.on_sample = [&](double t, SampleKind k, double v, SampleOrigin o) {
    samples.push_back({t, k, v, o, 0});
  };
  out = run(s, m, seed, default_tbs_table(), h);
  return samples;
}
}  // namespace

TEST(Engine, ModeNames) {
  for (Mode m : kAllModes) EXPECT_EQ(parse_mode(to_string(m)), m);
  EXPECT_THROW(parse_mode("turbo"), Error);
}

TEST(Engine, SameSeedSameResult) {
  const auto s = build("outdoor_280");
  const auto a = run(s, Mode::opp_mcn, 4);
  const auto b = run(s, Mode::opp_mcn, 4);
  EXPECT_EQ(format_row(to_row(a)), format_row(to_row(b)));
  EXPECT_EQ(a.decisions, b.decisions);
  const auto c = run(s, Mode::opp_mcn, 5);
  EXPECT_NE(format_row(to_row(a)), format_row(to_row(c)));
}

TEST(Engine, PerfectLinkTtiMovesOneTransportBlock) {
  // RSRP at the reference distance with tx 0 is -pl0; anchoring the grant map
  // there gives I_TBS 18, and 17 PRBs carry tbs(18, 17) = 6712 bits.
  auto s = build("perfect_link", {{"grant.n_prb", "17"}, {"transfer.packet_payload", "1"}});
  const double rsrp = -s.cell_pl.pl0_db;
  char anchor[64];
  std::snprintf(anchor, sizeof anchor, "%.17g 18 2.5", rsrp);
  s = build("perfect_link", {{"grant.n_prb", "17"}, {"transfer.packet_payload", "1"}, {"grant.linear", anchor}});
  std::int64_t delivered = 0;
  RunHooks h;
  h.on_packet = [&](const PacketEvent& e) {
    if (std::string(e.event) == "received" || std::string(e.event) == "errored") ++delivered;
  };
  Simulation sim(s, Mode::cc, 1, default_tbs_table(), h);
  sim.step();
  EXPECT_EQ(delivered * 8, 6712);
  EXPECT_EQ(sim.result().granted_ttis, 1);
}

TEST(Engine, PositionsFollowTheTraces) {
  const auto s = build("outdoor_640");
  Simulation sim(s, Mode::mcn, 3);
  for (int k = 0; k < 3000; ++k) {
    sim.step();
    const double t = k * s.sim.tti_s;
    const Position sn = position_at(s.node(Role::source).trace, t);
    const Position rn = position_at(s.node(Role::relay).trace, t);
    EXPECT_DOUBLE_EQ(sim.sn_position().x, sn.x);
    EXPECT_DOUBLE_EQ(sim.sn_position().y, sn.y);
    EXPECT_DOUBLE_EQ(sim.rn_position().x, rn.x);
    EXPECT_DOUBLE_EQ(sim.rn_position().y, rn.y);
  }
}

TEST(Engine, InitialPhases) {
  const auto s = build("perfect_link");
  EXPECT_EQ(Simulation(s, Mode::cc, 1).result().initial_cell_phase, Phase::active);
  EXPECT_EQ(Simulation(s, Mode::opp_cc, 1).result().initial_cell_phase, Phase::paused);
  EXPECT_EQ(Simulation(s, Mode::opp_mcn, 1).result().initial_d2d_phase, Phase::paused);
  EXPECT_EQ(Simulation(s, Mode::mcn, 1).result().initial_d2d_phase, Phase::active);
}

TEST(Engine, CapStopsAnUnfinishableRun) {
  const auto s = build("always_nlos", {{"sim.cap_s", "5"}});
  const auto r = run(s, Mode::opp_cc, 1);
  EXPECT_FALSE(r.completed);
  EXPECT_DOUBLE_EQ(r.total_time_s, 5.0);
  EXPECT_EQ(r.bits_to_bs, 0);
  EXPECT_DOUBLE_EQ(spectral_efficiency(r), 0.0);
}

TEST(Engine, ReplayOfEngineSamplesReproducesItsDecisions) {
  for (const char* id : {"outdoor_640", "sc", "veh_nlos"}) {
    const auto s = build(id);
    for (Mode m : {Mode::opp_cc, Mode::opp_mcn}) {
      RunResult r;
      const auto samples = record_samples(s, m, 7, r);
      // Through the text format, as the CLI would see it.
      std::stringstream io;
      write_trace(io, samples);
      const auto parsed = parse_trace(io, "engine");
      ASSERT_EQ(parsed.size(), samples.size());
      const auto got = replay(parsed, s.d2d_sched, s.cell_sched);
      const auto oracle = ref::run(parsed, s.d2d_sched, s.cell_sched);
      ASSERT_EQ(got.size(), r.decisions.size()) << id << " " << to_string(m);
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(format_record(got[i]), format_record(r.decisions[i]));
        EXPECT_EQ(format_record(oracle[i]), format_record(r.decisions[i]));
      }
    }
  }
}

TEST(Replay, EmptyTraceGivesEmptyLog) {
  std::istringstream in("# nothing\n\n");
  EXPECT_TRUE(replay(parse_trace(in), {}, {}).empty());
}

TEST(Replay, ConstantLowD2dTracePausesOnce) {
  std::vector<TraceSample> v;
  for (int i = 0; i < 100; ++i) v.push_back({i * 0.1, SampleKind::d2d_rssi, -80.0, SampleOrigin::beacon, 0});
  ReplayOptions o;
  o.d2d_initial = Phase::active;
  const auto log = replay(v, {}, {}, o);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].event, Event::pause);
  EXPECT_NEAR(log[0].t, 0.8, 1e-9);
}

TEST(Replay, ParseErrorsCarryLineNumbers) {
  const char* bad[] = {
      "0.0 cell_rsrp -80 rs\n0.1 cell_rsrp oops rs\n",
      "0.0 cell_rsrp -80 rs\n0.1 cell_power -80 rs\n",
      "0.0 cell_rsrp -80 rs\n0.1 cell_rsrp -80 beacon\n",
      "0.0 cell_rsrp -80 rs\n0.1 cell_itbs_grant 17.5 dci\n",
      "0.5 cell_rsrp -80 rs\n0.1 cell_rsrp -80 rs\n",
      "0.0 cell_rsrp -80 rs\n0.1 cell_rsrp -80\n",
  };
  for (const char* text : bad) {
    std::istringstream in(text);
    try {
      parse_trace(in, "x");
      ADD_FAILURE() << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << text;
    }
  }
}

TEST(Replay, MatchesReferenceOnSyntheticTraces) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::vector<TraceSample> v;
    Rng r(seed);
    double x = -70;
    for (int k = 0; k < 5000; ++k) {
      x += r.normal();
      v.push_back({k * 0.001, SampleKind::cell_rsrp, x - 10, SampleOrigin::rs, 0});
      if (k % 3 == 0) v.push_back({k * 0.001, SampleKind::d2d_rssi, x, SampleOrigin::beacon, 0});
      if (k % 2 == 0)
        v.push_back({k * 0.001, SampleKind::cell_itbs_grant, std::floor(r.uniform(14, 23)), SampleOrigin::dci, 0});
    }
    EXPECT_EQ(replay(v, {}, {}), ref::run(v, {}, {}));
  }
}

TEST(Metrics, SpectralEfficiency) {
  EXPECT_DOUBLE_EQ(spectral_efficiency(1.8e6, 1.0, 10 * kPrbBandwidthHz), 1.0);
  EXPECT_DOUBLE_EQ(spectral_efficiency(0, 0, 9e6), 0.0);
  EXPECT_THROW(spectral_efficiency(1, 0, 9e6), AccountingError);
  EXPECT_THROW(spectral_efficiency(1, 1, 0), RangeError);
}

TEST(Metrics, FactorsAndReductions) {
  EXPECT_NEAR(gain_factor(29.3, 2.43), 12.0576, 1e-4);
  EXPECT_NEAR(time_reduction(14.5, 55.2), 73.73, 0.01);
  EXPECT_THROW(gain_factor(1, 0), Error);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Metrics, StudentTInterval) {
  // Two samples: t_{0.975,1} = 12.7062, s = 2*sqrt(2), n = 2.
  const auto st = summarize({10.0, 14.0});
  EXPECT_DOUBLE_EQ(st.mean, 12.0);
  EXPECT_NEAR(st.half_width, 12.7062047 * 2.0 * std::sqrt(2.0) / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(t_quantile_975(19), 2.0930241, 1e-6);
  EXPECT_THROW(summarize({1.0}), Error);
}

TEST(Metrics, AggregateRefusesTinyGroups) {
  RunResult r;
  r.scenario = "x";
  EXPECT_THROW(aggregate({r}), Error);
  EXPECT_TRUE(aggregate({}).empty());
}

TEST(Metrics, CsvRoundTrip) {
  const auto s = build("perfect_link", {{"transfer.file_bytes", "2000000"}});
  std::vector<CsvRow> rows;
  for (Mode m : kAllModes) rows.push_back(to_row(run(s, m, 2)));
  std::stringstream io;
  write_csv(io, rows);
  const auto back = parse_csv(io);
  ASSERT_EQ(back.size(), rows.size());
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(std::abs(a), std::abs(b)); };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    // Text is the canonical form; numbers survive to 15 significant digits.
    EXPECT_EQ(format_row(back[i]), format_row(rows[i]));
    EXPECT_EQ(back[i].scenario, rows[i].scenario);
    EXPECT_EQ(back[i].bits_to_bs, rows[i].bits_to_bs);
    EXPECT_TRUE(close(back[i].total_s, rows[i].total_s));
    EXPECT_TRUE(close(back[i].cellular_s, rows[i].cellular_s));
    EXPECT_TRUE(close(back[i].mean_itbs, rows[i].mean_itbs));
    EXPECT_TRUE(close(back[i].spectral_eff, rows[i].spectral_eff));
  }
  std::istringstream header_only(std::string(kCsvHeader) + "\n");
  EXPECT_TRUE(parse_csv(header_only).empty());
  std::istringstream bad(std::string(kCsvHeader) + "\nx,cc,1,2\n");
  try {
    parse_csv(bad, "b");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Metrics, ReportStatesTheMargin) {
  const auto s = build("perfect_link", {{"transfer.file_bytes", "2000000"}});
  std::vector<RunResult> rs;
  for (Mode m : kAllModes)
    for (std::uint64_t seed = 1; seed <= 3; ++seed) rs.push_back(run(s, m, seed));
  const auto aggs = aggregate(rs);
  ASSERT_EQ(aggs.size(), 4u);
  EXPECT_DOUBLE_EQ(*aggs[0].se_factor, 1.0);
  std::ostringstream table;
  emit_report(table, aggs, ReportFormat::table);
  EXPECT_NE(table.str().find("with 95% confidence intervals"), std::string::npos);
  std::ostringstream csv;
  emit_report(csv, aggs, ReportFormat::csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), kAggregateHeader);
}
