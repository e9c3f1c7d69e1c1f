// omcn: run, aggregate and replay opportunistic relay transfer simulations.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "omcn/engine.hpp"
#include "omcn/metrics.hpp"
#include "omcn/replay.hpp"
#include "omcn/scenario.hpp"

namespace fs = std::filesystem;
using namespace omcn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kInvalid = 3, kRuntime = 4, kIo = 5 };

struct IoError : Error {
  using Error::Error;
};

std::vector<std::uint64_t> seed_list(int n, const std::string& list) {
  std::vector<std::uint64_t> out;
  if (!list.empty()) {
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stoull(tok));
      } catch (const std::exception&) {
        throw Error("bad seed '" + tok + "' in --seed-list");
      }
    }
  } else {
    if (n < 1) throw Error("--seeds must be >= 1");
    for (int i = 1; i <= n; ++i) out.push_back(static_cast<std::uint64_t>(i));
  }
  return out;
}

OverrideFile load_config(const std::string& path) { return path.empty() ? OverrideFile{} : load_overrides(path); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write '" + p.string() + "'");
  return f;
}

struct Job {
  std::string scenario;
  Mode mode;
  std::uint64_t seed;
};

struct Artifacts {
  RunResult result;
  std::string decision_log;
  std::string packet_trace;
  std::string sample_trace;
};

Artifacts execute(const Scenario& s, const Job& j, bool packets, bool samples) {
  Artifacts a;
  std::ostringstream pk, sm;
  RunHooks hooks;
  if (packets)
    hooks.on_packet = [&](const PacketEvent& e) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.3f %s %lld %s\n", e.t, to_string(e.hop), static_cast<long long>(e.seq),
                    e.event);
      pk << buf;
    };
  if (samples)
    hooks.on_sample = [&](double t, SampleKind k, double v, SampleOrigin o) {
      sm << format_sample(TraceSample{t, k, v, o, 0}) << '\n';
    };
  a.result = run(s, j.mode, j.seed, default_tbs_table(), hooks);
  std::ostringstream dl;
  write_log(dl, a.result.decisions);
  a.decision_log = dl.str();
  a.packet_trace = pk.str();
  a.sample_trace = sm.str();
  return a;
}

// Runs every job on `jobs` threads; results come back in job order.
std::vector<Artifacts> run_all(const std::vector<Job>& jobs, const std::map<std::string, Scenario>& scenarios,
                               int threads, bool packets, bool samples) {
  std::vector<Artifacts> out(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = execute(scenarios.at(jobs[i].scenario), jobs[i], packets, samples);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  threads = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!errors[i].empty())
      throw InvariantError(jobs[i].scenario + "/" + to_string(jobs[i].mode) + "/seed " +
                           std::to_string(jobs[i].seed) + ": " + errors[i]);
  return out;
}

void write_outputs(const fs::path& dir, const std::vector<Job>& jobs, const std::vector<Artifacts>& arts,
                   bool logs, bool packets, bool samples) {
  fs::create_directories(dir);
  std::vector<CsvRow> rows;
  for (const auto& a : arts) rows.push_back(to_row(a.result));
  auto csv = open_out(dir / "runs.csv");
  write_csv(csv, rows);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string stem = jobs[i].scenario + "_" + to_string(jobs[i].mode) + "_" + std::to_string(jobs[i].seed);
    if (logs) open_out(dir / (stem + ".decisions.log")) << arts[i].decision_log;
    if (packets) open_out(dir / (stem + ".packets.log")) << arts[i].packet_trace;
    if (samples) open_out(dir / (stem + ".samples.trace")) << arts[i].sample_trace;
  }
}

// Rejects an invalid scenario before any run starts.
Scenario checked(Scenario s) {
  if (auto p = validate(s); !p.empty()) throw ValidationError(p);
  return s;
}

int jobs_default() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? static_cast<int>(n) : 1;
}

// "key=value,key=value" for scheduler parameters.
void apply_kv(const std::string& spec, const std::function<void(const std::string&, double)>& set) {
  std::stringstream ss(spec);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("expected key=value, got '" + kv + "'");
    double v = 0;
    try {
      v = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error("bad number in '" + kv + "'");
    }
    set(kv.substr(0, eq), v);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opportunistic multi-hop cellular transfer simulator"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run one scenario in one or all modes over a seed set");
  std::string scenario_id, mode_name = "all", config, out_dir, seed_csv, format = "csv";
  int seeds = 1;
  bool logs = false, packets = false, samples = false;
  run_cmd->add_option("--scenario", scenario_id, "scenario id")->required();
  run_cmd->add_option("--mode", mode_name, "CC, OppCC, MCN, OppMCN or all");
  run_cmd->add_option("--seeds", seeds, "use seeds 1..N");
  run_cmd->add_option("--seed-list", seed_csv, "comma-separated seeds (overrides --seeds)");
  run_cmd->add_option("--config", config, "override file");
  run_cmd->add_option("--out", out_dir, "output directory (runs.csv and logs)");
  run_cmd->add_option("--format", format, "stdout format: csv or table")->check(CLI::IsMember({"csv", "table"}));
  run_cmd->add_flag("--decision-logs", logs, "write per-run decision logs to --out");
  run_cmd->add_flag("--packet-trace", packets, "write per-run packet traces to --out");
  run_cmd->add_flag("--sample-trace", samples, "write per-run scheduler input traces to --out");

  // matrix
  auto* matrix_cmd = app.add_subcommand("matrix", "all modes x scenarios x seeds, with aggregate report");
  std::vector<std::string> matrix_scenarios;
  int matrix_seeds = 20, jobs = jobs_default();
  std::string matrix_config, matrix_out;
  matrix_cmd->add_option("--scenarios", matrix_scenarios, "scenario ids (default: all trial scenarios)");
  matrix_cmd->add_option("--seeds", matrix_seeds, "seeds 1..N per group");
  matrix_cmd->add_option("--config", matrix_config, "override file");
  matrix_cmd->add_option("--out", matrix_out, "output directory");
  matrix_cmd->add_option("--jobs", jobs, "worker threads");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "feed a sample trace through both schedulers");
  std::string trace_path, d2d_spec, cell_spec, start = "paused";
  replay_cmd->add_option("--trace", trace_path, "trace file")->required();
  replay_cmd->add_option("--d2d", d2d_spec, "rssi_thr,nb_rx,nb_below_thr,t_d2d,beacon_interval as key=value,...");
  replay_cmd->add_option("--cell", cell_spec, "itbs_thr,rsrp_thr,t_cell_avg as key=value,...");
  replay_cmd->add_option("--start", start, "initial phase of both links")->check(CLI::IsMember({"active", "paused"}));

  auto* list_cmd = app.add_subcommand("list-scenarios", "list built-in scenarios");

  auto* validate_cmd = app.add_subcommand("validate", "build and validate every scenario under a config");
  std::string validate_config;
  validate_cmd->add_option("--config", validate_config, "override file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) {
      const auto cfg = load_config(config);
      std::map<std::string, Scenario> sc{{scenario_id, checked(build(scenario_id, cfg.for_scenario(scenario_id)))}};
      std::vector<Mode> modes;
      if (mode_name == "all") modes.assign(std::begin(kAllModes), std::end(kAllModes));
      else modes.push_back(parse_mode(mode_name));
      std::vector<Job> js;
      for (Mode m : modes)
        for (auto s : seed_list(seeds, seed_csv)) js.push_back({scenario_id, m, s});
      if ((logs || packets || samples) && out_dir.empty()) throw Error("log output needs --out");
      const auto arts = run_all(js, sc, 1, packets, samples);
      if (!out_dir.empty()) write_outputs(out_dir, js, arts, logs, packets, samples);
      std::vector<RunResult> results;
      for (const auto& a : arts) results.push_back(a.result);
      if (format == "csv") {
        std::vector<CsvRow> rows;
        for (const auto& r : results) rows.push_back(to_row(r));
        write_csv(std::cout, rows);
      } else {
        emit_report(std::cout, aggregate(results), ReportFormat::table);
      }
      return kOk;
    }
    if (*matrix_cmd) {
      const auto cfg = load_config(matrix_config);
      if (matrix_scenarios.empty())
        for (const auto& c : scenario_catalog())
          if (c.trial) matrix_scenarios.push_back(c.id);
      std::map<std::string, Scenario> sc;
      std::vector<Job> js;
      for (const auto& id : matrix_scenarios) {
        sc.emplace(id, checked(build(id, cfg.for_scenario(id))));
        for (Mode m : kAllModes)
          for (int s = 1; s <= matrix_seeds; ++s) js.push_back({id, m, static_cast<std::uint64_t>(s)});
      }
      const auto arts = run_all(js, sc, jobs, false, false);
      std::vector<RunResult> results;
      for (const auto& a : arts) results.push_back(a.result);
      const auto aggs = aggregate(results);
      if (!matrix_out.empty()) {
        write_outputs(matrix_out, js, arts, false, false, false);
        auto agg = open_out(fs::path(matrix_out) / "aggregate.csv");
        emit_report(agg, aggs, ReportFormat::csv);
        auto rep = open_out(fs::path(matrix_out) / "report.txt");
        emit_report(rep, aggs, ReportFormat::table);
      }
      emit_report(std::cout, aggs, ReportFormat::table);
      return kOk;
    }
    if (*replay_cmd) {
      D2dSchedulerParams dp;
      CellSchedulerParams cp;
      apply_kv(d2d_spec, [&](const std::string& k, double v) {
        if (k == "rssi_thr") dp.rssi_thr_dbm = v;
        else if (k == "nb_rx") dp.nb_rx = static_cast<int>(v);
        else if (k == "nb_below_thr") dp.nb_below_thr = static_cast<int>(v);
        else if (k == "t_d2d") dp.t_d2d_s = v;
        else if (k == "beacon_interval") dp.beacon_interval_s = v;
        else throw Error("unknown --d2d key '" + k + "'");
      });
      apply_kv(cell_spec, [&](const std::string& k, double v) {
        if (k == "itbs_thr") cp.itbs_thr = static_cast<int>(v);
        else if (k == "rsrp_thr") cp.rsrp_thr_dbm = v;
        else if (k == "t_cell_avg") cp.t_cell_avg_s = v;
        else throw Error("unknown --cell key '" + k + "'");
      });
      std::ifstream in(trace_path);
      if (!in) throw IoError("cannot open trace '" + trace_path + "'");
      const auto samples_in = parse_trace(in, trace_path);
      ReplayOptions opt;
      opt.d2d_initial = opt.cell_initial = start == "active" ? Phase::active : Phase::paused;
      write_log(std::cout, replay(samples_in, dp, cp, opt));
      return kOk;
    }
    if (*list_cmd) {
      for (const auto& c : scenario_catalog())
        std::printf("%-13s %-8s %s\n", c.id.c_str(), c.trial ? "trial" : "fixture", c.provenance.c_str());
      return kOk;
    }
    if (*validate_cmd) {
      const auto cfg = load_config(validate_config);
      int bad = 0;
      for (const auto& c : scenario_catalog()) {
        std::vector<std::string> problems;
        try {
          problems = validate(build(c.id, cfg.for_scenario(c.id)));
        } catch (const ValidationError& e) {
          problems = e.problems();
        }
        if (problems.empty()) {
          std::printf("%-13s ok\n", c.id.c_str());
        } else {
          ++bad;
          for (const auto& p : problems) std::printf("%-13s error: %s\n", c.id.c_str(), p.c_str());
        }
      }
      return bad ? kInvalid : kOk;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kConfig;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid scenario:\n");
    for (const auto& p : e.problems()) std::fprintf(stderr, "  %s\n", p.c_str());
    return kInvalid;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "run aborted: %s\n", e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
  return kOk;
}
