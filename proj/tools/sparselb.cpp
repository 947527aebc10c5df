// Command-line front end: topology-info, evaluate, sweep, train, compare,
// bethe-ablation. Every subcommand reads an optional JSON config and writes
// its outputs into --out.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "sparselb/config.hpp"
#include "sparselb/harness.hpp"
#include "sparselb/trainer.hpp"

namespace fs = std::filesystem;
using namespace sparselb;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out = ".";
  bool no_timing = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--seed", c.seed, "Master seed (overrides the config)");
  app->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "Output directory");
  app->add_flag("--no-timing", c.no_timing, "Write 0 in the seconds column");
}

json load_config(const Common& c) { return c.config.empty() ? json::object() : read_json_file(c.config); }

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out);
  return fs::path(c.out);
}

// Command-line overrides on top of the config file.
struct GridFlags {
  std::vector<std::string> topologies;
  std::vector<std::string> policies;
  std::vector<double> delta_ts;
  std::optional<int> episodes;
  std::optional<int> horizon;
  bool trace = false;
};

void add_grid(CLI::App* app, GridFlags& g) {
  app->add_option("--topology", g.topologies, "Topology spec, e.g. cyc1d:101, torus:11, bethe:11:3");
  app->add_option("--policy", g.policies, "Policy spec: jsq, rnd, own, sed, zeta:<...>, mfr:<file>[:mode]");
  app->add_option("--delta-t", g.delta_ts, "Epoch length(s)");
  app->add_option("--episodes", g.episodes, "Episodes per cell");
  app->add_option("--horizon", g.horizon, "Epochs per episode");
  app->add_flag("--trace", g.trace, "Write per-epoch JSONL traces");
}

ExperimentConfig experiment(const Common& c, const GridFlags& g) {
  json j = load_config(c);
  if (!g.topologies.empty()) j["topologies"] = g.topologies;
  if (!g.policies.empty()) j["policies"] = g.policies;
  if (!g.delta_ts.empty()) j["delta_t"] = g.delta_ts;
  if (g.episodes) j["episodes"] = *g.episodes;
  if (g.horizon) j["horizon"] = *g.horizon;
  if (c.seed) j["seed"] = *c.seed;
  return ExperimentConfig::from_json(j);
}

void print_cell(const CellResult& cell) {
  if (cell.ok()) {
    std::cerr << cell.topology << "  " << cell.policy << "  dt=" << cell.delta_t << "  drops=" << cell.mean_drops
              << " +/- " << cell.ci_halfwidth << "\n";
  } else {
    std::cerr << cell.topology << "  " << cell.policy << "  dt=" << cell.delta_t << "  FAILED: " << cell.error << "\n";
  }
}

void write_results(const fs::path& dir, const std::vector<CellResult>& cells, const json& meta, bool timing,
                   bool traces) {
  {
    std::ofstream out(dir / "results.csv");
    write_results_csv(out, cells, timing);
  }
  write_json_file((dir / "results.json").string(), results_json(cells, meta, timing));
  if (traces) {
    std::ofstream out(dir / "traces.jsonl");
    for (const auto& c : cells) write_trace_jsonl(out, c);
  }
}

json ranking_json(const Ranking& r) {
  json order = json::array();
  for (const auto& p : r.order) order.push_back({{"policy", p.policy}, {"mean_drops", p.mean_drops}, {"ci95", p.ci_halfwidth}});
  json sep = json::array();
  for (std::size_t a = 0; a < r.order.size(); ++a) {
    for (std::size_t b = a + 1; b < r.order.size(); ++b) {
      sep.push_back({{"better", r.order[a].policy}, {"worse", r.order[b].policy}, {"separated", bool(r.separated[a][b])}});
    }
  }
  return {{"topology", r.topology}, {"delta_t", r.delta_t}, {"order", order}, {"pairs", sep}};
}

int cmd_topology_info(const Common& c, const std::vector<std::string>& specs, const std::string& edges) {
  json j = load_config(c);
  std::vector<TopologySpec> list;
  for (const auto& s : specs) list.push_back(TopologySpec::parse(s));
  if (list.empty()) list = ExperimentConfig::from_json(j).topologies;
  json report = json::array();
  for (const auto& spec : list) {
    const Topology g = spec.build();
    json hist = json::object();
    for (auto [d, n] : g.degree_histogram()) hist[std::to_string(d)] = n;
    const json info{{"topology", spec.key()},   {"family", to_string(g.family())}, {"nodes", g.size()},
                    {"edges", g.num_edges()},   {"min_degree", g.min_degree()},   {"max_degree", g.max_degree()},
                    {"regular", g.is_regular()}, {"connected", g.is_connected()}, {"degree_histogram", hist}};
    std::cout << info.dump(2) << "\n";
    report.push_back(info);
    if (!edges.empty()) {
      const fs::path target(edges);
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      std::ofstream out(target);
      if (!out) throw std::runtime_error("cannot write " + edges);
      write_edge_list(g, out);
    }
  }
  if (!c.out.empty() && c.out != ".") write_json_file((out_dir(c) / "topology.json").string(), report);
  return 0;
}

int cmd_sweep(const Common& c, const GridFlags& g, bool single) {
  const ExperimentConfig cfg = experiment(c, g);
  if (single && (cfg.topologies.size() != 1 || cfg.delta_ts.size() != 1)) {
    throw std::invalid_argument("evaluate takes one topology and one delta_t; use sweep for grids");
  }
  const auto cells = sweep(cfg, c.workers, g.trace, print_cell);
  write_results(out_dir(c), cells, cfg.to_json(), !c.no_timing, g.trace);
  for (const auto& cell : cells) {
    if (!cell.ok()) return 2;
  }
  return 0;
}

int cmd_compare(const Common& c, const GridFlags& g, const std::string& results) {
  std::vector<CellResult> cells;
  json meta;
  if (!results.empty()) {
    std::ifstream in(results);
    if (!in) throw std::runtime_error("cannot open '" + results + "'");
    cells = read_results_csv(in);
    meta = {{"source", results}};
  } else {
    const ExperimentConfig cfg = experiment(c, g);
    cells = sweep(cfg, c.workers, false, print_cell);
    meta = cfg.to_json();
    write_results(out_dir(c), cells, meta, !c.no_timing, false);
  }
  json out = json::array();
  for (const auto& r : compare_rankings(cells)) {
    std::cout << r.topology << " dt=" << r.delta_t << ":";
    for (std::size_t k = 0; k < r.order.size(); ++k) {
      std::cout << (k == 0 ? " " : (r.separated[k - 1][k] ? " < " : " ~ ")) << r.order[k].policy;
    }
    std::cout << "\n";
    out.push_back(ranking_json(r));
  }
  write_json_file((out_dir(c) / "ranking.json").string(), out);
  return 0;
}

int cmd_bethe(const Common& c, const GridFlags& g) {
  const ExperimentConfig cfg = experiment(c, g);
  const BetheReport report = bethe_ablation(cfg, c.workers);
  for (const auto& cell : report.cells) print_cell(cell);
  write_results(out_dir(c), report.cells, cfg.to_json(), !c.no_timing, false);
  json findings = json::array();
  for (const auto& f : report.findings) {
    findings.push_back({{"delta_t", f.delta_t},
                        {"own_beats_rnd", f.own_beats_rnd},
                        {"jsq_beats_own", f.jsq_beats_own},
                        {"mfr_worse_than_own", f.mfr_worse_than_own}});
    std::cout << "dt=" << f.delta_t << "  OWN<RND: " << (f.own_beats_rnd ? "yes" : "no")
              << "  JSQ<OWN: " << (f.jsq_beats_own ? "yes" : "no")
              << "  MFR>OWN: " << (f.mfr_worse_than_own ? "yes" : "no") << "\n";
  }
  write_json_file((out_dir(c) / "bethe_report.json").string(), findings);
  return 0;
}

int cmd_train(const Common& c, const std::string& method_flag, std::optional<int> epochs) {
  const json j = load_config(c);
  const TopologySpec tspec = TopologySpec::from_json(j.value("topology", json("cyc1d:101")));
  const Topology topology = tspec.build();
  const EnvConfig env = env_config_from_json(j.value("env", json::object()), topology.size());
  const std::uint64_t seed = c.seed.value_or(j.value("seed", std::uint64_t{0}));
  const std::string method = method_flag.empty() ? j.value("method", std::string("ppo")) : method_flag;
  const fs::path dir = out_dir(c);

  const json env_fingerprint{{"topology", tspec.key()},
                             {"nodes", topology.size()},
                             {"delta_t", env.epoch_length},
                             {"horizon", env.horizon},
                             {"observation", to_string(env.observation_mode)},
                             {"observe_regime", env.observe_regime},
                             {"expected_drop_reward", env.expected_drop_reward},
                             {"system", j.value("env", json::object()).value("system", json::object())}};
  auto progress = [](const CurveRow& r) {
    std::cerr << "iter " << r.iteration << "  return " << r.mean_return << "  kl " << r.kl << "  eval " << r.eval_drops
              << "\n";
  };

  TrainResult result;
  json trainer_json;
  if (method == "ppo") {
    TrainerConfig cfg = trainer_config_from_json(j.value("trainer", json::object()));
    if (epochs) cfg.epochs = *epochs;
    cfg.workers = c.workers;
    result = train(topology, env, cfg, seed, progress);
    trainer_json = to_json(cfg);
  } else if (method == "cem") {
    CemConfig cfg = cem_config_from_json(j.value("cem", json::object()));
    if (epochs) cfg.iterations = *epochs;
    cfg.workers = c.workers;
    result = cem_train(topology, env, cfg, seed, progress);
    trainer_json = to_json(cfg);
  } else {
    throw std::invalid_argument("unknown training method '" + method + "'");
  }
  trainer_json["method"] = method;
  trainer_json["seed"] = seed;

  const json checkpoint = make_checkpoint(result.policy, trainer_json, env_fingerprint, result.best_iteration);
  write_json_file((dir / "checkpoint.json").string(), checkpoint);
  write_json_file((dir / "policy.json").string(), result.policy.to_json());
  {
    std::ofstream out(dir / "curve.csv");
    write_curve_csv(out, result.curve);
  }

  // Optional head-to-head evaluation of the trained policy.
  if (j.contains("evaluation")) {
    const json& ev = j.at("evaluation");
    ExperimentConfig cfg;
    cfg.topologies = {tspec};
    cfg.delta_ts = {env.epoch_length};
    PolicySpec trained = PolicySpec::parse("mfr:" + (dir / "policy.json").string());
    trained.label = "mfr";
    cfg.policies = {trained};
    for (const auto& p : ev.value("baselines", std::vector<std::string>{"jsq", "rnd", "own"})) {
      cfg.policies.push_back(PolicySpec::parse(p));
    }
    cfg.episodes = ev.value("episodes", 100);
    cfg.horizon = env.horizon;
    cfg.system = SystemConfig::from_json(j.value("env", json::object()).value("system", json::object()));
    cfg.seed = ev.value("seed", seed);
    const auto cells = sweep(cfg, c.workers, false, print_cell);
    json meta = cfg.to_json();
    meta["policies"][0].erase("path");
    write_results(dir, cells, meta, !c.no_timing, false);
  }
  std::cerr << "best iteration " << result.best_iteration << "  eval drops " << result.best_eval_drops << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load balancing on sparse graphs: simulation, evaluation and MF-R training"};
  app.require_subcommand(1);

  Common common;
  GridFlags grid;

  auto* info = app.add_subcommand("topology-info", "Build a topology and print its statistics");
  std::vector<std::string> info_specs;
  std::string edges_path;
  info->add_option("--topology", info_specs, "Topology spec(s)");
  info->add_option("--write-edges", edges_path, "Write the edge list to this file");
  add_common(info, common);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate policies on one topology and epoch length");
  add_common(evaluate_cmd, common);
  add_grid(evaluate_cmd, grid);

  auto* sweep_cmd = app.add_subcommand("sweep", "Full topology x policy x delta_t grid");
  add_common(sweep_cmd, common);
  add_grid(sweep_cmd, grid);

  auto* compare_cmd = app.add_subcommand("compare", "Rank policies per topology and delta_t");
  std::string results_path;
  compare_cmd->add_option("--results", results_path, "Rank an existing results.csv instead of simulating");
  add_common(compare_cmd, common);
  add_grid(compare_cmd, grid);

  auto* bethe_cmd = app.add_subcommand("bethe-ablation", "Baselines and MF-R on Bethe lattices");
  add_common(bethe_cmd, common);
  add_grid(bethe_cmd, grid);

  auto* train_cmd = app.add_subcommand("train", "Train an MF-R policy (PPO or CEM)");
  std::string method;
  std::optional<int> epochs;
  train_cmd->add_option("--method", method, "ppo or cem")->check(CLI::IsMember({"ppo", "cem"}));
  train_cmd->add_option("--epochs", epochs, "Outer iterations (overrides the config)");
  add_common(train_cmd, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*info) return cmd_topology_info(common, info_specs, edges_path);
    if (*evaluate_cmd) return cmd_sweep(common, grid, true);
    if (*sweep_cmd) return cmd_sweep(common, grid, false);
    if (*compare_cmd) return cmd_compare(common, grid, results_path);
    if (*bethe_cmd) return cmd_bethe(common, grid);
    if (*train_cmd) return cmd_train(common, method, epochs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
