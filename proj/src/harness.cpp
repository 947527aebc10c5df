#include "sparselb/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "sparselb/common.hpp"
#include "sparselb/parallel.hpp"

namespace sparselb {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Fields containing commas or quotes are quoted.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

const char* regime_name(Regime r) { return r == Regime::High ? "high" : "low"; }

}  // namespace

MeanCi mean_ci95(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("confidence interval needs at least two samples");
  const double n = static_cast<double>(samples.size());
  MeanCi r;
  r.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - r.mean) * (x - r.mean);
  r.stddev = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  r.halfwidth = boost::math::quantile(boost::math::complement(dist, 0.025)) * r.stddev / std::sqrt(n);
  return r;
}

bool ci_disjoint(const CellResult& a, const CellResult& b) {
  return a.upper() < b.lower() || b.upper() < a.lower();
}

bool ci_overlap(const CellResult& a, const CellResult& b) { return !ci_disjoint(a, b); }

std::uint64_t cell_seed(std::uint64_t master, const std::string& topology_key, const std::string& policy_key,
                        double delta_t) {
  std::uint64_t s = combine_seed(master, hash_string(topology_key));
  s = combine_seed(s, hash_string(policy_key));
  return combine_seed(s, std::bit_cast<std::uint64_t>(delta_t));
}

CellResult evaluate(const Topology& topology, const Policy& policy, double delta_t, const SystemParams& params,
                    std::uint64_t seed, const EvalOptions& options) {
  if (options.episodes < 2) throw std::invalid_argument("need at least two episodes");
  if (!(delta_t > 0.0)) throw std::invalid_argument("epoch length must be positive");
  const auto start = std::chrono::steady_clock::now();
  CellResult cell;
  cell.policy = policy.name();
  cell.delta_t = delta_t;
  cell.episodes = options.episodes;
  cell.episode_totals.assign(static_cast<std::size_t>(options.episodes), 0.0);
  if (options.keep_traces) cell.traces.resize(static_cast<std::size_t>(options.episodes));
  parallel_for(static_cast<std::size_t>(options.episodes), options.workers, [&](std::size_t k) {
    EpisodeResult r = run_episode(topology, policy, options.horizon, delta_t, params, combine_seed(seed, k));
    cell.episode_totals[k] = r.total_drops;
    if (options.keep_traces) cell.traces[k] = std::move(r);
  });
  const MeanCi ci = mean_ci95(cell.episode_totals);
  cell.mean_drops = ci.mean;
  cell.ci_halfwidth = ci.halfwidth;
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

void ExperimentConfig::validate() const {
  if (topologies.empty()) throw std::invalid_argument("no topology given");
  if (policies.empty()) throw std::invalid_argument("no policy given");
  if (delta_ts.empty()) throw std::invalid_argument("no delta_t given");
  for (double dt : delta_ts) {
    if (!(dt > 0.0)) throw std::invalid_argument("delta_t must be positive");
  }
  if (episodes < 2) throw std::invalid_argument("episodes must be >= 2");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (system.buffer < 1) throw std::invalid_argument("buffer must be >= 1");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("topologies")) {
    c.topologies.clear();
    for (const auto& t : j.at("topologies")) c.topologies.push_back(TopologySpec::from_json(t));
  } else if (j.contains("topology")) {
    c.topologies = {TopologySpec::from_json(j.at("topology"))};
  }
  if (j.contains("delta_t")) {
    const auto& d = j.at("delta_t");
    c.delta_ts = d.is_array() ? d.get<std::vector<double>>() : std::vector<double>{d.get<double>()};
  }
  if (j.contains("policies")) {
    for (const auto& p : j.at("policies")) c.policies.push_back(PolicySpec::from_json(p));
  } else {
    c.policies = {PolicySpec::parse("jsq"), PolicySpec::parse("rnd"), PolicySpec::parse("own")};
  }
  c.episodes = j.value("episodes", c.episodes);
  c.horizon = j.value("horizon", c.horizon);
  if (j.contains("system")) c.system = SystemConfig::from_json(j.at("system"));
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["topologies"] = nlohmann::json::array();
  for (const auto& t : topologies) j["topologies"].push_back(t.to_json());
  j["delta_t"] = delta_ts;
  j["policies"] = nlohmann::json::array();
  for (const auto& p : policies) j["policies"].push_back(p.to_json());
  j["episodes"] = episodes;
  j["horizon"] = horizon;
  j["system"] = system.to_json();
  j["seed"] = seed;
  return j;
}

std::vector<CellResult> sweep(const ExperimentConfig& config, int workers, bool keep_traces,
                              const CellProgress& progress) {
  config.validate();
  EvalOptions options{config.episodes, config.horizon, workers, keep_traces};
  std::vector<CellResult> cells;
  for (const auto& tspec : config.topologies) {
    const std::string tkey = tspec.key();
    std::optional<Topology> topology;
    std::optional<SystemParams> params;
    std::string setup_error;
    try {
      topology.emplace(tspec.build());
      params.emplace(config.system.instantiate(topology->size()));
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (const auto& pspec : config.policies) {
      std::unique_ptr<Policy> policy;
      std::string policy_error = setup_error;
      if (policy_error.empty()) {
        try {
          policy = pspec.build();
        } catch (const std::exception& e) {
          policy_error = e.what();
        }
      }
      for (double dt : config.delta_ts) {
        CellResult cell;
        if (policy_error.empty()) {
          try {
            cell = evaluate(*topology, *policy, dt, *params, cell_seed(config.seed, tkey, pspec.key(), dt), options);
          } catch (const std::exception& e) {
            cell = CellResult{};
            cell.error = e.what();
          }
        } else {
          cell.error = policy_error;
        }
        cell.topology = tkey;
        cell.policy = pspec.key();
        cell.delta_t = dt;
        cell.episodes = config.episodes;
        if (progress) progress(cell);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

Ranking compare_ranking(std::span<const CellResult> cells) {
  if (cells.size() < 2) throw std::invalid_argument("ranking needs at least two policies");
  Ranking r;
  r.topology = cells[0].topology;
  r.delta_t = cells[0].delta_t;
  std::vector<const CellResult*> sorted;
  for (const auto& c : cells) {
    if (c.topology != r.topology || c.delta_t != r.delta_t) {
      throw std::invalid_argument("ranking cells must share topology and delta_t");
    }
    if (c.ok()) sorted.push_back(&c);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CellResult* a, const CellResult* b) { return a->mean_drops < b->mean_drops; });
  for (const CellResult* c : sorted) r.order.push_back({c->policy, c->mean_drops, c->ci_halfwidth});
  r.separated.assign(sorted.size(), std::vector<bool>(sorted.size(), false));
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    for (std::size_t b = 0; b < sorted.size(); ++b) {
      if (a != b) r.separated[a][b] = ci_disjoint(*sorted[a], *sorted[b]);
    }
  }
  return r;
}

std::vector<Ranking> compare_rankings(std::span<const CellResult> cells) {
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::vector<CellResult>> groups;
  for (const auto& c : cells) {
    const auto key = std::make_pair(c.topology, c.delta_t);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(c);
  }
  std::vector<Ranking> out;
  for (const auto& key : keys) {
    const auto& group = groups.at(key);
    if (group.size() >= 2) out.push_back(compare_ranking(group));
  }
  return out;
}

bool rankings_consistent(const Ranking& a, const Ranking& b) {
  auto position = [](const Ranking& r, const std::string& p) -> std::ptrdiff_t {
    for (std::size_t k = 0; k < r.order.size(); ++k) {
      if (r.order[k].policy == p) return static_cast<std::ptrdiff_t>(k);
    }
    return -1;
  };
  for (std::size_t x = 0; x < a.order.size(); ++x) {
    for (std::size_t y = x + 1; y < a.order.size(); ++y) {
      const auto bx = position(b, a.order[x].policy);
      const auto by = position(b, a.order[y].policy);
      if (bx < 0 || by < 0) continue;
      if (!a.separated[x][y] || !b.separated[bx][by]) continue;
      if (bx > by) return false;
    }
  }
  return true;
}

BetheReport bethe_ablation(const ExperimentConfig& config, int workers) {
  for (const auto& t : config.topologies) {
    if (t.family != Family::Bethe) throw std::invalid_argument("bethe ablation needs Bethe topologies");
  }
  BetheReport report;
  report.cells = sweep(config, workers);
  std::map<std::pair<std::string, double>, std::map<std::string, const CellResult*>> groups;
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& c : report.cells) {
    if (!c.ok()) continue;
    const auto key = std::make_pair(c.topology, c.delta_t);
    if (!groups.contains(key)) keys.push_back(key);
    const std::string kind = c.policy.substr(0, c.policy.find(':'));
    groups[key][kind] = &c;
  }
  for (const auto& key : keys) {
    const auto& g = groups.at(key);
    BetheFinding f;
    f.delta_t = key.second;
    auto has = [&](const char* k) { return g.contains(k); };
    if (has("own") && has("rnd")) {
      f.own_beats_rnd = g.at("own")->mean_drops < g.at("rnd")->mean_drops && ci_disjoint(*g.at("own"), *g.at("rnd"));
    }
    if (has("jsq") && has("own")) {
      f.jsq_beats_own = g.at("jsq")->mean_drops < g.at("own")->mean_drops && ci_disjoint(*g.at("jsq"), *g.at("own"));
    }
    if (has("mfr") && has("own")) {
      f.mfr_worse_than_own =
          g.at("mfr")->mean_drops > g.at("own")->mean_drops && ci_disjoint(*g.at("mfr"), *g.at("own"));
    }
    report.findings.push_back(f);
  }
  return report;
}

void write_results_csv(std::ostream& out, std::span<const CellResult> cells, bool with_timing) {
  out << "topology,policy,delta_t,mean_drops,ci95,episodes,seconds\n";
  for (const auto& c : cells) {
    out << csv_field(c.topology) << ',' << csv_field(c.policy) << ',' << format_double(c.delta_t) << ',';
    if (c.ok()) {
      out << format_double(c.mean_drops) << ',' << format_double(c.ci_halfwidth);
    } else {
      out << "nan,nan";
    }
    out << ',' << c.episodes << ',' << format_double(with_timing ? c.seconds : 0.0) << '\n';
  }
}

std::vector<CellResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty results file");
  const auto header = parse_csv_line(line);
  const std::vector<std::string> expected{"topology", "policy", "delta_t", "mean_drops", "ci95", "episodes", "seconds"};
  if (header != expected) throw std::runtime_error("unexpected results header");
  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = parse_csv_line(line);
    if (f.size() != expected.size()) throw std::runtime_error("malformed results row: " + line);
    CellResult c;
    c.topology = f[0];
    c.policy = f[1];
    c.delta_t = std::stod(f[2]);
    if (f[3] == "nan") {
      c.error = "failed";
    } else {
      c.mean_drops = std::stod(f[3]);
      c.ci_halfwidth = std::stod(f[4]);
    }
    c.episodes = std::stoi(f[5]);
    c.seconds = std::stod(f[6]);
    cells.push_back(std::move(c));
  }
  return cells;
}

nlohmann::json results_json(std::span<const CellResult> cells, const nlohmann::json& meta, bool with_timing) {
  nlohmann::json j;
  j["meta"] = meta;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json cell{{"topology", c.topology},
                        {"policy", c.policy},
                        {"delta_t", c.delta_t},
                        {"episodes", c.episodes},
                        {"seconds", with_timing ? c.seconds : 0.0}};
    if (c.ok()) {
      cell["mean_drops"] = c.mean_drops;
      cell["ci95"] = c.ci_halfwidth;
      cell["episode_totals"] = c.episode_totals;
    } else {
      cell["error"] = c.error;
    }
    j["cells"].push_back(std::move(cell));
  }
  return j;
}

void write_trace_jsonl(std::ostream& out, const CellResult& cell) {
  for (std::size_t k = 0; k < cell.traces.size(); ++k) {
    const EpisodeResult& r = cell.traces[k];
    for (std::size_t t = 0; t < r.epoch_drops.size(); ++t) {
      nlohmann::json row{{"topology", cell.topology},
                         {"policy", cell.policy},
                         {"delta_t", cell.delta_t},
                         {"episode", k},
                         {"epoch", t},
                         {"regime", regime_name(r.regimes[t])},
                         {"distribution", r.distributions[t]},
                         {"mean_drops", r.epoch_drops[t]}};
      out << row.dump() << '\n';
    }
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve) {
  out << "iteration,mean_return,kl,clip_fraction,eval_drops\n";
  for (const auto& r : curve) {
    out << r.iteration << ',' << format_double(r.mean_return) << ',' << format_double(r.kl) << ','
        << format_double(r.clip_fraction) << ',' << format_double(r.eval_drops) << '\n';
  }
}

nlohmann::json make_checkpoint(const PolicyNetwork& policy, const nlohmann::json& trainer_config,
                               const nlohmann::json& env_fingerprint, int iteration) {
  return {{"format", "sparselb.checkpoint"},
          {"version", 1},
          {"iteration", iteration},
          {"policy", policy.to_json()},
          {"trainer", trainer_config},
          {"environment", env_fingerprint}};
}

}  // namespace sparselb
