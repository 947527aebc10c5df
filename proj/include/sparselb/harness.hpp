#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparselb/config.hpp"
#include "sparselb/simulator.hpp"

namespace sparselb {

struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;  // 95%, Student-t
  double stddev = 0.0;     // sample standard deviation
};

// Needs at least two samples.
MeanCi mean_ci95(std::span<const double> samples);

struct CellResult {
  std::string topology;
  std::string policy;
  double delta_t = 0.0;
  double mean_drops = 0.0;
  double ci_halfwidth = 0.0;
  std::vector<double> episode_totals;
  int episodes = 0;
  double seconds = 0.0;
  std::string error;  // non-empty when the cell failed
  std::vector<EpisodeResult> traces;  // only when requested

  bool ok() const { return error.empty(); }
  double lower() const { return mean_drops - ci_halfwidth; }
  double upper() const { return mean_drops + ci_halfwidth; }
};

bool ci_disjoint(const CellResult& a, const CellResult& b);
bool ci_overlap(const CellResult& a, const CellResult& b);

std::uint64_t cell_seed(std::uint64_t master, const std::string& topology_key,
                        const std::string& policy_key, double delta_t);

struct EvalOptions {
  int episodes = 100;
  int horizon = 50;
  int workers = 1;
  bool keep_traces = false;
};

// Episode k runs with seed combine_seed(seed, k).
CellResult evaluate(const Topology& topology, const Policy& policy, double delta_t,
                    const SystemParams& params, std::uint64_t seed, const EvalOptions& options);

struct ExperimentConfig {
  std::vector<TopologySpec> topologies{TopologySpec{}};
  std::vector<double> delta_ts{1.0};
  std::vector<PolicySpec> policies;
  int episodes = 100;
  int horizon = 50;
  SystemConfig system;
  std::uint64_t seed = 0;

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

using CellProgress = std::function<void(const CellResult&)>;

/// Full factorial topology x policy x delta_t evaluation. A failing cell is
/// recorded with its error message and the sweep moves on.
std::vector<CellResult> sweep(const ExperimentConfig& config, int workers, bool keep_traces = false,
                              const CellProgress& progress = {});

struct RankedPolicy {
  std::string policy;
  double mean_drops = 0.0;
  double ci_halfwidth = 0.0;
};

struct Ranking {
  std::string topology;
  double delta_t = 0.0;
  std::vector<RankedPolicy> order;  // ascending mean drops
  // separated[a][b]: the 95% intervals of order[a] and order[b] are disjoint.
  std::vector<std::vector<bool>> separated;
};

// Cells must share topology and delta_t.
Ranking compare_ranking(std::span<const CellResult> cells);
// Groups by (topology, delta_t) in first-seen order.
std::vector<Ranking> compare_rankings(std::span<const CellResult> cells);

// Orders agree on every pair that is separated in both rankings.
bool rankings_consistent(const Ranking& a, const Ranking& b);

struct BetheFinding {
  double delta_t = 0.0;
  bool own_beats_rnd = false;      // OWN below RND, CIs disjoint
  bool jsq_beats_own = false;      // JSQ below OWN, CIs disjoint
  bool mfr_worse_than_own = false; // only when an MF-R policy is present
};

struct BetheReport {
  std::vector<CellResult> cells;
  std::vector<BetheFinding> findings;
};

BetheReport bethe_ablation(const ExperimentConfig& config, int workers);

// Result files.
void write_results_csv(std::ostream& out, std::span<const CellResult> cells, bool with_timing = true);
std::vector<CellResult> read_results_csv(std::istream& in);
nlohmann::json results_json(std::span<const CellResult> cells, const nlohmann::json& meta, bool with_timing = true);
void write_trace_jsonl(std::ostream& out, const CellResult& cell);

void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve);

nlohmann::json make_checkpoint(const PolicyNetwork& policy, const nlohmann::json& trainer_config,
                               const nlohmann::json& env_fingerprint, int iteration);

}  // namespace sparselb
