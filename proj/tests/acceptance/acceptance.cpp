// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   acceptance [--only 1,5,11] [--cli path/to/sparselb] [--work dir] [--workers n]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "sparselb/harness.hpp"
#include "sparselb/kernel.hpp"
#include "sparselb/trainer.hpp"

namespace fs = std::filesystem;
using namespace sparselb;

namespace {

struct Options {
  std::set<int> only;
  std::string cli;
  fs::path work = fs::temp_directory_path() / "sparselb_acceptance";
  int workers = 1;
  std::uint64_t seed = 0;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

std::string show(const CellResult& c) { return fmt(c.mean_drops) + "+/-" + fmt(c.ci_halfwidth, 3); }

// Evaluated cells keyed by (topology, policy, delta_t); each cell's seed only
// depends on the master seed and its key, so sharing them between criteria
// changes nothing.
class Cells {
 public:
  explicit Cells(const Options& o) : opt_(o) {}

  const CellResult& get(const std::string& topology, const std::string& policy, double dt, int episodes = 100) {
    const auto key = std::make_tuple(topology, policy, dt, episodes);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const TopologySpec tspec = TopologySpec::parse(topology);
    auto topo_it = topologies_.find(topology);
    if (topo_it == topologies_.end()) topo_it = topologies_.emplace(topology, tspec.build()).first;
    const Topology& g = topo_it->second;
    const PolicySpec pspec = PolicySpec::parse(policy);
    EvalOptions eo;
    eo.episodes = episodes;
    eo.workers = opt_.workers;
    CellResult c = evaluate(g, *pspec.build(), dt, SystemConfig{}.instantiate(g.size()),
                            cell_seed(opt_.seed, tspec.key(), pspec.key(), dt), eo);
    c.topology = topology;
    c.policy = pspec.key();
    return cache_.emplace(key, std::move(c)).first->second;
  }

  CellResult with(const std::string& topology, const Policy& policy, const std::string& label, double dt,
                  int episodes = 100) {
    const TopologySpec tspec = TopologySpec::parse(topology);
    const Topology g = tspec.build();
    EvalOptions eo;
    eo.episodes = episodes;
    eo.workers = opt_.workers;
    CellResult c = evaluate(g, policy, dt, SystemConfig{}.instantiate(g.size()),
                            cell_seed(opt_.seed, tspec.key(), label, dt), eo);
    c.topology = topology;
    c.policy = label;
    return c;
  }

 private:
  const Options& opt_;
  std::map<std::tuple<std::string, std::string, double, int>, CellResult> cache_;
  std::map<std::string, Topology> topologies_;
};

bool below_separated(const CellResult& a, const CellResult& b) {
  return a.mean_drops < b.mean_drops && ci_disjoint(a, b);
}

Outcome kernel_closed_form() {
  const EpochKernel k(1.0, 1.0, 1, 1.0);
  const double closed = 0.25 + 0.25 * std::exp(-2.0);  // int_0^1 (1 - e^{-2s}) / 2 ds
  const double got = k.expected_drops(0);
  double worst = 0.0;
  for (double t : {0.25, 1.0, 3.0}) {
    for (auto [l, a] : {std::pair{1.0, 1.0}, std::pair{0.9, 1.0}, std::pair{0.4, 2.5}}) {
      const EpochKernel kk(l, a, 1, t);
      const double s = l + a, e = std::exp(-s * t);
      const double p01 = l / s * (1 - e), p10 = a / s * (1 - e);
      const Vector from0 = kk.epoch_law(0), from1 = kk.epoch_law(1);
      worst = std::max({worst, std::abs(from0(0) - (1 - p01)), std::abs(from0(1) - p01),
                        std::abs(from1(0) - p10), std::abs(from1(1) - (1 - p10))});
    }
  }
  const bool pass = std::abs(got - 0.283834) <= 1e-6 && std::abs(got - closed) <= 1e-12 && worst <= 1e-9;
  return {pass, "expected_drops=" + fmt(got, 10) + " closed=" + fmt(closed, 10) + " max law error=" + fmt(worst, 3)};
}

Outcome kernel_vs_events() {
  const Topology tri = build_cyc1d(3);
  SystemParams params;
  const std::vector<double> offload{0.25, 0.6, 1.0};
  const std::vector<int> start{1, 4, 5};
  const double lambda = 0.9, dt = 1.5;
  const auto rates = effective_rates(tri, offload, lambda);
  const int samples = 100000;
  std::vector<std::vector<double>> hist(3, std::vector<double>(6, 0.0));
  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  Rng rng(combine_seed(12345, 2));
  for (int s = 0; s < samples; ++s) {
    const EpochOutcome out = run_epoch(tri, offload, start, lambda, dt, params, rng);
    for (int i = 0; i < 3; ++i) {
      hist[i][out.next_queues[i]] += 1.0 / samples;
      sum[i] += out.drops[i];
      sq[i] += double(out.drops[i]) * out.drops[i];
    }
  }
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const EpochKernel k(rates[i], 1.0, 5, dt);
    const Vector law = k.epoch_law(start[i]);
    double tv = 0.0;
    for (int z = 0; z <= 5; ++z) tv += 0.5 * std::abs(law(z) - hist[i][z]);
    const double mean = sum[i] / samples;
    const double se = std::sqrt((sq[i] / samples - mean * mean) / samples);
    const double z = std::abs(mean - k.expected_drops(start[i])) / se;
    pass = pass && tv < 0.01 && z < 3.0;
    detail += "q" + std::to_string(i) + ": TV=" + fmt(tv, 3) + " drops z=" + fmt(z, 3) + "  ";
  }
  return {pass, detail};
}

Outcome rate_conservation() {
  const std::vector<Topology> graphs{build_cyc1d(101), build_ccc(5), build_torus(11), build_config_model(101, {2, 3}, 1),
                                     build_bethe(5, 3)};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (const auto& g : graphs) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> a(g.size());
      for (auto& x : a) x = u(rng);
      const double lambda = 0.3 + u(rng);
      const auto r = effective_rates(g, a, lambda);
      const double total = std::accumulate(r.begin(), r.end(), 0.0);
      const double target = lambda * static_cast<double>(g.size());
      worst = std::max(worst, std::abs(total - target) / target);
    }
  }
  return {worst < 1e-12, "max relative error " + fmt(worst, 3) + " over 5 families x 1000 action vectors"};
}

Outcome regular_equivalence(Cells& cells) {
  bool pass = true;
  std::string detail;
  for (const char* t : {"cyc1d:101", "ccc:5", "torus:11"}) {
    const Topology g = TopologySpec::parse(t).build();
    std::vector<double> rnd(g.size());
    for (NodeId i = 0; i < g.size(); ++i) rnd[i] = double(g.degree(i)) / double(g.degree(i) + 1);
    const bool same = effective_rates(g, std::vector<double>(g.size(), 0.0), 0.9) == effective_rates(g, rnd, 0.9);
    pass = pass && same;
    detail += std::string(t) + (same ? " rates equal;" : " rates DIFFER;");
    for (double dt : {1.0, 5.0, 10.0}) {
      const CellResult& own = cells.get(t, "own", dt);
      const CellResult& r = cells.get(t, "rnd", dt);
      const bool overlap = ci_overlap(own, r);
      pass = pass && overlap;
      if (!overlap) detail += " dt=" + fmt(dt) + " own " + show(own) + " rnd " + show(r) + " disjoint;";
    }
  }
  return {pass, detail};
}

Outcome jsq_delay(Cells& cells) {
  const std::string t = "cyc1d:901";
  const CellResult& jsq1 = cells.get(t, "jsq", 1.0);
  const CellResult& rnd1 = cells.get(t, "rnd", 1.0);
  const CellResult& own1 = cells.get(t, "own", 1.0);
  const CellResult& jsq7 = cells.get(t, "jsq", 7.0);
  const bool pass = below_separated(jsq1, rnd1) && below_separated(jsq1, own1) && jsq7.mean_drops > jsq1.mean_drops;
  return {pass, "dt=1: jsq " + show(jsq1) + " rnd " + show(rnd1) + " own " + show(own1) + "; jsq dt=7 " + show(jsq7)};
}

Outcome large_delay(Cells& cells) {
  bool pass = true;
  std::string detail;
  for (const char* t : {"cyc1d:901", "torus:70"}) {
    const CellResult& rnd = cells.get(t, "rnd", 10.0);
    const CellResult& jsq = cells.get(t, "jsq", 10.0);
    const bool ok = rnd.mean_drops <= jsq.mean_drops && ci_disjoint(rnd, jsq);
    pass = pass && ok;
    detail += std::string(t) + ": rnd " + show(rnd) + " jsq " + show(jsq) + "; ";
  }
  return {pass, detail};
}

Outcome bethe_violation(Cells& cells) {
  const std::string t = "bethe:11:3";
  const CellResult& own = cells.get(t, "own", 10.0);
  const CellResult& rnd = cells.get(t, "rnd", 10.0);
  return {below_separated(own, rnd), "N=6142, dt=10: own " + show(own) + " rnd " + show(rnd)};
}

Outcome concentration(Cells& cells) {
  std::vector<double> sd;
  std::string detail;
  for (const char* t : {"cyc1d:9", "cyc1d:91", "cyc1d:901"}) {
    const CellResult& c = cells.get(t, "rnd", 1.0);
    sd.push_back(mean_ci95(c.episode_totals).stddev);
    detail += std::string(t) + " sd=" + fmt(sd.back()) + " mean " + show(c) + "; ";
  }
  const CellResult& n91 = cells.get("cyc1d:91", "rnd", 1.0);
  const CellResult& n901 = cells.get("cyc1d:901", "rnd", 1.0);
  const bool within = std::abs(n901.mean_drops - n91.mean_drops) <= n91.ci_halfwidth;
  return {sd[0] > sd[1] && sd[1] > sd[2] && within, detail};
}

Outcome ranking_stability(Cells& cells) {
  bool pass = true;
  std::string detail;
  for (double dt : {1.0, 5.0, 10.0}) {
    std::vector<Ranking> rankings;
    for (const char* t : {"cyc1d:901", "cyc1d:5001"}) {
      std::vector<CellResult> group;
      for (const char* p : {"jsq", "rnd", "own"}) group.push_back(cells.get(t, p, dt));
      rankings.push_back(compare_ranking(group));
    }
    const bool ok = rankings_consistent(rankings[0], rankings[1]);
    pass = pass && ok;
    detail += "dt=" + fmt(dt) + ":";
    for (const auto& r : rankings) {
      detail += " [";
      for (std::size_t k = 0; k < r.order.size(); ++k) {
        detail += (k ? (r.separated[k - 1][k] ? "<" : "~") : "") + r.order[k].policy;
      }
      detail += "]";
    }
    detail += ok ? "; " : " INCONSISTENT; ";
  }
  return {pass, detail};
}

Outcome gradient_check() {
  double worst = 0.0;
  Rng rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), 1e-12);
  };
  const double h = 1e-5;
  for (int trial = 0; trial < 6; ++trial) {
    const std::vector<int> hidden = trial % 3 == 0 ? std::vector<int>{4} : std::vector<int>{4, 4};
    PolicyNetwork pol = PolicyNetwork::create(3 + trial % 3, ObservationMode::Global, trial % 2 == 1, hidden, rng);
    pol.net.init(rng, 1.0);
    pol.log_std.setConstant(std::log(0.25));
    PolicyNetwork old = pol;
    Eigen::VectorXd q = old.net.params();
    for (Eigen::Index k = 0; k < q.size(); ++k) q[k] += 0.05 * n(rng);
    old.net.set_params(q);
    std::vector<Sample> samples(24);
    for (std::size_t c = 0; c < samples.size(); ++c) {
      Observation obs{ObservationMode::Global, std::vector<double>(pol.buffer + 1)};
      double s = 0.0;
      for (auto& x : obs.vector) s += (x = std::abs(n(rng)) + 0.01);
      for (auto& x : obs.vector) x /= s;
      Sample& smp = samples[c];
      smp.input = pol.input(obs, c % 2 ? Regime::High : Regime::Low);
      smp.old_mean = old.mean(smp.input);
      smp.old_std = old.stddev().array() * 1.1;
      smp.raw_action = smp.old_mean;
      for (Eigen::Index k = 0; k < smp.raw_action.size(); ++k) smp.raw_action[k] += smp.old_std[k] * n(rng);
      smp.old_logp = gaussian_logp(smp.raw_action, smp.old_mean, smp.old_std);
      smp.advantage = n(rng);
      smp.value_target = n(rng);
    }
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    const double clip = trial < 3 ? 1e3 : 0.3;
    const PolicyLoss loss = ppo_policy_loss(pol, samples, idx, clip, 0.2);
    Eigen::VectorXd fd(pol.net.num_params());
    for (Eigen::Index k = 0; k < fd.size(); ++k) {
      PolicyNetwork up = pol, down = pol;
      Eigen::VectorXd p = pol.net.params();
      p[k] += h;
      up.net.set_params(p);
      p[k] -= 2 * h;
      down.net.set_params(p);
      fd[k] = (ppo_policy_loss(up, samples, idx, clip, 0.2).value - ppo_policy_loss(down, samples, idx, clip, 0.2).value) /
              (2 * h);
    }
    worst = std::max(worst, rel(loss.grad_net, fd));
    Eigen::VectorXd fd_std(pol.log_std.size());
    for (Eigen::Index k = 0; k < fd_std.size(); ++k) {
      PolicyNetwork up = pol, down = pol;
      up.log_std[k] += h;
      down.log_std[k] -= h;
      fd_std[k] = (ppo_policy_loss(up, samples, idx, clip, 0.2).value -
                   ppo_policy_loss(down, samples, idx, clip, 0.2).value) / (2 * h);
    }
    worst = std::max(worst, rel(loss.grad_log_std, fd_std));

    std::vector<int> sizes{pol.input_dim()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    Mlp critic(sizes);
    critic.init(rng, 1.0);
    const ValueLoss vl = critic_loss(critic, samples, idx);
    Eigen::VectorXd fd_v(critic.num_params());
    for (Eigen::Index k = 0; k < fd_v.size(); ++k) {
      Mlp up = critic, down = critic;
      Eigen::VectorXd p = critic.params();
      p[k] += h;
      up.set_params(p);
      p[k] -= 2 * h;
      down.set_params(p);
      fd_v[k] = (critic_loss(up, samples, idx).value - critic_loss(down, samples, idx).value) / (2 * h);
    }
    worst = std::max(worst, rel(vl.grad, fd_v));
  }
  return {worst < 1e-4, "max relative error " + fmt(worst, 3) + " (policy, log-std and critic gradients)"};
}

Outcome trained_policy(Cells& cells, const Options& opt) {
  const std::string t = "cyc1d:101";
  const double dt = 5.0;
  const Topology g = TopologySpec::parse(t).build();
  EnvConfig env;
  env.epoch_length = dt;
  TrainerConfig cfg;
  cfg.workers = opt.workers;
  const auto start = std::chrono::steady_clock::now();
  const TrainResult result = train(g, env, cfg, opt.seed);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  fs::create_directories(opt.work);
  write_json_file((opt.work / "trained_policy.json").string(), result.policy.to_json());

  const CellResult mfr = cells.with(t, MfrPolicy(result.policy), "mfr", dt);
  const CellResult& jsq = cells.get(t, "jsq", dt);
  const CellResult& rnd = cells.get(t, "rnd", dt);
  const CellResult& own = cells.get(t, "own", dt);
  const CellResult& thr = cells.get(t, "zeta:0,0,0,0,0,1", dt);
  const bool stretch = mfr.mean_drops <= jsq.mean_drops && mfr.mean_drops <= rnd.mean_drops &&
                       (ci_disjoint(mfr, jsq) || ci_disjoint(mfr, rnd));
  const bool floor = below_separated(thr, own);
  return {stretch && floor, "PPO " + fmt(minutes, 3) + " min, best iteration " + std::to_string(result.best_iteration) +
                                "; mfr " + show(mfr) + " jsq " + show(jsq) + " rnd " + show(rnd) + "; threshold " +
                                show(thr) + " own " + show(own)};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream x(a, std::ios::binary), y(b, std::ios::binary);
  if (!x || !y) return false;
  const std::string sa((std::istreambuf_iterator<char>(x)), {}), sb((std::istreambuf_iterator<char>(y)), {});
  return sa == sb;
}

Outcome determinism(const Options& opt) {
  if (opt.cli.empty()) return {false, "no --cli given"};
  const fs::path dir = opt.work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "train.json");
    cfg << R"({"topology": "cyc1d:31", "env": {"delta_t": 5, "horizon": 20},
              "trainer": {"batch_size": 200, "minibatch_size": 64, "epochs": 3, "hidden": [16, 16], "eval_episodes": 4},
              "evaluation": {"episodes": 10, "baselines": ["jsq", "rnd"]}})";
  }
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + opt.cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = true;
  for (const char* run_dir : {"eval_a", "eval_b"}) {
    ok = ok && run("evaluate --topology torus:11 --policy jsq --policy rnd --policy sed --delta-t 3 --episodes 20 "
                   "--trace --seed 7 --workers 2 --no-timing --out \"" + (dir / run_dir).string() + "\"");
  }
  for (const char* run_dir : {"train_a", "train_b"}) {
    ok = ok && run("train --config \"" + (dir / "train.json").string() + "\" --seed 7 --workers 2 --no-timing --out \"" +
                   (dir / run_dir).string() + "\"");
  }
  if (!ok) return {false, "CLI invocation failed"};
  int compared = 0;
  bool same = true;
  std::string detail;
  for (const char* f : {"results.csv", "results.json", "traces.jsonl"}) {
    const bool s = same_bytes(dir / "eval_a" / f, dir / "eval_b" / f);
    same = same && s;
    ++compared;
    if (!s) detail += std::string("evaluate/") + f + " differs; ";
  }
  for (const char* f : {"checkpoint.json", "policy.json", "curve.csv", "results.csv", "results.json"}) {
    const bool s = same_bytes(dir / "train_a" / f, dir / "train_b" / f);
    same = same && s;
    ++compared;
    if (!s) detail += std::string("train/") + f + " differs; ";
  }
  return {same, std::to_string(compared) + " files compared; " + (detail.empty() ? "all identical" : detail)};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    auto next = [&]() -> std::string {
      if (k + 1 >= argc) throw std::invalid_argument("missing value for " + a);
      return argv[++k];
    };
    if (a == "--only") {
      std::stringstream s(next());
      for (std::string item; std::getline(s, item, ',');) opt.only.insert(std::stoi(item));
    } else if (a == "--cli") {
      opt.cli = next();
    } else if (a == "--work") {
      opt.work = next();
    } else if (a == "--workers") {
      opt.workers = std::stoi(next());
    } else {
      std::cerr << "unknown argument " << a << "\n";
      return 2;
    }
  }

  Cells cells(opt);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel closed form", kernel_closed_form},
      {"kernel matches event simulation", kernel_vs_events},
      {"rate conservation", rate_conservation},
      {"OWN and RND agree on regular graphs", [&] { return regular_equivalence(cells); }},
      {"JSQ best at dt=1, worse at dt=7", [&] { return jsq_delay(cells); }},
      {"RND beats JSQ at dt=10", [&] { return large_delay(cells); }},
      {"OWN beats RND on the Bethe lattice", [&] { return bethe_violation(cells); }},
      {"mean-field concentration", [&] { return concentration(cells); }},
      {"ranking stability N=901 vs N=5001", [&] { return ranking_stability(cells); }},
      {"backpropagation vs finite differences", gradient_check},
      {"trained MF-R beats JSQ and RND at dt=5", [&] { return trained_policy(cells, opt); }},
      {"bit-identical repeated runs", [&] { return determinism(opt); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!opt.only.empty() && !opt.only.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << criteria[k].first << "  (" << fmt(secs, 3)
              << " s)\n      " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
