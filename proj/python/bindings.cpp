// Python module _sparselb. JSON documents cross the boundary as strings; the
// sparselb package converts them to and from dicts.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sparselb/config.hpp"
#include "sparselb/harness.hpp"
#include "sparselb/kernel.hpp"
#include "sparselb/mfcenv.hpp"
#include "sparselb/simulator.hpp"
#include "sparselb/trainer.hpp"

namespace py = pybind11;
using namespace sparselb;
using nlohmann::json;

namespace {

json parse_or_empty(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

py::dict cell_dict(const CellResult& c) {
  py::dict d;
  d["topology"] = c.topology;
  d["policy"] = c.policy;
  d["delta_t"] = c.delta_t;
  d["mean_drops"] = c.mean_drops;
  d["ci95"] = c.ci_halfwidth;
  d["episodes"] = c.episodes;
  d["seconds"] = c.seconds;
  d["episode_totals"] = c.episode_totals;
  d["error"] = c.error;
  return d;
}

py::dict transition_dict(const McTransition& t) {
  py::dict d;
  d["observation"] = t.observation.vector;
  d["action"] = t.action;
  d["reward"] = t.reward;
  d["next_observation"] = t.next_observation.vector;
  d["regime"] = t.regime == Regime::High ? "high" : "low";
  d["done"] = t.done;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sparselb, m) {
  m.doc() = "Load balancing on sparse graphs";

  py::class_<Topology>(m, "Topology")
      .def_property_readonly("size", &Topology::size)
      .def_property_readonly("family", [](const Topology& g) { return to_string(g.family()); })
      .def_property_readonly("num_edges", &Topology::num_edges)
      .def("degree", &Topology::degree)
      .def("neighbors", [](const Topology& g, NodeId i) {
        if (i >= g.size()) throw py::index_error("node out of range");
        const auto n = g.neighbors(i);
        return std::vector<NodeId>(n.begin(), n.end());
      })
      .def("is_connected", &Topology::is_connected)
      .def("is_regular", &Topology::is_regular)
      .def("degree_histogram", &Topology::degree_histogram)
      .def("__len__", &Topology::size);

  m.def("topology", [](const std::string& spec) { return TopologySpec::parse(spec).build(); }, py::arg("spec"),
        "Build a topology from a spec such as 'cyc1d:101', 'torus:11' or 'bethe:11:3'.");
  m.def("bethe_size", &bethe_size, py::arg("depth"), py::arg("branching") = 3);

  m.def(
      "effective_rates",
      [](const Topology& g, const std::vector<double>& offload, double base_rate) {
        if (offload.size() != g.size()) throw py::value_error("one offload probability per node");
        return effective_rates(g, offload, base_rate);
      },
      py::arg("topology"), py::arg("offload"), py::arg("base_rate"));

  py::class_<EpochKernel>(m, "EpochKernel")
      .def(py::init<double, double, int, double>(), py::arg("arrival_rate"), py::arg("service_rate"),
           py::arg("buffer"), py::arg("epoch_length"))
      .def_property_readonly("generator", &EpochKernel::generator)
      .def_property_readonly("transition", &EpochKernel::transition)
      .def("epoch_law", &EpochKernel::epoch_law, py::arg("start_state"))
      .def("expected_drops", &EpochKernel::expected_drops, py::arg("start_state"));

  m.def(
      "run_episode",
      [](const Topology& g, const std::string& policy, double delta_t, int horizon, std::uint64_t seed,
         const std::string& system) {
        const auto p = PolicySpec::parse(policy).build();
        const SystemParams params = SystemConfig::from_json(parse_or_empty(system)).instantiate(g.size());
        const EpisodeResult r = run_episode(g, *p, horizon, delta_t, params, seed);
        py::dict d;
        d["total_drops"] = r.total_drops;
        d["epoch_drops"] = r.epoch_drops;
        d["distributions"] = r.distributions;
        std::vector<std::string> regimes;
        for (Regime x : r.regimes) regimes.push_back(x == Regime::High ? "high" : "low");
        d["regimes"] = regimes;
        return d;
      },
      py::arg("topology"), py::arg("policy"), py::arg("delta_t"), py::arg("horizon") = 50, py::arg("seed") = 0,
      py::arg("system") = "");

  m.def(
      "evaluate",
      [](const std::string& topology, const std::string& policy, double delta_t, int episodes, int horizon,
         std::uint64_t seed, int workers, const std::string& system) {
        const TopologySpec ts = TopologySpec::parse(topology);
        const PolicySpec ps = PolicySpec::parse(policy);
        const Topology g = ts.build();
        EvalOptions opt;
        opt.episodes = episodes;
        opt.horizon = horizon;
        opt.workers = workers;
        const SystemParams params = SystemConfig::from_json(parse_or_empty(system)).instantiate(g.size());
        CellResult c;
        {
          py::gil_scoped_release release;
          c = evaluate(g, *ps.build(), delta_t, params, cell_seed(seed, ts.key(), ps.key(), delta_t), opt);
        }
        c.topology = ts.key();
        c.policy = ps.key();
        return cell_dict(c);
      },
      py::arg("topology"), py::arg("policy"), py::arg("delta_t"), py::arg("episodes") = 100, py::arg("horizon") = 50,
      py::arg("seed") = 0, py::arg("workers") = 1, py::arg("system") = "",
      "Evaluate one cell with the same seeding as the sparselb CLI.");

  m.def(
      "sweep",
      [](const std::string& config, int workers) {
        const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(config));
        std::vector<CellResult> cells;
        {
          py::gil_scoped_release release;
          cells = sweep(cfg, workers);
        }
        py::list out;
        for (const auto& c : cells) out.append(cell_dict(c));
        return out;
      },
      py::arg("config"), py::arg("workers") = 1);

  m.def(
      "mean_ci95",
      [](const std::vector<double>& xs) {
        const MeanCi ci = mean_ci95(xs);
        return py::make_tuple(ci.mean, ci.halfwidth, ci.stddev);
      },
      py::arg("values"));

  m.def(
      "discounted_return", [](const std::vector<double>& r, double gamma) { return discounted_return(r, gamma); },
      py::arg("rewards"), py::arg("gamma"));

  // Owns its topology so Python never sees a dangling reference.
  struct PyEnv {
    Topology topology;
    MfcEnv env;
    PyEnv(Topology g, const EnvConfig& cfg) : topology(std::move(g)), env(topology, cfg) {}
  };
  py::class_<PyEnv>(m, "MfcEnv")
      .def(py::init([](const std::string& topology, const std::string& env) {
             Topology g = TopologySpec::parse(topology).build();
             const EnvConfig cfg = env_config_from_json(parse_or_empty(env), g.size());
             return std::make_unique<PyEnv>(std::move(g), cfg);
           }),
           py::arg("topology"), py::arg("env") = "")
      .def("reset", [](PyEnv& e, std::uint64_t seed) { return e.env.reset(seed).vector; }, py::arg("seed"))
      .def("step", [](PyEnv& e, const std::vector<double>& zeta) { return transition_dict(e.env.step(zeta)); },
           py::arg("zeta"))
      .def_property_readonly("done", [](const PyEnv& e) { return e.env.done(); })
      .def_property_readonly("regime", [](const PyEnv& e) { return e.env.regime() == Regime::High ? "high" : "low"; })
      .def_property_readonly("queues", [](const PyEnv& e) { return e.env.state().queues; });

  m.def(
      "train",
      [](const std::string& topology, const std::string& env, const std::string& trainer, std::uint64_t seed,
         const std::string& method) {
        const Topology g = TopologySpec::parse(topology).build();
        const EnvConfig ecfg = env_config_from_json(parse_or_empty(env), g.size());
        TrainResult r;
        {
          py::gil_scoped_release release;
          if (method == "ppo") {
            r = train(g, ecfg, trainer_config_from_json(parse_or_empty(trainer)), seed);
          } else if (method == "cem") {
            r = cem_train(g, ecfg, cem_config_from_json(parse_or_empty(trainer)), seed);
          } else {
            throw std::invalid_argument("method must be ppo or cem");
          }
        }
        py::list curve;
        for (const auto& row : r.curve) {
          py::dict d;
          d["iteration"] = row.iteration;
          d["mean_return"] = row.mean_return;
          d["kl"] = row.kl;
          d["clip_fraction"] = row.clip_fraction;
          d["eval_drops"] = row.eval_drops;
          curve.append(d);
        }
        py::dict out;
        out["policy"] = r.policy.to_json().dump();
        out["curve"] = curve;
        out["best_iteration"] = r.best_iteration;
        out["best_eval_drops"] = r.best_eval_drops;
        return out;
      },
      py::arg("topology"), py::arg("env") = "", py::arg("trainer") = "", py::arg("seed") = 0,
      py::arg("method") = "ppo");
}
