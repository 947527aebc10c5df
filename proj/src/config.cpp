#include "sparselb/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sparselb {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> values;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_integral_v<T>) {
      values.push_back(static_cast<T>(std::stol(item)));
    } else {
      values.push_back(static_cast<T>(std::stod(item)));
    }
  }
  return values;
}

Family parse_family(const std::string& name) {
  if (name == "cyc1d" || name == "cycle") return Family::Cyc1d;
  if (name == "ccc") return Family::Ccc;
  if (name == "torus") return Family::Torus;
  if (name == "cm" || name == "config_model") return Family::ConfigModel;
  if (name == "bethe") return Family::Bethe;
  if (name == "file" || name == "custom" || name == "edge_list") return Family::Custom;
  throw std::invalid_argument("unknown topology family '" + name + "'");
}

}  // namespace

Topology TopologySpec::build() const {
  switch (family) {
    case Family::Cyc1d: return build_cyc1d(size);
    case Family::Ccc: return build_ccc(size);
    case Family::Torus: return build_torus(size);
    case Family::ConfigModel: return build_config_model(size, degrees, seed);
    case Family::Bethe: return build_bethe(size, branching);
    case Family::Custom: {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open edge list '" + path + "'");
      return read_edge_list(in);
    }
  }
  throw std::logic_error("unhandled topology family");
}

std::string TopologySpec::key() const {
  std::ostringstream s;
  switch (family) {
    case Family::Cyc1d: s << "cyc1d:" << size; break;
    case Family::Ccc: s << "ccc:" << size; break;
    case Family::Torus: s << "torus:" << size; break;
    case Family::Bethe: s << "bethe:" << size << ':' << branching; break;
    case Family::ConfigModel: {
      s << "cm:" << size << ':';
      for (std::size_t k = 0; k < degrees.size(); ++k) s << (k ? "," : "") << degrees[k];
      s << ':' << seed;
      break;
    }
    case Family::Custom: s << "file:" << path; break;
  }
  return s.str();
}

TopologySpec TopologySpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("topology spec needs 'family:size', got '" + text + "'");
  TopologySpec spec;
  spec.family = parse_family(text.substr(0, colon));
  const std::string rest = text.substr(colon + 1);
  if (spec.family == Family::Custom) {
    spec.path = rest;
    return spec;
  }
  const auto parts = split(rest, ':');
  if (parts.empty() || parts[0].empty()) throw std::invalid_argument("topology spec missing size: '" + text + "'");
  spec.size = std::stoi(parts[0]);
  if (spec.family == Family::Bethe && parts.size() > 1) spec.branching = std::stoi(parts[1]);
  if (spec.family == Family::ConfigModel) {
    if (parts.size() > 1 && !parts[1].empty()) spec.degrees = parse_list<int>(parts[1]);
    if (parts.size() > 2) spec.seed = std::stoull(parts[2]);
  }
  return spec;
}

TopologySpec TopologySpec::from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse(j.get<std::string>());
  TopologySpec spec;
  spec.family = parse_family(j.at("family").get<std::string>());
  switch (spec.family) {
    case Family::Cyc1d: spec.size = j.at("n").get<int>(); break;
    case Family::Ccc: spec.size = j.at("order").get<int>(); break;
    case Family::Torus: spec.size = j.at("side").get<int>(); break;
    case Family::Bethe:
      spec.size = j.at("depth").get<int>();
      spec.branching = j.value("branching", 3);
      break;
    case Family::ConfigModel:
      spec.size = j.at("n").get<int>();
      spec.degrees = j.value("degrees", std::vector<int>{2, 3});
      spec.seed = j.value("seed", std::uint64_t{1});
      break;
    case Family::Custom: spec.path = j.at("path").get<std::string>(); break;
  }
  return spec;
}

nlohmann::json TopologySpec::to_json() const {
  nlohmann::json j{{"family", to_string(family)}};
  switch (family) {
    case Family::Cyc1d: j["n"] = size; break;
    case Family::Ccc: j["order"] = size; break;
    case Family::Torus: j["side"] = size; break;
    case Family::Bethe: j["depth"] = size; j["branching"] = branching; break;
    case Family::ConfigModel: j["n"] = size; j["degrees"] = degrees; j["seed"] = seed; break;
    case Family::Custom: j["path"] = path; break;
  }
  return j;
}

SystemParams SystemConfig::instantiate(std::size_t n_nodes) const {
  SystemParams p;
  p.buffer = buffer;
  p.regime = regime;
  p.initial_distribution = initial_distribution;
  if (!service_choices.empty()) {
    Rng rng(service_seed);
    std::uniform_int_distribution<std::size_t> pick(0, service_choices.size() - 1);
    p.service_rates.resize(n_nodes);
    for (auto& a : p.service_rates) a = service_choices[pick(rng)];
  } else {
    p.service_rates = service_rates;
  }
  p.validate(n_nodes);
  return p;
}

SystemConfig SystemConfig::from_json(const nlohmann::json& j) {
  SystemConfig c;
  c.buffer = j.value("buffer", c.buffer);
  if (j.contains("service_rate")) {
    const auto& s = j.at("service_rate");
    if (s.is_number()) {
      c.service_rates = {s.get<double>()};
    } else if (s.is_array()) {
      c.service_rates = s.get<std::vector<double>>();
    } else {
      c.service_choices = s.at("choices").get<std::vector<double>>();
      c.service_seed = s.value("seed", std::uint64_t{0});
    }
  }
  c.regime.rate_high = j.value("rate_high", c.regime.rate_high);
  c.regime.rate_low = j.value("rate_low", c.regime.rate_low);
  c.regime.p_high_to_low = j.value("p_high_to_low", c.regime.p_high_to_low);
  c.regime.p_low_to_high = j.value("p_low_to_high", c.regime.p_low_to_high);
  c.initial_distribution = j.value("initial_distribution", std::vector<double>{});
  c.regime.validate();
  return c;
}

nlohmann::json SystemConfig::to_json() const {
  nlohmann::json j{{"buffer", buffer},
                   {"rate_high", regime.rate_high},
                   {"rate_low", regime.rate_low},
                   {"p_high_to_low", regime.p_high_to_low},
                   {"p_low_to_high", regime.p_low_to_high}};
  if (!service_choices.empty()) {
    j["service_rate"] = {{"choices", service_choices}, {"seed", service_seed}};
  } else if (service_rates.size() == 1) {
    j["service_rate"] = service_rates[0];
  } else {
    j["service_rate"] = service_rates;
  }
  if (!initial_distribution.empty()) j["initial_distribution"] = initial_distribution;
  return j;
}

std::unique_ptr<Policy> PolicySpec::build() const {
  if (kind == "jsq") return std::make_unique<JsqPolicy>();
  if (kind == "rnd") return std::make_unique<RndPolicy>();
  if (kind == "own") return std::make_unique<OwnPolicy>();
  if (kind == "sed") return std::make_unique<SedPolicy>();
  if (kind == "zeta") return std::make_unique<ZetaPolicy>(zeta, key());
  if (kind == "mfr") {
    PolicyNetwork net = load_policy_network(path);
    const ObservationMode m = mode.value_or(net.observation_mode);
    return std::make_unique<MfrPolicy>(std::move(net), m, key());
  }
  throw std::invalid_argument("unknown policy kind '" + kind + "'");
}

std::string PolicySpec::key() const {
  if (!label.empty()) return label;
  if (kind == "zeta") {
    std::ostringstream s;
    s << "zeta:";
    for (std::size_t k = 0; k < zeta.size(); ++k) s << (k ? "," : "") << zeta[k];
    return s.str();
  }
  if (kind == "mfr") {
    std::string k = "mfr:" + path;
    if (mode) k += ":" + to_string(*mode);
    return k;
  }
  return kind;
}

PolicySpec PolicySpec::parse(const std::string& text) {
  PolicySpec spec;
  const auto colon = text.find(':');
  spec.kind = text.substr(0, colon);
  if (spec.kind == "zeta") {
    if (colon == std::string::npos) throw std::invalid_argument("zeta policy needs values");
    spec.zeta = parse_list<double>(text.substr(colon + 1));
  } else if (spec.kind == "mfr") {
    if (colon == std::string::npos) throw std::invalid_argument("mfr policy needs a checkpoint path");
    std::string rest = text.substr(colon + 1);
    const auto last = rest.rfind(':');
    if (last != std::string::npos) {
      const std::string tail = rest.substr(last + 1);
      if (tail == "global" || tail == "neighborhood" || tail == "neighbourhood" || tail == "own") {
        spec.mode = parse_observation_mode(tail);
        rest = rest.substr(0, last);
      }
    }
    spec.path = rest;
  } else if (spec.kind != "jsq" && spec.kind != "rnd" && spec.kind != "own" && spec.kind != "sed") {
    throw std::invalid_argument("unknown policy '" + text + "'");
  }
  return spec;
}

PolicySpec PolicySpec::from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse(j.get<std::string>());
  PolicySpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (spec.kind == "zeta") spec.zeta = j.at("zeta").get<std::vector<double>>();
  if (spec.kind == "mfr") {
    spec.path = j.at("path").get<std::string>();
    if (j.contains("observation")) spec.mode = parse_observation_mode(j.at("observation").get<std::string>());
  }
  spec.label = j.value("label", std::string{});
  return spec;
}

nlohmann::json PolicySpec::to_json() const {
  nlohmann::json j{{"kind", kind}};
  if (kind == "zeta") j["zeta"] = zeta;
  if (kind == "mfr") {
    j["path"] = path;
    if (mode) j["observation"] = to_string(*mode);
  }
  if (!label.empty()) j["label"] = label;
  return j;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return nlohmann::json::parse(in);
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

PolicyNetwork load_policy_network(const std::string& path) {
  const nlohmann::json doc = read_json_file(path);
  if (doc.contains("policy")) return PolicyNetwork::from_json(doc.at("policy"));
  return PolicyNetwork::from_json(doc);
}

EnvConfig env_config_from_json(const nlohmann::json& j, std::size_t n_nodes) {
  EnvConfig env;
  env.system = SystemConfig::from_json(j.value("system", nlohmann::json::object())).instantiate(n_nodes);
  env.epoch_length = j.value("delta_t", env.epoch_length);
  env.horizon = j.value("horizon", env.horizon);
  if (j.contains("observation")) env.observation_mode = parse_observation_mode(j.at("observation").get<std::string>());
  env.observe_regime = j.value("observe_regime", env.observe_regime);
  env.expected_drop_reward = j.value("expected_drop_reward", env.expected_drop_reward);
  env.designated_agent = j.value("designated_agent", env.designated_agent);
  return env;
}

TrainerConfig trainer_config_from_json(const nlohmann::json& j) {
  TrainerConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
  c.clip = j.value("clip", c.clip);
  c.kl_coeff = j.value("kl_coeff", c.kl_coeff);
  c.kl_target = j.value("kl_target", c.kl_target);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
  c.sgd_iters = j.value("sgd_iters", c.sgd_iters);
  c.epochs = j.value("epochs", c.epochs);
  c.hidden = j.value("hidden", c.hidden);
  c.standardize_advantages = j.value("standardize_advantages", c.standardize_advantages);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  return c;
}

CemConfig cem_config_from_json(const nlohmann::json& j) {
  CemConfig c;
  c.population = j.value("population", c.population);
  c.elite_frac = j.value("elite_frac", c.elite_frac);
  c.iterations = j.value("iterations", c.iterations);
  c.init_std = j.value("init_std", c.init_std);
  c.min_std = j.value("min_std", c.min_std);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  c.hidden = j.value("hidden", c.hidden);
  return c;
}

nlohmann::json to_json(const TrainerConfig& c) {
  return {{"gamma", c.gamma},
          {"gae_lambda", c.gae_lambda},
          {"clip", c.clip},
          {"kl_coeff", c.kl_coeff},
          {"kl_target", c.kl_target},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"minibatch_size", c.minibatch_size},
          {"sgd_iters", c.sgd_iters},
          {"epochs", c.epochs},
          {"hidden", c.hidden},
          {"standardize_advantages", c.standardize_advantages},
          {"eval_episodes", c.eval_episodes}};
}

nlohmann::json to_json(const CemConfig& c) {
  return {{"population", c.population}, {"elite_frac", c.elite_frac}, {"iterations", c.iterations},
          {"init_std", c.init_std},     {"min_std", c.min_std},       {"eval_episodes", c.eval_episodes},
          {"hidden", c.hidden}};
}

}  // namespace sparselb
