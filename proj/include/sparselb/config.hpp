#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparselb/mfcenv.hpp"
#include "sparselb/policies.hpp"
#include "sparselb/topology.hpp"
#include "sparselb/trainer.hpp"

namespace sparselb {

/// Declarative description of a topology. Compact text form:
///   cyc1d:<n>  ccc:<order>  torus:<side>  bethe:<depth>[:<branching>]
///   cm:<n>[:<d1,d2,...>[:<seed>]]  file:<edge-list path>
struct TopologySpec {
  Family family = Family::Cyc1d;
  int size = 101;     // n, cycle order, side or depth
  int branching = 3;  // Bethe only
  std::vector<int> degrees{2, 3};
  std::uint64_t seed = 1;  // configuration model only
  std::string path;        // Custom only

  Topology build() const;
  // Stable identifier used in result tables and seed derivation.
  std::string key() const;

  static TopologySpec parse(const std::string& text);
  static TopologySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Server and traffic parameters before they are bound to a topology size.
struct SystemConfig {
  int buffer = 5;
  std::vector<double> service_rates{1.0};  // scalar or per-queue
  // Random per-queue assignment from these rates, when non-empty.
  std::vector<double> service_choices;
  std::uint64_t service_seed = 0;
  RegimeParams regime;
  std::vector<double> initial_distribution;

  SystemParams instantiate(std::size_t n_nodes) const;

  static SystemConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Policy reference. Compact text form: jsq | rnd | own | sed |
/// zeta:<p0,p1,...> | mfr:<checkpoint path>[:<observation mode>]
struct PolicySpec {
  std::string kind = "rnd";
  std::vector<double> zeta;
  std::string path;
  std::optional<ObservationMode> mode;
  // Replaces the derived key in result tables and seed derivation.
  std::string label;

  std::unique_ptr<Policy> build() const;
  std::string key() const;

  static PolicySpec parse(const std::string& text);
  static PolicySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Loads either a bare policy document or a training checkpoint.
PolicyNetwork load_policy_network(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

EnvConfig env_config_from_json(const nlohmann::json& j, std::size_t n_nodes);
TrainerConfig trainer_config_from_json(const nlohmann::json& j);
CemConfig cem_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainerConfig& c);
nlohmann::json to_json(const CemConfig& c);

}  // namespace sparselb
