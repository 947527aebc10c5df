#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sparselb/common.hpp"

namespace sparselb {

enum class Family { Cyc1d, Ccc, Torus, ConfigModel, Bethe, Custom };

std::string to_string(Family family);

/// Immutable undirected simple graph in compressed adjacency form.
///
/// Neighbour lists are sorted; construction rejects asymmetric input,
/// self-loops and duplicate entries.
class Topology {
 public:
  Topology(Family family, const std::vector<std::vector<NodeId>>& adjacency);

  std::size_t size() const { return offsets_.size() - 1; }
  Family family() const { return family_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  // Start of node i's row in any per-edge array laid out like the adjacency.
  std::size_t offset(NodeId i) const { return offsets_[i]; }

  std::size_t num_edges() const { return targets_.size() / 2; }
  std::size_t max_degree() const;
  std::size_t min_degree() const;
  bool is_regular() const { return min_degree() == max_degree(); }
  bool is_connected() const;
  bool has_edge(NodeId i, NodeId j) const;

  // degree -> number of nodes with that degree
  std::map<std::size_t, std::size_t> degree_histogram() const;

 private:
  Family family_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
};

Topology build_cyc1d(int n);
Topology build_ccc(int cycle_order);
Topology build_torus(int side);

/// Erased configuration model. Degrees are drawn uniformly from
/// `degree_set`; stub matchings with collisions are re-shuffled up to a
/// fixed number of times before the remaining self-loops and multi-edges
/// are erased. Disconnected results trigger a fresh attempt.
Topology build_config_model(int n, const std::vector<int>& degree_set,
                            std::uint64_t seed, int max_attempts = 100);

Topology build_bethe(int depth, int branching);

// Closed-form node count of a Bethe lattice (root + `depth` levels).
std::size_t bethe_size(int depth, int branching);

/// Edge-list text format: header "n_nodes=<N>", then one "i j" pair per
/// line with i < j, 0-indexed.
void write_edge_list(const Topology& topology, std::ostream& out);
Topology read_edge_list(std::istream& in);

}  // namespace sparselb
