#include "sparselb/topology.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace sparselb {

std::string to_string(Family family) {
  switch (family) {
    case Family::Cyc1d: return "cyc1d";
    case Family::Ccc: return "ccc";
    case Family::Torus: return "torus";
    case Family::ConfigModel: return "config_model";
    case Family::Bethe: return "bethe";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

Topology::Topology(Family family, const std::vector<std::vector<NodeId>>& adjacency)
    : family_(family) {
  const std::size_t n = adjacency.size();
  if (n == 0) throw std::invalid_argument("topology must have at least one node");
  offsets_.reserve(n + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<NodeId> row = adjacency[i];
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] >= n) {
        throw std::invalid_argument("neighbour index out of range at node " + std::to_string(i));
      }
      if (row[k] == i) throw std::invalid_argument("self-loop at node " + std::to_string(i));
      if (k > 0 && row[k] == row[k - 1]) {
        throw std::invalid_argument("duplicate edge at node " + std::to_string(i));
      }
    }
    targets_.insert(targets_.end(), row.begin(), row.end());
    offsets_.push_back(targets_.size());
  }
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : neighbors(i)) {
      if (!has_edge(j, i)) {
        throw std::invalid_argument("asymmetric edge " + std::to_string(i) + " -> " +
                                    std::to_string(j));
      }
    }
  }
}

std::size_t Topology::max_degree() const {
  std::size_t d = 0;
  for (NodeId i = 0; i < size(); ++i) d = std::max(d, degree(i));
  return d;
}

std::size_t Topology::min_degree() const {
  std::size_t d = degree(0);
  for (NodeId i = 0; i < size(); ++i) d = std::min(d, degree(i));
  return d;
}

bool Topology::has_edge(NodeId i, NodeId j) const {
  auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

bool Topology::is_connected() const {
  std::vector<char> seen(size(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (NodeId w : neighbors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        stack.push_back(w);
      }
    }
  }
  return visited == size();
}

std::map<std::size_t, std::size_t> Topology::degree_histogram() const {
  std::map<std::size_t, std::size_t> hist;
  for (NodeId i = 0; i < size(); ++i) ++hist[degree(i)];
  return hist;
}

Topology build_cyc1d(int n) {
  if (n < 3) throw std::invalid_argument("cycle needs n >= 3, got " + std::to_string(n));
  std::vector<std::vector<NodeId>> adj(n);
  for (int i = 0; i < n; ++i) {
    adj[i] = {static_cast<NodeId>((i + n - 1) % n), static_cast<NodeId>((i + 1) % n)};
  }
  return Topology(Family::Cyc1d, adj);
}

Topology build_ccc(int cycle_order) {
  if (cycle_order < 3) {
    throw std::invalid_argument("cube-connected cycles need order >= 3, got " +
                                std::to_string(cycle_order));
  }
  if (cycle_order > 20) throw std::invalid_argument("cube-connected cycle order too large");
  const std::size_t o = static_cast<std::size_t>(cycle_order);
  const std::size_t cube = std::size_t{1} << o;
  // node (p, v) -> v * o + p
  auto id = [o](std::size_t p, std::size_t v) { return static_cast<NodeId>(v * o + p); };
  std::vector<std::vector<NodeId>> adj(o * cube);
  for (std::size_t v = 0; v < cube; ++v) {
    for (std::size_t p = 0; p < o; ++p) {
      auto& row = adj[id(p, v)];
      row.push_back(id((p + 1) % o, v));
      row.push_back(id((p + o - 1) % o, v));
      row.push_back(id(p, v ^ (std::size_t{1} << p)));
    }
  }
  return Topology(Family::Ccc, adj);
}

Topology build_torus(int side) {
  if (side < 3) throw std::invalid_argument("torus needs side >= 3, got " + std::to_string(side));
  const int s = side;
  auto id = [s](int r, int c) { return static_cast<NodeId>(((r + s) % s) * s + ((c + s) % s)); };
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(s) * s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      adj[id(r, c)] = {id(r - 1, c), id(r + 1, c), id(r, c - 1), id(r, c + 1)};
    }
  }
  return Topology(Family::Torus, adj);
}

namespace {

constexpr int kSimpleMatchingTries = 200;

// Returns true when the stub matching produced no self-loop or multi-edge.
bool match_stubs(std::vector<NodeId>& stubs, Rng& rng,
                 std::vector<std::set<NodeId>>& adj_sets) {
  std::shuffle(stubs.begin(), stubs.end(), rng);
  for (auto& s : adj_sets) s.clear();
  bool simple = true;
  for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
    NodeId a = stubs[k];
    NodeId b = stubs[k + 1];
    if (a == b || !adj_sets[a].insert(b).second) {
      simple = false;
      continue;
    }
    adj_sets[b].insert(a);
  }
  return simple;
}

}  // namespace

Topology build_config_model(int n, const std::vector<int>& degree_set, std::uint64_t seed,
                            int max_attempts) {
  if (n < 4) throw std::invalid_argument("configuration model needs n >= 4");
  if (degree_set.empty()) throw std::invalid_argument("degree set must be non-empty");
  for (int d : degree_set) {
    if (d < 2) throw std::invalid_argument("degree set entries must be >= 2");
    if (d >= n) throw std::invalid_argument("degree set entry exceeds n - 1");
  }
  const bool mixed_parity =
      std::any_of(degree_set.begin(), degree_set.end(), [&](int d) { return (d - degree_set[0]) % 2 != 0; });

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_degree(0, degree_set.size() - 1);
  std::uniform_int_distribution<int> pick_node(0, n - 1);
  std::vector<std::set<NodeId>> adj_sets(n);

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<int> degrees(n);
    for (auto& d : degrees) d = degree_set[pick_degree(rng)];
    long stub_sum = std::accumulate(degrees.begin(), degrees.end(), 0L);
    if (stub_sum % 2 != 0) {
      if (!mixed_parity) {
        throw std::invalid_argument("degree set admits no even stub sum for n = " + std::to_string(n));
      }
      // redraw one node's degree until the parity is fixed
      const int v = pick_node(rng);
      int redrawn = degrees[v];
      while ((redrawn - degrees[v]) % 2 == 0) redrawn = degree_set[pick_degree(rng)];
      degrees[v] = redrawn;
    }
    std::vector<NodeId> stubs;
    for (int v = 0; v < n; ++v) stubs.insert(stubs.end(), degrees[v], static_cast<NodeId>(v));

    for (int t = 0; t < kSimpleMatchingTries; ++t) {
      if (match_stubs(stubs, rng, adj_sets)) break;
    }
    std::vector<std::vector<NodeId>> adj(n);
    for (int v = 0; v < n; ++v) adj[v].assign(adj_sets[v].begin(), adj_sets[v].end());
    Topology topology(Family::ConfigModel, adj);
    if (topology.is_connected()) return topology;
  }
  throw std::runtime_error("configuration model: no connected simple graph after " +
                           std::to_string(max_attempts) + " attempts");
}

std::size_t bethe_size(int depth, int branching) {
  std::size_t total = 1;
  std::size_t level = static_cast<std::size_t>(branching);
  for (int o = 1; o <= depth; ++o) {
    total += level;
    level *= static_cast<std::size_t>(branching - 1);
  }
  return total;
}

Topology build_bethe(int depth, int branching) {
  if (depth < 1) throw std::invalid_argument("Bethe lattice needs depth >= 1");
  if (branching < 3) throw std::invalid_argument("Bethe lattice needs branching >= 3");
  const std::size_t n = bethe_size(depth, branching);
  if (n > (std::size_t{1} << 26)) throw std::invalid_argument("Bethe lattice too large");
  std::vector<std::vector<NodeId>> adj(n);
  // breadth-first numbering: level boundaries [begin, end)
  std::size_t begin = 0, end = 1, next = 1;
  for (int level = 0; level < depth; ++level) {
    for (std::size_t v = begin; v < end; ++v) {
      const int children = level == 0 ? branching : branching - 1;
      for (int c = 0; c < children; ++c, ++next) {
        adj[v].push_back(static_cast<NodeId>(next));
        adj[next].push_back(static_cast<NodeId>(v));
      }
    }
    begin = end;
    end = next;
  }
  return Topology(Family::Bethe, adj);
}

void write_edge_list(const Topology& topology, std::ostream& out) {
  out << "n_nodes=" << topology.size() << '\n';
  for (NodeId i = 0; i < topology.size(); ++i) {
    for (NodeId j : topology.neighbors(i)) {
      if (i < j) out << i << ' ' << j << '\n';
    }
  }
}

Topology read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("n_nodes=", 0) != 0) {
    throw std::invalid_argument("edge list must start with 'n_nodes=<N>'");
  }
  const long n = std::stol(line.substr(8));
  if (n <= 0) throw std::invalid_argument("edge list declares no nodes");
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long i = -1, j = -1;
    if (!(fields >> i >> j) || i < 0 || j < 0 || i >= n || j >= n) {
      throw std::invalid_argument("bad edge on line " + std::to_string(lineno));
    }
    adj[i].push_back(static_cast<NodeId>(j));
    adj[j].push_back(static_cast<NodeId>(i));
  }
  return Topology(Family::Custom, adj);
}

}  // namespace sparselb
