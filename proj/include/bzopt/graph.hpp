#pragma once

// Directed communication graphs, reduced graphs, source components and the
// two solvability conditions for trimmed-consensus optimization.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bzopt/agent_set.hpp"

namespace bzopt {

struct Edge {
  Agent from;
  Agent to;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Directed graph over agents 0..n-1 without self-loops. An edge (i, j) means
/// i can send to j.
class DiGraph {
 public:
  explicit DiGraph(std::size_t n);
  DiGraph(std::size_t n, const std::vector<Edge>& edges);

  static DiGraph complete(std::size_t n);
  static DiGraph cycle(std::size_t n);
  /// Agent 0 sends to every other agent; no other edges.
  static DiGraph star_out(std::size_t n);
  /// Bit e of `code` (over the n*(n-1) ordered pairs in row-major order,
  /// skipping the diagonal) selects whether that edge is present.
  static DiGraph from_edge_code(std::size_t n, std::uint64_t code);

  void add_edge(Agent from, Agent to);

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] bool has_edge(Agent from, Agent to) const;
  [[nodiscard]] AgentSet in_neighbors(Agent i) const;
  [[nodiscard]] AgentSet out_neighbors(Agent i) const;
  [[nodiscard]] std::vector<Edge> edges() const;
  [[nodiscard]] std::size_t edge_count() const;

  /// Copy of the graph with agent `v` and its edges removed; remaining agents
  /// are relabelled to keep ids contiguous.
  [[nodiscard]] DiGraph without_vertex(Agent v) const;

 private:
  void check_agent(Agent a) const;

  std::size_t n_;
  std::vector<AgentSet> in_;
};

/// Faulty agents of one execution plus the tolerated bound f.
struct FaultySet {
  AgentSet members;
  std::size_t bound = 0;

  [[nodiscard]] std::size_t size() const { return members.size(); }
  void validate(std::size_t n) const;
};

/// Vertex subset together with (possibly pruned) incoming adjacency, indexed
/// by the original agent ids. Agents outside `vertices` have empty rows.
struct Subgraph {
  AgentSet vertices;
  std::vector<AgentSet> in;

  static Subgraph of(const DiGraph& g);
  [[nodiscard]] std::size_t size() const { return vertices.size(); }
  [[nodiscard]] bool has_edge(Agent from, Agent to) const {
    return vertices.contains(to) && in[to].contains(from);
  }
};

/// G with the faulty agents removed and up to f further incoming edges removed
/// at each remaining agent.
struct ReducedGraph {
  FaultySet faulty;
  /// removed[i]: non-faulty in-neighbours whose edge into i was dropped.
  std::vector<AgentSet> removed;
  Subgraph graph;

  [[nodiscard]] AgentSet vertices() const { return graph.vertices; }
};

AgentSet in_neighbors(const DiGraph& g, Agent i);

/// Number of reduced graphs for faulty set `faulty`:
/// prod over non-faulty i of sum_{m=0}^{min(f, deg_i)} C(deg_i, m).
/// Saturates at UINT64_MAX.
std::uint64_t count_reduced_graphs(const DiGraph& g, const FaultySet& faulty);

/// Visits every reduced graph in a fixed order (mixed-radix over agents in
/// increasing id, each agent's removal subsets by increasing size then mask).
/// The visitor returns false to stop early.
void for_each_reduced_graph(const DiGraph& g, const FaultySet& faulty,
                            const std::function<bool(const ReducedGraph&)>& visit);

std::vector<ReducedGraph> enumerate_reduced_graphs(const DiGraph& g, const FaultySet& faulty);

/// Vertices with a directed path to every other vertex of `h`. Empty when no
/// such vertex exists; otherwise the unique source SCC of the condensation.
AgentSet source_component(const Subgraph& h);
AgentSet source_component(const DiGraph& g);

/// Strongly connected components, each as a vertex set.
std::vector<AgentSet> strongly_connected_components(const Subgraph& h);

/// Every faulty set of size <= f over n agents, in increasing size then mask.
std::vector<AgentSet> faulty_sets_up_to(std::size_t n, std::size_t f);

struct Condition1Witness {
  ReducedGraph reduced;
  AgentSet source;  // source component of the reduced graph (may be empty)
};

struct Condition1Result {
  bool holds = true;
  std::size_t required_size = 0;  // max{f+1, s}
  std::optional<Condition1Witness> witness;
};

enum class Condition1Method {
  /// Enumerate every reduced graph of every faulty set. Exponential in the
  /// number of edges; used for small graphs and as a test oracle.
  kExhaustive,
  /// Search for in-closeable vertex sets per faulty set (a reduced graph has a
  /// source of size < m iff some set of size < m, or two disjoint sets, can be
  /// cut off from their outside by dropping <= f in-edges per member).
  kCutSearch,
  /// kExhaustive when the total reduced-graph count is small, else kCutSearch.
  kAuto,
};

Condition1Result check_condition1(const DiGraph& g, std::size_t f, std::size_t s,
                                  Condition1Method method = Condition1Method::kAuto);

struct Partition {
  AgentSet left;
  AgentSet right;
  AgentSet center;
  AgentSet faulty;
};

struct Condition2Result {
  bool holds = true;
  std::optional<Partition> witness;
};

inline constexpr std::size_t kCondition2MaxAgents = 10;

/// Enumerates all L/R/C/F partitions (4^n); refuses graphs larger than
/// kCondition2MaxAgents.
Condition2Result check_condition2(const DiGraph& g, std::size_t f);

std::string to_string(AgentSet s);

}  // namespace bzopt
