#include "bzopt/graph.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace bzopt {

namespace {

constexpr std::uint64_t kExhaustiveBudget = 200'000;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

// All subsets of `pool` with at most `max_size` members, ordered by size then
// by increasing mask.
std::vector<AgentSet> subsets_up_to(AgentSet pool, std::size_t max_size) {
  const std::vector<Agent> members = pool.to_vector();
  const std::size_t d = members.size();
  std::vector<AgentSet> out;
  const std::size_t top = std::min(max_size, d);
  for (std::size_t m = 0; m <= top; ++m) {
    std::vector<AgentSet> level;
    // Indices into `members` chosen in lexicographic order.
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    while (true) {
      AgentSet s;
      for (std::size_t i : idx) s.insert(members[i]);
      level.push_back(s);
      if (m == 0) break;
      std::size_t pos = m;
      while (pos > 0 && idx[pos - 1] == d - m + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < m; ++i) idx[i] = idx[i - 1] + 1;
    }
    std::sort(level.begin(), level.end(),
              [](AgentSet a, AgentSet b) { return a.mask() < b.mask(); });
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

// Reachability sets (including the start vertex) for every vertex of h.
std::vector<AgentSet> reach_sets(const Subgraph& h) {
  const std::size_t n = h.in.size();
  std::vector<AgentSet> out_adj(n);
  for (Agent v : h.vertices.to_vector()) {
    for (Agent u : (h.in[v] & h.vertices).to_vector()) out_adj[u].insert(v);
  }
  std::vector<AgentSet> reach(n);
  for (Agent v : h.vertices.to_vector()) {
    AgentSet seen{v};
    AgentSet frontier{v};
    while (!frontier.empty()) {
      AgentSet next;
      for (Agent u : frontier.to_vector()) next = next | out_adj[u];
      frontier = next - seen;
      seen = seen | next;
    }
    reach[v] = seen;
  }
  return reach;
}

ReducedGraph make_reduced(const DiGraph& g, const FaultySet& faulty,
                          const std::vector<AgentSet>& removed) {
  ReducedGraph rg;
  rg.faulty = faulty;
  rg.removed = removed;
  rg.graph.vertices = AgentSet::range(g.size()) - faulty.members;
  rg.graph.in.resize(g.size());
  for (Agent i : rg.graph.vertices.to_vector()) {
    rg.graph.in[i] = (g.in_neighbors(i) & rg.graph.vertices) - removed[i];
  }
  return rg;
}

Condition1Result condition1_exhaustive(const DiGraph& g, std::size_t f, std::size_t required) {
  Condition1Result result;
  result.required_size = required;
  for (AgentSet fs : faulty_sets_up_to(g.size(), f)) {
    const FaultySet faulty{fs, f};
    for_each_reduced_graph(g, faulty, [&](const ReducedGraph& rg) {
      AgentSet source = source_component(rg.graph);
      if (source.size() < required) {
        result.holds = false;
        result.witness = Condition1Witness{rg, source};
        return false;
      }
      return true;
    });
    if (!result.holds) break;
  }
  return result;
}

Condition1Result condition1_cut_search(const DiGraph& g, std::size_t f, std::size_t required) {
  Condition1Result result;
  result.required_size = required;
  for (AgentSet fs : faulty_sets_up_to(g.size(), f)) {
    const AgentSet rest = AgentSet::range(g.size()) - fs;
    const std::vector<Agent> verts = rest.to_vector();
    const std::size_t m = verts.size();
    if (m > 24) throw GraphError("cut search supports at most 24 non-faulty agents");
    const std::size_t full = std::size_t{1} << m;

    auto to_set = [&](std::size_t local) {
      AgentSet s;
      for (std::size_t b = 0; b < m; ++b) {
        if ((local >> b) & 1U) s.insert(verts[b]);
      }
      return s;
    };
    // closeable[S]: every member has at most f in-neighbours in rest - S.
    std::vector<char> closeable(full, 0);
    for (std::size_t local = 1; local < full; ++local) {
      const AgentSet s = to_set(local);
      bool ok = true;
      for (Agent i : s.to_vector()) {
        if ((g.in_neighbors(i) & (rest - s)).size() > f) {
          ok = false;
          break;
        }
      }
      closeable[local] = ok ? 1 : 0;
    }

    auto build_witness = [&](const std::vector<AgentSet>& cut_sets) {
      std::vector<AgentSet> removed(g.size());
      for (AgentSet s : cut_sets) {
        for (Agent i : s.to_vector()) removed[i] = g.in_neighbors(i) & (rest - s);
      }
      ReducedGraph rg = make_reduced(g, FaultySet{fs, f}, removed);
      AgentSet source = source_component(rg.graph);
      if (source.size() >= required) {
        throw std::logic_error("cut-search witness does not violate the source-size bound");
      }
      result.holds = false;
      result.witness = Condition1Witness{std::move(rg), source};
    };

    if (m < required) {
      build_witness({});
      return result;
    }
    for (std::size_t local = 1; local < full; ++local) {
      if (closeable[local] && static_cast<std::size_t>(std::popcount(local)) < required) {
        build_witness({to_set(local)});
        return result;
      }
    }
    // rep[T]: smallest-mask nonempty closeable subset of T, or 0.
    std::vector<std::size_t> rep(full, 0);
    for (std::size_t local = 1; local < full; ++local) {
      if (closeable[local]) rep[local] = local;
    }
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t local = 0; local < full; ++local) {
        if ((local >> b) & 1U) {
          const std::size_t sub = rep[local ^ (std::size_t{1} << b)];
          if (sub != 0 && (rep[local] == 0 || sub < rep[local])) rep[local] = sub;
        }
      }
    }
    for (std::size_t local = 1; local < full; ++local) {
      if (!closeable[local]) continue;
      const std::size_t other = rep[(full - 1) & ~local];
      if (other != 0) {
        build_witness({to_set(local), to_set(other)});
        return result;
      }
    }
  }
  return result;
}

}  // namespace

DiGraph::DiGraph(std::size_t n) : n_(n), in_(n) {
  if (n == 0) throw GraphError("graph needs at least one agent");
  if (n > kMaxAgents) throw GraphError("graph supports at most 64 agents");
}

DiGraph::DiGraph(std::size_t n, const std::vector<Edge>& edges) : DiGraph(n) {
  for (const Edge& e : edges) add_edge(e.from, e.to);
}

DiGraph DiGraph::complete(std::size_t n) {
  DiGraph g(n);
  for (Agent i = 0; i < n; ++i) {
    for (Agent j = 0; j < n; ++j) {
      if (i != j) g.add_edge(i, j);
    }
  }
  return g;
}

DiGraph DiGraph::cycle(std::size_t n) {
  DiGraph g(n);
  if (n > 1) {
    for (Agent i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  }
  return g;
}

DiGraph DiGraph::star_out(std::size_t n) {
  DiGraph g(n);
  for (Agent j = 1; j < n; ++j) g.add_edge(0, j);
  return g;
}

DiGraph DiGraph::from_edge_code(std::size_t n, std::uint64_t code) {
  DiGraph g(n);
  std::size_t bit = 0;
  for (Agent i = 0; i < n; ++i) {
    for (Agent j = 0; j < n; ++j) {
      if (i == j) continue;
      if ((code >> bit) & 1U) g.add_edge(i, j);
      ++bit;
    }
  }
  return g;
}

void DiGraph::check_agent(Agent a) const {
  if (a >= n_) {
    throw GraphError("agent id " + std::to_string(a) + " out of range for n = " + std::to_string(n_));
  }
}

void DiGraph::add_edge(Agent from, Agent to) {
  check_agent(from);
  check_agent(to);
  if (from == to) throw GraphError("self-loop at agent " + std::to_string(from));
  in_[to].insert(from);
}

bool DiGraph::has_edge(Agent from, Agent to) const {
  check_agent(from);
  check_agent(to);
  return in_[to].contains(from);
}

AgentSet DiGraph::in_neighbors(Agent i) const {
  check_agent(i);
  return in_[i];
}

AgentSet DiGraph::out_neighbors(Agent i) const {
  check_agent(i);
  AgentSet out;
  for (Agent j = 0; j < n_; ++j) {
    if (in_[j].contains(i)) out.insert(j);
  }
  return out;
}

std::vector<Edge> DiGraph::edges() const {
  std::vector<Edge> out;
  for (Agent i = 0; i < n_; ++i) {
    for (Agent j = 0; j < n_; ++j) {
      if (in_[j].contains(i)) out.push_back({i, j});
    }
  }
  return out;
}

std::size_t DiGraph::edge_count() const {
  std::size_t c = 0;
  for (AgentSet s : in_) c += s.size();
  return c;
}

DiGraph DiGraph::without_vertex(Agent v) const {
  check_agent(v);
  if (n_ == 1) throw GraphError("cannot remove the only agent");
  DiGraph g(n_ - 1);
  auto relabel = [v](Agent a) { return a > v ? a - 1 : a; };
  for (const Edge& e : edges()) {
    if (e.from != v && e.to != v) g.add_edge(relabel(e.from), relabel(e.to));
  }
  return g;
}

void FaultySet::validate(std::size_t n) const {
  if (!members.is_subset_of(AgentSet::range(n))) {
    throw GraphError("faulty agent id out of range for n = " + std::to_string(n));
  }
  if (members.size() > bound) {
    throw GraphError("faulty set has " + std::to_string(members.size()) +
                     " members but the bound is f = " + std::to_string(bound));
  }
}

Subgraph Subgraph::of(const DiGraph& g) {
  Subgraph h;
  h.vertices = AgentSet::range(g.size());
  h.in.resize(g.size());
  for (Agent i = 0; i < g.size(); ++i) h.in[i] = g.in_neighbors(i);
  return h;
}

AgentSet in_neighbors(const DiGraph& g, Agent i) { return g.in_neighbors(i); }

std::uint64_t count_reduced_graphs(const DiGraph& g, const FaultySet& faulty) {
  faulty.validate(g.size());
  const AgentSet alive = AgentSet::range(g.size()) - faulty.members;
  std::uint64_t total = 1;
  for (Agent i : alive.to_vector()) {
    const std::size_t deg = (g.in_neighbors(i) & alive).size();
    std::uint64_t options = 0;
    for (std::size_t m = 0; m <= std::min(faulty.bound, deg); ++m) options += binomial(deg, m);
    total = saturating_mul(total, options);
  }
  return total;
}

void for_each_reduced_graph(const DiGraph& g, const FaultySet& faulty,
                            const std::function<bool(const ReducedGraph&)>& visit) {
  faulty.validate(g.size());
  const AgentSet alive = AgentSet::range(g.size()) - faulty.members;
  const std::vector<Agent> agents = alive.to_vector();
  std::vector<std::vector<AgentSet>> options;
  options.reserve(agents.size());
  for (Agent i : agents) options.push_back(subsets_up_to(g.in_neighbors(i) & alive, faulty.bound));

  ReducedGraph rg = make_reduced(g, faulty, std::vector<AgentSet>(g.size()));
  std::vector<std::size_t> digit(agents.size(), 0);
  while (true) {
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const Agent i = agents[a];
      rg.removed[i] = options[a][digit[a]];
      rg.graph.in[i] = (g.in_neighbors(i) & alive) - rg.removed[i];
    }
    if (!visit(rg)) return;
    // Mixed-radix increment, last agent varying fastest.
    std::size_t pos = agents.size();
    while (pos > 0) {
      --pos;
      if (++digit[pos] < options[pos].size()) break;
      digit[pos] = 0;
      if (pos == 0) return;
    }
    if (agents.empty()) return;
  }
}

std::vector<ReducedGraph> enumerate_reduced_graphs(const DiGraph& g, const FaultySet& faulty) {
  std::vector<ReducedGraph> out;
  for_each_reduced_graph(g, faulty, [&](const ReducedGraph& rg) {
    out.push_back(rg);
    return true;
  });
  return out;
}

std::vector<AgentSet> strongly_connected_components(const Subgraph& h) {
  const std::vector<AgentSet> reach = reach_sets(h);
  std::vector<AgentSet> comps;
  AgentSet assigned;
  for (Agent v : h.vertices.to_vector()) {
    if (assigned.contains(v)) continue;
    AgentSet comp;
    for (Agent u : reach[v].to_vector()) {
      if (reach[u].contains(v)) comp.insert(u);
    }
    comps.push_back(comp);
    assigned = assigned | comp;
  }
  return comps;
}

AgentSet source_component(const Subgraph& h) {
  if (h.vertices.empty()) return {};
  // A condensation DAG with exactly one source SCC has that SCC reaching all
  // vertices; with two or more sources nothing reaches everything.
  std::optional<AgentSet> source;
  for (AgentSet comp : strongly_connected_components(h)) {
    AgentSet incoming;
    for (Agent v : comp.to_vector()) incoming = incoming | (h.in[v] & h.vertices);
    if ((incoming - comp).empty()) {
      if (source) return {};
      source = comp;
    }
  }
  return source.value_or(AgentSet{});
}

AgentSet source_component(const DiGraph& g) { return source_component(Subgraph::of(g)); }

std::vector<AgentSet> faulty_sets_up_to(std::size_t n, std::size_t f) {
  std::vector<AgentSet> out;
  const AgentSet all = AgentSet::range(n);
  for (std::size_t size = 0; size <= std::min(f, n); ++size) {
    for (AgentSet s : subsets_up_to(all, size)) {
      if (s.size() == size) out.push_back(s);
    }
  }
  return out;
}

Condition1Result check_condition1(const DiGraph& g, std::size_t f, std::size_t s,
                                  Condition1Method method) {
  if (s < 1 || s > g.size() + 1) {
    throw GraphError("sparsity parameter must lie in 1..n+1");
  }
  const std::size_t required = std::max(f + 1, s);
  if (method == Condition1Method::kAuto) {
    std::uint64_t total = 0;
    for (AgentSet fs : faulty_sets_up_to(g.size(), f)) {
      total += count_reduced_graphs(g, FaultySet{fs, f});
      if (total > kExhaustiveBudget) break;
    }
    method = total <= kExhaustiveBudget ? Condition1Method::kExhaustive
                                        : Condition1Method::kCutSearch;
  }
  if (method == Condition1Method::kExhaustive) return condition1_exhaustive(g, f, required);
  return condition1_cut_search(g, f, required);
}

Condition2Result check_condition2(const DiGraph& g, std::size_t f) {
  if (g.size() > kCondition2MaxAgents) {
    throw GraphError("Condition 2 enumeration is exponential (4^n); n = " + std::to_string(g.size()) +
                     " exceeds the limit of " + std::to_string(kCondition2MaxAgents));
  }
  Condition2Result result;
  const AgentSet all = AgentSet::range(g.size());
  for (AgentSet fs : faulty_sets_up_to(g.size(), f)) {
    const std::vector<Agent> rest = (all - fs).to_vector();
    const std::size_t m = rest.size();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < m; ++i) combos *= 3;
    for (std::size_t code = 0; code < combos; ++code) {
      Partition p;
      p.faulty = fs;
      std::size_t c = code;
      for (Agent v : rest) {
        switch (c % 3) {
          case 0: p.left.insert(v); break;
          case 1: p.right.insert(v); break;
          default: p.center.insert(v); break;
        }
        c /= 3;
      }
      if (p.left.empty() || p.right.empty()) continue;
      bool satisfied = false;
      for (Agent i : p.left.to_vector()) {
        if ((g.in_neighbors(i) & (p.right | p.center)).size() >= f + 1) {
          satisfied = true;
          break;
        }
      }
      if (!satisfied) {
        for (Agent j : p.right.to_vector()) {
          if ((g.in_neighbors(j) & (p.left | p.center)).size() >= f + 1) {
            satisfied = true;
            break;
          }
        }
      }
      if (!satisfied) {
        result.holds = false;
        result.witness = p;
        return result;
      }
    }
  }
  return result;
}

std::string to_string(AgentSet s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (Agent a : s.to_vector()) {
    if (!first) os << ',';
    os << a;
    first = false;
  }
  os << '}';
  return os.str();
}

}  // namespace bzopt
