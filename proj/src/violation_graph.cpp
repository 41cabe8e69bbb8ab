#include "violation_graph.hpp"

#include <algorithm>
#include <limits>

namespace revpref::detail {

namespace {

bool vertex_on(const GraphMasks& m, std::size_t v) {
  return m.vertex_alive.empty() || m.vertex_alive[v] != 0;
}

bool edge_on(const GraphMasks& m, std::size_t n, std::size_t i, std::size_t j) {
  return m.edge_alive.empty() || m.edge_alive[i * n + j] != 0;
}

class Tarjan {
 public:
  Tarjan(const PreferenceGraph& g, const GraphMasks& masks)
      : g_(g), masks_(masks), index_(g.n, -1), low_(g.n, 0), on_stack_(g.n, 0), comp_(g.n, -1) {}

  // Component id per vertex (-1 for dead vertices).
  std::vector<int> run() {
    for (std::size_t v = 0; v < g_.n; ++v) {
      if (vertex_on(masks_, v) && index_[v] < 0) visit(v);
    }
    return comp_;
  }

  int count() const { return next_comp_; }

 private:
  bool live_edge(std::size_t u, std::size_t w) const {
    return g_.weak_edge(u, w) && vertex_on(masks_, w) && edge_on(masks_, g_.n, u, w);
  }

  void visit(std::size_t v) {
    index_[v] = low_[v] = next_index_++;
    stack_.push_back(v);
    on_stack_[v] = 1;
    for (std::size_t w = 0; w < g_.n; ++w) {
      if (!live_edge(v, w)) continue;
      if (index_[w] < 0) {
        visit(w);
        low_[v] = std::min(low_[v], low_[w]);
      } else if (on_stack_[w]) {
        low_[v] = std::min(low_[v], index_[w]);
      }
    }
    if (low_[v] == index_[v]) {
      std::size_t w;
      do {
        w = stack_.back();
        stack_.pop_back();
        on_stack_[w] = 0;
        comp_[w] = next_comp_;
      } while (w != v);
      ++next_comp_;
    }
  }

  const PreferenceGraph& g_;
  const GraphMasks& masks_;
  std::vector<int> index_;
  std::vector<int> low_;
  Mask on_stack_;
  std::vector<int> comp_;
  std::vector<std::size_t> stack_;
  int next_index_ = 0;
  int next_comp_ = 0;
};

}  // namespace

PreferenceGraph make_graph(const CostMatrix& costs) {
  const RelationMatrices rel = build_relations(costs, 1.0);
  PreferenceGraph g;
  g.n = costs.size();
  g.weak.assign(g.n * g.n, 0);
  g.strict.assign(g.n * g.n, 0);
  g.margin.assign(g.n * g.n, 0.0);
  g.expenditure.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    g.expenditure[i] = costs.expenditure(i);
    for (std::size_t j = 0; j < g.n; ++j) {
      if (i == j) continue;
      g.weak[i * g.n + j] = rel.weak_direct(i, j) ? 1 : 0;
      g.strict[i * g.n + j] = rel.strict_direct(i, j) ? 1 : 0;
      g.margin[i * g.n + j] = std::max(0.0, 1.0 - costs(i, j) / costs.expenditure(i));
    }
  }
  return g;
}

PreferenceGraph induced(const PreferenceGraph& g, const std::vector<std::size_t>& vertices) {
  PreferenceGraph h;
  h.n = vertices.size();
  h.weak.assign(h.n * h.n, 0);
  h.strict.assign(h.n * h.n, 0);
  h.margin.assign(h.n * h.n, 0.0);
  h.expenditure.resize(h.n);
  for (std::size_t a = 0; a < h.n; ++a) {
    h.expenditure[a] = g.expenditure[vertices[a]];
    for (std::size_t b = 0; b < h.n; ++b) {
      const std::size_t src = vertices[a] * g.n + vertices[b];
      h.weak[a * h.n + b] = g.weak[src];
      h.strict[a * h.n + b] = g.strict[src];
      h.margin[a * h.n + b] = g.margin[src];
    }
  }
  return h;
}

std::vector<std::vector<std::size_t>> violating_components(const PreferenceGraph& g,
                                                           const GraphMasks& masks) {
  Tarjan tarjan(g, masks);
  const std::vector<int> comp = tarjan.run();
  std::vector<std::uint8_t> violating(static_cast<std::size_t>(tarjan.count()), 0);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (comp[i] < 0) continue;
    for (std::size_t j = 0; j < g.n; ++j) {
      if (g.strict_edge(i, j) && comp[j] == comp[i] && edge_on(masks, g.n, i, j)) {
        violating[static_cast<std::size_t>(comp[i])] = 1;
      }
    }
  }
  std::vector<std::vector<std::size_t>> out(violating.size());
  for (std::size_t v = 0; v < g.n; ++v) {
    if (comp[v] >= 0 && violating[static_cast<std::size_t>(comp[v])]) {
      out[static_cast<std::size_t>(comp[v])].push_back(v);
    }
  }
  std::erase_if(out, [](const auto& c) { return c.empty(); });
  std::sort(out.begin(), out.end());
  return out;
}

bool has_violation(const PreferenceGraph& g, const GraphMasks& masks) {
  return !violating_components(g, masks).empty();
}

std::optional<FoundCycle> cheapest_violating_cycle(const PreferenceGraph& g,
                                                   const GraphMasks& masks,
                                                   const Mask& vertex_weight,
                                                   const Mask& edge_weight) {
  const std::size_t n = g.n;
  constexpr int kInf = std::numeric_limits<int>::max();
  auto vw = [&](std::size_t v) { return vertex_weight.empty() ? 0 : int(vertex_weight[v]); };
  auto ew = [&](std::size_t i, std::size_t j) {
    return edge_weight.empty() ? 0 : int(edge_weight[i * n + j]);
  };

  std::optional<FoundCycle> best;
  std::vector<int> dist(n);
  std::vector<std::size_t> parent(n);
  Mask done(n);

  for (std::size_t b = 0; b < n; ++b) {
    if (!vertex_on(masks, b)) continue;
    // Only worth a search if some alive strict edge enters b.
    bool entered = false;
    for (std::size_t a = 0; a < n && !entered; ++a) {
      entered = g.strict_edge(a, b) && vertex_on(masks, a) && edge_on(masks, n, a, b);
    }
    if (!entered) continue;

    // Dense Dijkstra; n is small and every step weight is 0, 1 or 2.
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    dist[b] = vw(b);
    parent[b] = b;
    for (;;) {
      std::size_t u = n;
      for (std::size_t v = 0; v < n; ++v) {
        if (!done[v] && dist[v] != kInf && (u == n || dist[v] < dist[u])) u = v;
      }
      if (u == n) break;
      done[u] = 1;
      for (std::size_t v = 0; v < n; ++v) {
        if (done[v] || !g.weak_edge(u, v) || !vertex_on(masks, v) || !edge_on(masks, n, u, v)) {
          continue;
        }
        const int candidate = dist[u] + ew(u, v) + vw(v);
        if (candidate < dist[v]) {
          dist[v] = candidate;
          parent[v] = u;
        }
      }
    }

    for (std::size_t a = 0; a < n; ++a) {
      if (a == b || dist[a] == kInf) continue;
      if (!g.strict_edge(a, b) || !edge_on(masks, n, a, b)) continue;
      const int cost = dist[a] + ew(a, b);
      if (best && cost >= best->cost) continue;
      FoundCycle cyc;
      cyc.cost = cost;
      for (std::size_t v = a;; v = parent[v]) {
        cyc.vertices.push_back(v);
        if (v == b) break;
      }
      std::reverse(cyc.vertices.begin(), cyc.vertices.end());
      best = std::move(cyc);
      if (best->cost == 0) return best;
    }
  }
  return best;
}

}  // namespace revpref::detail
