#include "revpref/indices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/revealed_preference.hpp"
#include "violation_graph.hpp"

namespace revpref {

using detail::FoundCycle;
using detail::GraphMasks;
using detail::Mask;
using detail::PreferenceGraph;

std::string_view to_string(Exactness e) {
  switch (e) {
    case Exactness::exact:
      return "exact";
    case Exactness::heuristic:
      return "heuristic";
    case Exactness::truncated:
      return "truncated";
  }
  return "exact";
}

Exactness exactness_from_string(std::string_view s) {
  if (s == "exact") return Exactness::exact;
  if (s == "heuristic") return Exactness::heuristic;
  if (s == "truncated") return Exactness::truncated;
  throw InvalidParameter("unknown exactness flag '" + std::string(s) + "'");
}

namespace {

// heuristic outranks truncated outranks exact.
Exactness worse(Exactness a, Exactness b) {
  auto rank = [](Exactness e) {
    return e == Exactness::exact ? 0 : e == Exactness::truncated ? 1 : 2;
  };
  return rank(a) >= rank(b) ? a : b;
}

constexpr std::size_t kInfeasible = std::numeric_limits<std::size_t>::max();

// ---------------------------------------------------------------------------
// Houtman-Maks

std::vector<std::size_t> hmi_greedy(const PreferenceGraph& h) {
  const std::size_t m = h.n;
  Mask alive(m, 1);
  std::vector<std::size_t> removed;
  for (;;) {
    // Closure over alive vertices only.
    std::vector<std::uint8_t> closure(m * m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        closure[i * m + j] = alive[i] && alive[j] && h.weak_edge(i, j);
      }
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (!alive[k]) continue;
      for (std::size_t i = 0; i < m; ++i) {
        if (!closure[i * m + k]) continue;
        for (std::size_t j = 0; j < m; ++j) {
          if (closure[k * m + j]) closure[i * m + j] = 1;
        }
      }
    }
    std::vector<std::size_t> pairs(m, 0);
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j && closure[i * m + j] && alive[j] && alive[i] && h.strict_edge(j, i)) {
          ++pairs[i];
          ++pairs[j];
          any = true;
        }
      }
    }
    if (!any) break;
    const auto top = static_cast<std::size_t>(
        std::max_element(pairs.begin(), pairs.end()) - pairs.begin());
    alive[top] = 0;
    removed.push_back(top);
  }
  std::sort(removed.begin(), removed.end());
  return removed;
}

class HmiSearch {
 public:
  HmiSearch(const PreferenceGraph& h, std::size_t node_limit)
      : h_(h), node_limit_(node_limit), alive_(h.n, 1), forbidden_(h.n, 0) {}

  std::vector<std::size_t> solve(std::vector<std::size_t> incumbent) {
    best_ = std::move(incumbent);
    recurse();
    std::sort(best_.begin(), best_.end());
    return best_;
  }

  bool truncated() const { return truncated_; }

 private:
  // Greedy packing of violating cycles disjoint in their removable vertices.
  std::size_t lower_bound(std::optional<FoundCycle>& first) const {
    GraphMasks masks{alive_, {}};
    Mask weight(h_.n, 0);
    for (std::size_t v = 0; v < h_.n; ++v) weight[v] = alive_[v] && !forbidden_[v];
    std::size_t bound = 0;
    for (;;) {
      auto cyc = detail::cheapest_violating_cycle(h_, masks, weight, {});
      if (!cyc) break;
      if (cyc->cost == 0) return kInfeasible;
      if (bound == 0) first = cyc;
      ++bound;
      for (std::size_t v : cyc->vertices) {
        if (weight[v]) masks.vertex_alive[v] = 0;
      }
    }
    return bound;
  }

  void recurse() {
    if (truncated_) return;
    if (++nodes_ > node_limit_) {
      truncated_ = true;
      return;
    }
    std::optional<FoundCycle> first;
    const std::size_t bound = lower_bound(first);
    if (bound == kInfeasible) return;
    if (bound == 0) {
      if (removed_.size() < best_.size()) best_ = removed_;
      return;
    }
    if (removed_.size() + bound >= best_.size()) return;

    std::vector<std::size_t> branch;
    for (std::size_t v : first->vertices) {
      if (!forbidden_[v]) branch.push_back(v);
    }
    std::sort(branch.begin(), branch.end());
    std::vector<std::size_t> pinned;
    for (std::size_t v : branch) {
      alive_[v] = 0;
      removed_.push_back(v);
      recurse();
      removed_.pop_back();
      alive_[v] = 1;
      // Later branches keep v.
      forbidden_[v] = 1;
      pinned.push_back(v);
    }
    for (std::size_t v : pinned) forbidden_[v] = 0;
  }

  const PreferenceGraph& h_;
  std::size_t node_limit_;
  std::size_t nodes_ = 0;
  bool truncated_ = false;
  Mask alive_;
  Mask forbidden_;
  std::vector<std::size_t> removed_;
  std::vector<std::size_t> best_;
};

// ---------------------------------------------------------------------------
// Minimum cost

struct EdgeSet {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double cost = 0.0;
};

std::vector<std::pair<std::size_t, std::size_t>> cycle_edges(const FoundCycle& cyc) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto& vs = cyc.vertices;
  for (std::size_t k = 0; k < vs.size(); ++k) out.emplace_back(vs[k], vs[(k + 1) % vs.size()]);
  return out;
}

EdgeSet mci_greedy(const PreferenceGraph& h) {
  const std::size_t m = h.n;
  GraphMasks masks{{}, h.weak};
  EdgeSet deleted;
  for (;;) {
    auto cyc = detail::cheapest_violating_cycle(h, masks, {}, masks.edge_alive);
    if (!cyc) break;
    auto edges = cycle_edges(*cyc);
    auto cheapest = *std::min_element(edges.begin(), edges.end(), [&](auto a, auto b) {
      return h.edge_margin(a.first, a.second) < h.edge_margin(b.first, b.second);
    });
    masks.edge_alive[cheapest.first * m + cheapest.second] = 0;
    deleted.edges.push_back(cheapest);
  }
  // Reverse delete: put back the most expensive deletions that turn out to be
  // unnecessary.
  std::stable_sort(deleted.edges.begin(), deleted.edges.end(), [&](auto a, auto b) {
    return h.edge_margin(a.first, a.second) > h.edge_margin(b.first, b.second);
  });
  std::vector<std::pair<std::size_t, std::size_t>> kept_deleted;
  for (auto e : deleted.edges) {
    masks.edge_alive[e.first * m + e.second] = 1;
    if (detail::has_violation(h, masks)) {
      masks.edge_alive[e.first * m + e.second] = 0;
      kept_deleted.push_back(e);
    }
  }
  deleted.edges = std::move(kept_deleted);
  deleted.cost = 0.0;
  for (auto e : deleted.edges) deleted.cost += h.edge_margin(e.first, e.second);
  return deleted;
}

class MciSearch {
 public:
  MciSearch(const PreferenceGraph& h, std::size_t node_limit)
      : h_(h), node_limit_(node_limit), alive_(h.weak), forbidden_(h.n * h.n, 0) {}

  EdgeSet solve(EdgeSet incumbent) {
    best_ = std::move(incumbent);
    recurse(0.0);
    return best_;
  }

  bool truncated() const { return truncated_; }

 private:
  Mask deletable() const {
    Mask w(h_.n * h_.n, 0);
    for (std::size_t e = 0; e < w.size(); ++e) w[e] = alive_[e] && !forbidden_[e];
    return w;
  }

  // Greedy packing of violating cycles disjoint in their deletable edges; each
  // contributes its cheapest deletable edge.
  double lower_bound(std::optional<FoundCycle>& first) const {
    GraphMasks masks{{}, alive_};
    const Mask weight = deletable();
    double bound = 0.0;
    bool found = false;
    for (;;) {
      auto cyc = detail::cheapest_violating_cycle(h_, masks, {}, weight);
      if (!cyc) break;
      if (cyc->cost == 0) return std::numeric_limits<double>::infinity();
      if (!found) first = cyc;
      found = true;
      double cheapest = std::numeric_limits<double>::infinity();
      for (auto [i, j] : cycle_edges(*cyc)) {
        if (!weight[i * h_.n + j]) continue;
        cheapest = std::min(cheapest, h_.edge_margin(i, j));
        masks.edge_alive[i * h_.n + j] = 0;
      }
      bound += cheapest;
    }
    return bound;
  }

  void recurse(double cost) {
    if (truncated_) return;
    if (++nodes_ > node_limit_) {
      truncated_ = true;
      return;
    }
    std::optional<FoundCycle> first;
    const double bound = lower_bound(first);
    if (std::isinf(bound)) return;
    const double slack = 1e-12 * std::max(1.0, best_.cost);
    if (!first) {
      if (cost < best_.cost - slack) {
        best_.edges = removed_;
        best_.cost = cost;
      }
      return;
    }
    if (cost + bound >= best_.cost - slack) return;

    std::vector<std::pair<std::size_t, std::size_t>> branch;
    for (auto e : cycle_edges(*first)) {
      if (!forbidden_[e.first * h_.n + e.second]) branch.push_back(e);
    }
    std::stable_sort(branch.begin(), branch.end(), [&](auto a, auto b) {
      return h_.edge_margin(a.first, a.second) < h_.edge_margin(b.first, b.second);
    });
    std::vector<std::size_t> pinned;
    for (auto [i, j] : branch) {
      const std::size_t id = i * h_.n + j;
      alive_[id] = 0;
      removed_.emplace_back(i, j);
      recurse(cost + h_.edge_margin(i, j));
      removed_.pop_back();
      alive_[id] = 1;
      forbidden_[id] = 1;
      pinned.push_back(id);
    }
    for (std::size_t id : pinned) forbidden_[id] = 0;
  }

  const PreferenceGraph& h_;
  std::size_t node_limit_;
  std::size_t nodes_ = 0;
  bool truncated_ = false;
  Mask alive_;
  Mask forbidden_;
  std::vector<std::pair<std::size_t, std::size_t>> removed_;
  EdgeSet best_;
};

// ---------------------------------------------------------------------------
// Money pump

class CycleEnumerator {
 public:
  CycleEnumerator(const PreferenceGraph& g, const CostMatrix& costs,
                  std::vector<int> component, std::size_t max_len, std::size_t max_cycles)
      : g_(g),
        costs_(costs),
        component_(std::move(component)),
        max_len_(max_len),
        max_cycles_(max_cycles),
        on_path_(g.n, 0) {}

  void run() {
    for (start_ = 0; start_ < g_.n && !stopped_; ++start_) {
      if (component_[start_] < 0) continue;
      path_.assign(1, start_);
      on_path_[start_] = 1;
      extend(start_, 0);
      on_path_[start_] = 0;
    }
  }

  const std::vector<double>& values() const { return values_; }
  bool truncated() const { return truncated_; }

 private:
  void extend(std::size_t v, std::size_t strict_edges) {
    for (std::size_t w = 0; w < g_.n && !stopped_; ++w) {
      if (!g_.weak_edge(v, w)) continue;
      const std::size_t strict_here = strict_edges + (g_.strict_edge(v, w) ? 1 : 0);
      if (w == start_) {
        if (strict_here > 0) record();
        continue;
      }
      if (w < start_ || on_path_[w] || component_[w] != component_[start_]) continue;
      if (path_.size() == max_len_) {
        truncated_ = true;
        continue;
      }
      path_.push_back(w);
      on_path_[w] = 1;
      extend(w, strict_here);
      on_path_[w] = 0;
      path_.pop_back();
    }
  }

  void record() {
    if (values_.size() == max_cycles_) {
      truncated_ = true;
      stopped_ = true;
      return;
    }
    values_.push_back(cycle_value(costs_, path_));
  }

 public:
  static double cycle_value(const CostMatrix& costs, const std::vector<std::size_t>& cycle) {
    double surplus = 0.0;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      const std::size_t i = cycle[k];
      const std::size_t next = cycle[(k + 1) % cycle.size()];
      surplus += 1.0 - costs(i, next) / costs.expenditure(i);
    }
    return surplus / static_cast<double>(cycle.size());
  }

 private:
  const PreferenceGraph& g_;
  const CostMatrix& costs_;
  std::vector<int> component_;
  std::size_t max_len_;
  std::size_t max_cycles_;
  std::size_t start_ = 0;
  std::vector<std::size_t> path_;
  Mask on_path_;
  std::vector<double> values_;
  bool truncated_ = false;
  bool stopped_ = false;
};

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

double ccei(const ChoiceDataset& dataset, double tol) {
  if (!(tol > 0.0)) throw InvalidParameter("CCEI tolerance must be positive");
  const CostMatrix costs(dataset);
  if (garp_satisfied(costs, 1.0).satisfied) return 1.0;
  // GARP at e is monotone (relations only shrink as e falls) and always holds
  // at e = 0, so [lo, hi] brackets the threshold.
  double lo = 0.0;
  double hi = 1.0;
  const int iterations = std::max(40, static_cast<int>(std::ceil(-std::log2(tol))) + 2);
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (garp_satisfied(costs, mid).satisfied) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

HoutmanMaksResult houtman_maks(const ChoiceDataset& dataset, std::size_t exact_limit,
                               std::size_t node_limit) {
  const CostMatrix costs(dataset);
  const PreferenceGraph g = detail::make_graph(costs);
  HoutmanMaksResult result;
  for (const auto& comp : detail::violating_components(g)) {
    const PreferenceGraph h = detail::induced(g, comp);
    std::vector<std::size_t> local = hmi_greedy(h);
    if (comp.size() <= exact_limit) {
      HmiSearch search(h, node_limit);
      local = search.solve(std::move(local));
      if (search.truncated()) result.exactness = worse(result.exactness, Exactness::truncated);
    } else {
      result.exactness = worse(result.exactness, Exactness::heuristic);
    }
    for (std::size_t v : local) result.removed.push_back(comp[v]);
  }
  std::sort(result.removed.begin(), result.removed.end());
  result.retained = dataset.size() - result.removed.size();
  return result;
}

MoneyPumpResult money_pump_index(const ChoiceDataset& dataset, std::size_t max_cycle_len,
                                 std::size_t max_cycles) {
  if (max_cycle_len < 2) throw InvalidParameter("max_cycle_len must be at least 2");
  if (max_cycles < 1) throw InvalidParameter("max_cycles must be at least 1");
  const CostMatrix costs(dataset);
  const PreferenceGraph g = detail::make_graph(costs);
  const auto comps = detail::violating_components(g);
  MoneyPumpResult result;
  if (comps.empty()) return result;

  std::vector<int> component(g.n, -1);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (std::size_t v : comps[c]) component[v] = static_cast<int>(c);
  }
  CycleEnumerator enumerator(g, costs, std::move(component), max_cycle_len, max_cycles);
  enumerator.run();
  result.cycle_values = enumerator.values();
  if (enumerator.truncated()) result.exactness = Exactness::truncated;

  if (result.cycle_values.empty()) {
    // Every violation is longer than the cap; fall back to the shortest one.
    const Mask unit(g.n, 1);
    auto cyc = detail::cheapest_violating_cycle(g, {}, unit, {});
    result.cycle_values.push_back(CycleEnumerator::cycle_value(costs, cyc->vertices));
    result.exactness = Exactness::truncated;
  }
  result.cycles_examined = result.cycle_values.size();
  result.mean = std::accumulate(result.cycle_values.begin(), result.cycle_values.end(), 0.0) /
                static_cast<double>(result.cycle_values.size());
  result.median = median_of(result.cycle_values);
  return result;
}

MinimumCostResult minimum_cost_index(const ChoiceDataset& dataset, std::size_t exact_limit,
                                     std::size_t node_limit) {
  const CostMatrix costs(dataset);
  const PreferenceGraph g = detail::make_graph(costs);
  MinimumCostResult result;
  for (const auto& comp : detail::violating_components(g)) {
    const PreferenceGraph h = detail::induced(g, comp);
    const auto relations = static_cast<std::size_t>(std::count(h.weak.begin(), h.weak.end(), 1));
    EdgeSet chosen = mci_greedy(h);
    if (relations <= exact_limit) {
      MciSearch search(h, node_limit);
      chosen = search.solve(std::move(chosen));
      if (search.truncated()) result.exactness = worse(result.exactness, Exactness::truncated);
    } else {
      result.exactness = worse(result.exactness, Exactness::heuristic);
    }
    for (auto [i, j] : chosen.edges) {
      result.removed_relations.emplace_back(comp[i], comp[j]);
      result.removed_cost += h.edge_margin(i, j);
    }
  }
  std::sort(result.removed_relations.begin(), result.removed_relations.end());
  result.mci = result.removed_cost / static_cast<double>(dataset.size());
  return result;
}

IndexReport score_all(const ChoiceDataset& dataset, const IndexOptions& options) {
  IndexReport report;
  report.metadata = dataset.metadata();
  report.observations = dataset.size();
  report.hmi_retained = dataset.size();
  report.garp_pass = garp_satisfied(dataset, 1.0).satisfied;
  if (report.garp_pass) return report;

  report.ccei = ccei(dataset, options.ccei_tol);

  const auto hmi = houtman_maks(dataset, options.hmi_exact_limit, options.node_limit);
  report.hmi_retained = hmi.retained;
  report.hmi_fraction = static_cast<double>(hmi.retained) / static_cast<double>(dataset.size());
  report.flags.hmi = hmi.exactness;

  const auto mpi = money_pump_index(dataset, options.mpi_max_cycle_len, options.mpi_max_cycles);
  report.mpi_mean = mpi.mean;
  report.mpi_median = mpi.median;
  report.cycle_count_examined = mpi.cycles_examined;
  report.flags.mpi = mpi.exactness;

  const auto mci = minimum_cost_index(dataset, options.mci_exact_limit, options.node_limit);
  report.mci = mci.mci;
  report.flags.mci = mci.exactness;
  return report;
}

nlohmann::json report_to_json(const IndexReport& r) {
  return {{"schema", kScoreSchema},
          {"trial_id", r.metadata.trial_id},
          {"domain", r.metadata.domain},
          {"variant", r.metadata.variant},
          {"observations", r.observations},
          {"ccei", round_sig(r.ccei, 12)},
          {"hmi_retained", r.hmi_retained},
          {"hmi_fraction", round_sig(r.hmi_fraction, 12)},
          {"mpi_mean", round_sig(r.mpi_mean, 12)},
          {"mpi_median", round_sig(r.mpi_median, 12)},
          {"mci", round_sig(r.mci, 12)},
          {"garp_pass", r.garp_pass},
          {"cycle_count_examined", r.cycle_count_examined},
          {"flags",
           {{"hmi", to_string(r.flags.hmi)},
            {"mpi", to_string(r.flags.mpi)},
            {"mci", to_string(r.flags.mci)}}}};
}

IndexReport report_from_json(const nlohmann::json& doc) {
  require_schema(doc, kScoreSchema);
  try {
    IndexReport r;
    r.metadata.trial_id = doc.at("trial_id").get<std::string>();
    r.metadata.domain = doc.at("domain").get<std::string>();
    r.metadata.variant = doc.at("variant").get<std::string>();
    r.observations = doc.at("observations").get<std::size_t>();
    r.ccei = doc.at("ccei").get<double>();
    r.hmi_retained = doc.at("hmi_retained").get<std::size_t>();
    r.hmi_fraction = doc.at("hmi_fraction").get<double>();
    r.mpi_mean = doc.at("mpi_mean").get<double>();
    r.mpi_median = doc.at("mpi_median").get<double>();
    r.mci = doc.at("mci").get<double>();
    r.garp_pass = doc.at("garp_pass").get<bool>();
    r.cycle_count_examined = doc.at("cycle_count_examined").get<std::size_t>();
    const auto& flags = doc.at("flags");
    r.flags.hmi = exactness_from_string(flags.at("hmi").get<std::string>());
    r.flags.mpi = exactness_from_string(flags.at("mpi").get<std::string>());
    r.flags.mci = exactness_from_string(flags.at("mci").get<std::string>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 0, "report");
  }
}

std::string report_csv_header() {
  return "trial_id,domain,variant,ccei,hmi_retained,hmi_fraction,mpi_mean,mpi_median,mci,"
         "garp_pass,flags";
}

std::string report_csv_row(const IndexReport& r) {
  std::string row;
  row += r.metadata.trial_id + "," + r.metadata.domain + "," + r.metadata.variant + ",";
  row += format_sig(r.ccei, 12) + "," + std::to_string(r.hmi_retained) + ",";
  row += format_sig(r.hmi_fraction, 12) + "," + format_sig(r.mpi_mean, 12) + ",";
  row += format_sig(r.mpi_median, 12) + "," + format_sig(r.mci, 12) + ",";
  row += std::string(r.garp_pass ? "true" : "false") + ",";
  row += "hmi=" + std::string(to_string(r.flags.hmi)) + ";mpi=" +
         std::string(to_string(r.flags.mpi)) + ";mci=" + std::string(to_string(r.flags.mci));
  return row;
}

}  // namespace revpref
