#pragma once

// Graph view of the e = 1 revealed-preference relations, shared by the
// Houtman-Maks, money-pump and minimum-cost computations. A GARP violation is
// a directed cycle of weak edges that uses at least one strict edge.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "revpref/revealed_preference.hpp"

namespace revpref::detail {

using Mask = std::vector<std::uint8_t>;

struct PreferenceGraph {
  std::size_t n = 0;
  Mask weak;                         // n*n, off-diagonal only
  Mask strict;                       // n*n, subset of weak
  std::vector<double> margin;        // 1 - p^i.x^j / p^i.x^i clamped at 0, n*n
  std::vector<double> expenditure;   // p^i.x^i

  bool weak_edge(std::size_t i, std::size_t j) const { return weak[i * n + j] != 0; }
  bool strict_edge(std::size_t i, std::size_t j) const { return strict[i * n + j] != 0; }
  double edge_margin(std::size_t i, std::size_t j) const { return margin[i * n + j]; }
};

PreferenceGraph make_graph(const CostMatrix& costs);

// Restriction to `vertices` (local ids follow the order given).
PreferenceGraph induced(const PreferenceGraph& g, const std::vector<std::size_t>& vertices);

// Masks select which vertices / edges take part; an empty mask means "all".
struct GraphMasks {
  Mask vertex_alive;
  Mask edge_alive;  // n*n
};

// Strongly connected components of the alive weak relation that contain an
// alive strict edge. Components are sorted internally and by smallest member.
std::vector<std::vector<std::size_t>> violating_components(const PreferenceGraph& g,
                                                           const GraphMasks& masks = {});

bool has_violation(const PreferenceGraph& g, const GraphMasks& masks = {});

struct FoundCycle {
  std::vector<std::size_t> vertices;  // v0 -> v1 -> ... -> v_last -> v0
  int cost = 0;
};

// Violating cycle minimising the summed 0/1 weights of its vertices and
// edges (empty weight masks count as zero). Ties go to the first closing
// strict edge in (b, a) scan order.
std::optional<FoundCycle> cheapest_violating_cycle(const PreferenceGraph& g,
                                                   const GraphMasks& masks,
                                                   const Mask& vertex_weight,
                                                   const Mask& edge_weight);

}  // namespace revpref::detail
