#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "revpref/choice_data.hpp"

namespace revpref {

// How an index value was obtained. `heuristic` and `truncated` values are
// feasible (upper bounds on the violation measure) but not proven optimal;
// `truncated` also marks a capped cycle enumeration.
enum class Exactness { exact, heuristic, truncated };

std::string_view to_string(Exactness e);
Exactness exactness_from_string(std::string_view s);

// Critical cost efficiency index: the largest e in [0, 1] at which the data
// satisfy GARP. Computed by bisection; the result e passes GARP and either
// e = 1 or e + tol fails. Throws InvalidParameter unless tol > 0.
double ccei(const ChoiceDataset& dataset, double tol = 1e-6);

struct HoutmanMaksResult {
  std::size_t retained = 0;
  std::vector<std::size_t> removed;  // ascending observation indices
  Exactness exactness = Exactness::exact;
};

// Largest subset of observations whose restriction satisfies GARP at e = 1.
//
// Only observations inside a strongly connected component of the weak
// relation that contains a strict edge can lie on a violation, and the
// components are independent, so each one is solved separately: by
// branch-and-bound when it has at most `exact_limit` observations, otherwise by
// greedily dropping the observation in the most violating pairs (lowest index
// on ties). `node_limit` caps branch-and-bound work per component; hitting it
// returns the best set found, flagged truncated.
HoutmanMaksResult houtman_maks(const ChoiceDataset& dataset, std::size_t exact_limit = 20,
                               std::size_t node_limit = 200000);

struct MoneyPumpResult {
  double mean = 0.0;
  double median = 0.0;
  std::size_t cycles_examined = 0;
  Exactness exactness = Exactness::exact;
  std::vector<double> cycle_values;  // one per enumerated cycle, in discovery order
};

// Mean and median money-pump cost over the simple cycles of the weak relation
// that contain at least one strict edge. Each observation's costs are taken
// as shares of its own expenditure, so a cycle (i1 .. im) costs
//   (1/m) sum_k (1 - p^ik.x^ik+1 / p^ik.x^ik)
// and rescaling one observation's prices leaves the index unchanged.
// Cycles are enumerated by depth-first search from their smallest vertex, up
// to `max_cycle_len` vertices and `max_cycles` cycles; when a cap binds the
// result is flagged truncated. If GARP fails but no cycle fits the caps, the
// shortest violating cycle is used so the index stays positive.
MoneyPumpResult money_pump_index(const ChoiceDataset& dataset, std::size_t max_cycle_len = 6,
                                 std::size_t max_cycles = 10000);

struct MinimumCostResult {
  double mci = 0.0;
  double removed_cost = 0.0;  // sum of budget shares, before dividing by N
  std::vector<std::pair<std::size_t, std::size_t>> removed_relations;  // sorted (i, j)
  Exactness exactness = Exactness::exact;
};

// Minimum total cost of deleting direct relations x^i R x^j (each costing
// 1 - p^i.x^j / p^i.x^i) so that no GARP violation remains, divided by N.
// Solved per violating component: branch-and-bound when the component has at
// most `exact_limit` relations, otherwise greedy cycle breaking followed by a
// reverse-delete pass.
MinimumCostResult minimum_cost_index(const ChoiceDataset& dataset, std::size_t exact_limit = 25,
                                     std::size_t node_limit = 200000);

struct IndexOptions {
  double ccei_tol = 1e-6;
  std::size_t hmi_exact_limit = 20;
  std::size_t mpi_max_cycle_len = 6;
  std::size_t mpi_max_cycles = 10000;
  std::size_t mci_exact_limit = 25;
  std::size_t node_limit = 200000;
};

struct IndexFlags {
  Exactness hmi = Exactness::exact;
  Exactness mpi = Exactness::exact;
  Exactness mci = Exactness::exact;

  friend bool operator==(const IndexFlags&, const IndexFlags&) = default;
};

struct IndexReport {
  DatasetMetadata metadata;
  std::size_t observations = 0;
  double ccei = 1.0;
  std::size_t hmi_retained = 0;
  double hmi_fraction = 1.0;
  double mpi_mean = 0.0;
  double mpi_median = 0.0;
  double mci = 0.0;
  bool garp_pass = true;
  std::size_t cycle_count_examined = 0;
  IndexFlags flags;
};

IndexReport score_all(const ChoiceDataset& dataset, const IndexOptions& options = {});

inline constexpr char kScoreSchema[] = "revpref-score/1";

nlohmann::json report_to_json(const IndexReport& report);
IndexReport report_from_json(const nlohmann::json& doc);

// Fixed column order: trial_id, domain, variant, ccei, hmi_retained,
// hmi_fraction, mpi_mean, mpi_median, mci, garp_pass, flags.
std::string report_csv_header();
std::string report_csv_row(const IndexReport& report);

}  // namespace revpref
