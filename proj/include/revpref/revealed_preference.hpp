#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "revpref/choice_data.hpp"

namespace revpref {

// Absolute slack applied to every revealed-preference comparison.
inline constexpr double kRelationSlack = 1e-9;

// Dense square boolean matrix.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  explicit BoolMatrix(std::size_t n) : n_(n), cells_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return cells_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value = true) {
    cells_[i * n_ + j] = value ? 1 : 0;
  }

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> cells_;
};

// cost(i, j) = p^i . x^j for every pair of observations.
class CostMatrix {
 public:
  explicit CostMatrix(const ChoiceDataset& dataset);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return costs_[i * n_ + j]; }
  double expenditure(std::size_t i) const { return costs_[i * n_ + i]; }

 private:
  std::size_t n_;
  std::vector<double> costs_;
};

// Revealed-preference relations at efficiency e:
//   weak_direct(i, j)   p^i.x^j <= e p^i.x^i + slack   (x^i directly revealed preferred to x^j)
//   strict_direct(i, j) p^i.x^j <  e p^i.x^i - slack
//   weak_closure        transitive closure of weak_direct
// The diagonal of weak_direct is set iff e >= 1 - slack; strict_direct has an
// empty diagonal.
struct RelationMatrices {
  BoolMatrix weak_direct;
  BoolMatrix strict_direct;
  BoolMatrix weak_closure;
  double efficiency = 1.0;
};

// Throws EfficiencyOutOfRange unless 0 <= e <= 1.
RelationMatrices build_relations(const ChoiceDataset& dataset, double efficiency = 1.0);
RelationMatrices build_relations(const CostMatrix& costs, double efficiency = 1.0);

// Boolean Warshall pass.
BoolMatrix transitive_closure(const BoolMatrix& relation);

struct GarpResult {
  bool satisfied = true;
  // First (i, j) in row-major order with weak_closure(i, j) and strict_direct(j, i).
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

GarpResult garp_satisfied(const ChoiceDataset& dataset, double efficiency = 1.0);
GarpResult garp_satisfied(const CostMatrix& costs, double efficiency = 1.0);
GarpResult check_garp(const RelationMatrices& relations);

}  // namespace revpref
