#include "revpref/revealed_preference.hpp"

#include <string>

#include "revpref/errors.hpp"
#include "revpref/format.hpp"

namespace revpref {

CostMatrix::CostMatrix(const ChoiceDataset& dataset)
    : n_(dataset.size()), costs_(n_ * n_) {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      costs_[i * n_ + j] = dataset[i].cost_of(dataset[j].bundle());
    }
  }
}

BoolMatrix transitive_closure(const BoolMatrix& relation) {
  BoolMatrix closure = relation;
  const std::size_t n = closure.size();
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!closure(i, k)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (closure(k, j)) closure.set(i, j);
      }
    }
  }
  return closure;
}

RelationMatrices build_relations(const CostMatrix& costs, double efficiency) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw EfficiencyOutOfRange("efficiency must lie in [0, 1], got " +
                               format_sig(efficiency, 12));
  }
  const std::size_t n = costs.size();
  RelationMatrices rel;
  rel.efficiency = efficiency;
  rel.weak_direct = BoolMatrix(n);
  rel.strict_direct = BoolMatrix(n);
  const bool reflexive = efficiency >= 1.0 - kRelationSlack;
  for (std::size_t i = 0; i < n; ++i) {
    const double budget = efficiency * costs.expenditure(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        rel.weak_direct.set(i, i, reflexive);
        continue;
      }
      const double c = costs(i, j);
      if (c <= budget + kRelationSlack) rel.weak_direct.set(i, j);
      if (c < budget - kRelationSlack) rel.strict_direct.set(i, j);
    }
  }
  rel.weak_closure = transitive_closure(rel.weak_direct);
  return rel;
}

RelationMatrices build_relations(const ChoiceDataset& dataset, double efficiency) {
  return build_relations(CostMatrix(dataset), efficiency);
}

GarpResult check_garp(const RelationMatrices& relations) {
  const std::size_t n = relations.weak_closure.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (relations.weak_closure(i, j) && relations.strict_direct(j, i)) {
        return {false, std::make_pair(i, j)};
      }
    }
  }
  return {};
}

GarpResult garp_satisfied(const CostMatrix& costs, double efficiency) {
  return check_garp(build_relations(costs, efficiency));
}

GarpResult garp_satisfied(const ChoiceDataset& dataset, double efficiency) {
  return garp_satisfied(CostMatrix(dataset), efficiency);
}

}  // namespace revpref
