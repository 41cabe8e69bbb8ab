#pragma once

// Brute-force reference implementations used only by the tests. Nothing here
// calls into the library's relation, index or statistics code; they read raw
// prices and bundles and recompute everything from the definitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "revpref/choice_data.hpp"
#include "revpref/random.hpp"

namespace oracle {

constexpr double kSlack = 1e-9;

inline double cost(const revpref::ChoiceDataset& d, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < d.goods(); ++k) {
    s += d[i].prices()[k] * d[j].bundle()[k];
  }
  return s;
}

inline bool weak(const revpref::ChoiceDataset& d, std::size_t i, std::size_t j, double e) {
  if (i == j) return e >= 1.0 - kSlack;
  return cost(d, i, j) <= e * cost(d, i, i) + kSlack;
}

inline bool strict(const revpref::ChoiceDataset& d, std::size_t i, std::size_t j, double e) {
  if (i == j) return false;
  return cost(d, i, j) < e * cost(d, i, i) - kSlack;
}

// Reachability by explicit enumeration of directed simple paths (N <= 7).
inline bool path_exists(const revpref::ChoiceDataset& d, std::size_t from, std::size_t to,
                        double e) {
  const std::size_t n = d.size();
  std::vector<bool> seen(n, false);
  std::function<bool(std::size_t)> walk = [&](std::size_t v) -> bool {
    for (std::size_t w = 0; w < n; ++w) {
      if (w == v || !weak(d, v, w, e)) continue;
      if (w == to) return true;
      if (seen[w]) continue;
      seen[w] = true;
      const bool hit = walk(w);
      seen[w] = false;
      if (hit) return true;
    }
    return false;
  };
  if (from == to && weak(d, from, to, e)) return true;
  seen[from] = true;
  return walk(from);
}

inline bool garp_by_paths(const revpref::ChoiceDataset& d, double e) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (strict(d, j, i, e) && path_exists(d, i, j, e)) return false;
    }
  }
  return true;
}

// Dense GARP check with a textbook Floyd-Warshall, written independently of
// the library's version; fast enough for grid searches.
inline bool garp_dense(const revpref::ChoiceDataset& d, double e) {
  const std::size_t n = d.size();
  std::vector<std::vector<double>> c(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i][j] = cost(d, i, j);
  std::vector<std::vector<char>> r(n, std::vector<char>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      r[i][j] = (i == j) ? (e >= 1.0 - kSlack) : (c[i][j] <= e * c[i][i] + kSlack);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && r[i][j] && c[j][i] < e * c[j][j] - kSlack) return false;
  return true;
}

// Largest grid point e = 1 - k*step that passes GARP.
inline double grid_ccei(const revpref::ChoiceDataset& d, double step = 1e-4) {
  const long steps = std::lround(1.0 / step);
  for (long k = 0; k <= steps; ++k) {
    const double e = 1.0 - static_cast<double>(k) * step;
    if (garp_dense(d, std::max(0.0, e))) return std::max(0.0, e);
  }
  return 0.0;
}

inline std::size_t exhaustive_hmi(const revpref::ChoiceDataset& d) {
  const std::size_t n = d.size();
  std::size_t best = 0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) keep.push_back(i);
    if (keep.size() <= best) continue;
    if (garp_dense(d.subset(keep), 1.0)) best = keep.size();
  }
  return best;
}

// Every simple violating cycle, found by trying each subset in every cyclic
// order that starts at its smallest element. Value is the mean budget share
// given up along the cycle.
inline std::vector<double> exhaustive_cycle_values(const revpref::ChoiceDataset& d) {
  const std::size_t n = d.size();
  std::vector<double> values;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) members.push_back(i);
    if (members.size() < 2) continue;
    std::vector<std::size_t> rest(members.begin() + 1, members.end());
    do {
      std::vector<std::size_t> cyc{members.front()};
      cyc.insert(cyc.end(), rest.begin(), rest.end());
      bool ok = true;
      bool has_strict = false;
      double surplus = 0.0;
      for (std::size_t k = 0; k < cyc.size() && ok; ++k) {
        const std::size_t a = cyc[k];
        const std::size_t b = cyc[(k + 1) % cyc.size()];
        ok = weak(d, a, b, 1.0);
        has_strict = has_strict || strict(d, a, b, 1.0);
        surplus += 1.0 - cost(d, a, b) / cost(d, a, a);
      }
      if (ok && has_strict) values.push_back(surplus / static_cast<double>(cyc.size()));
    } while (std::next_permutation(rest.begin(), rest.end()));
  }
  return values;
}

// Minimum deletion cost via orderings: deleting every relation that points
// backwards in some order leaves an acyclic relation, and an optimal deletion
// leaves only non-strict (zero-cost) cycles. A relation costs its budget
// share 1 - p^i.x^j / p^i.x^i; the total is divided by N.
inline double permutation_mci(const revpref::ChoiceDataset& d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> pos(n);
  double best = std::numeric_limits<double>::infinity();
  do {
    for (std::size_t k = 0; k < n; ++k) pos[order[k]] = k;
    double c = 0.0;
    for (std::size_t i = 0; i < n && c < best; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && pos[j] < pos[i] && weak(d, i, j, 1.0))
          c += std::max(0.0, 1.0 - cost(d, i, j) / cost(d, i, i));
    best = std::min(best, c);
  } while (std::next_permutation(order.begin(), order.end()));
  return best / static_cast<double>(n);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Average ranks (1-based) by direct counting.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double below = 0.0;
    double equal = 0.0;
    for (double y : x) {
      if (y < x[i]) below += 1.0;
      if (y == x[i]) equal += 1.0;
    }
    r[i] = below + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman_by_ranks(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// Classic 1 - 6 sum d^2 / (n (n^2 - 1)); valid without ties.
inline double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// Maximiser of u(a) over a in [0, budget] by golden-section search; `u` must
// be unimodal.
inline double golden_max(const std::function<double(double)>& u, double lo, double hi) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), e = a + phi * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (u(c) > u(e)) {
      b = e;
    } else {
      a = c;
    }
    c = b - phi * (b - a);
    e = a + phi * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace oracle

namespace testing_support {

// Random budget-line data: returns in [0.1, 1], point shares uniform with an
// occasional corner; expenditure 100 per observation, optionally rescaled.
inline revpref::ChoiceDataset random_dataset(revpref::Rng& rng, std::size_t n,
                                             bool random_scale = false) {
  std::vector<revpref::Observation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = rng.uniform(0.1, 1.0);
    const double r = rng.uniform(0.1, 1.0);
    double a = rng.uniform(0.0, 100.0);
    const double u = rng.uniform01();
    if (u < 0.05) a = 0.0;
    if (u > 0.95) a = 100.0;
    const double scale = random_scale ? rng.uniform(0.2, 5.0) : 1.0;
    obs.emplace_back(revpref::PriceVector({scale / m, scale / r}),
                     revpref::Bundle({a * m, (100.0 - a) * r}));
  }
  return revpref::ChoiceDataset(std::move(obs));
}

inline revpref::ChoiceDataset make(std::vector<std::pair<std::vector<double>, std::vector<double>>> rows) {
  std::vector<revpref::Observation> obs;
  for (auto& [p, x] : rows) obs.emplace_back(revpref::PriceVector(p), revpref::Bundle(x));
  return revpref::ChoiceDataset(std::move(obs));
}

// Two crossing corner choices: (p=(1,2), x=(0,2)) and (p=(2,1), x=(2,0)).
inline revpref::ChoiceDataset crossing_pair() {
  return make({{{1, 2}, {0, 2}}, {{2, 1}, {2, 0}}});
}

}  // namespace testing_support
