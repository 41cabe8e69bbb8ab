#pragma once

// Prices, bundles, observations and datasets.
//
// Prices are points per unit of each commodity, so for the budgetary task the
// expenditure p.x of every valid choice equals the point budget.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace revpref {

inline constexpr double kDefaultBudget = 100.0;
inline constexpr double kBudgetTolerance = 1e-6;
inline constexpr char kDatasetSchema[] = "revpref-dataset/1";

// Quantities of K >= 2 commodities; finite and non-negative.
class Bundle {
 public:
  explicit Bundle(std::vector<double> quantities);

  std::span<const double> quantities() const { return quantities_; }
  std::size_t size() const { return quantities_.size(); }
  double operator[](std::size_t k) const { return quantities_[k]; }

  friend bool operator==(const Bundle&, const Bundle&) = default;

 private:
  std::vector<double> quantities_;
};

// Points per unit of K >= 2 commodities; finite and strictly positive.
class PriceVector {
 public:
  explicit PriceVector(std::vector<double> prices);

  std::span<const double> prices() const { return prices_; }
  std::size_t size() const { return prices_.size(); }
  double operator[](std::size_t k) const { return prices_[k]; }

  PriceVector scaled(double factor) const;

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

 private:
  std::vector<double> prices_;
};

// p . x; throws DimensionMismatch.
double dot(const PriceVector& prices, const Bundle& bundle);

// One (prices, chosen bundle) pair with its cached expenditure.
class Observation {
 public:
  Observation(PriceVector prices, Bundle bundle);

  const PriceVector& prices() const { return prices_; }
  const Bundle& bundle() const { return bundle_; }
  double expenditure() const { return expenditure_; }

  // Cost of `other` at this observation's prices.
  double cost_of(const Bundle& other) const { return dot(prices_, other); }

  friend bool operator==(const Observation& a, const Observation& b) {
    return a.prices_ == b.prices_ && a.bundle_ == b.bundle_;
  }

 private:
  PriceVector prices_;
  Bundle bundle_;
  double expenditure_;
};

// Throws DimensionMismatch, NonPositivePrice or ZeroExpenditure.
Observation make_observation(PriceVector prices, Bundle bundle);

// Converts a point allocation into an observation: each point spent on good k
// buys returns[k] units, so the unit price is 1 / returns[k].
// Throws NegativeAllocation, BudgetMismatch, NonPositivePrice.
Observation points_to_units(std::span<const double> points,
                            std::span<const double> returns_per_point,
                            double budget = kDefaultBudget);

// Same conversion when the agent was shown unit prices (points per unit)
// directly; quantities are points / price.
Observation points_at_prices(std::span<const double> points,
                             std::span<const double> unit_prices,
                             double budget = kDefaultBudget);

struct DatasetMetadata {
  std::string trial_id;
  std::string domain;
  std::string variant;

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

// Ordered observations of one subject/trial; N >= 1, all with the same K.
class ChoiceDataset {
 public:
  explicit ChoiceDataset(std::vector<Observation> observations,
                         DatasetMetadata metadata = {});

  std::size_t size() const { return observations_.size(); }
  std::size_t goods() const { return observations_.front().bundle().size(); }
  const std::vector<Observation>& observations() const { return observations_; }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  const DatasetMetadata& metadata() const { return metadata_; }

  // Restriction to the given observation indices, in the given order.
  ChoiceDataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const ChoiceDataset&, const ChoiceDataset&) = default;

 private:
  std::vector<Observation> observations_;
  DatasetMetadata metadata_;
};

// JSON form used both for standalone dataset files and embedded in trial
// records. Numbers are canonicalised to 12 significant digits.
nlohmann::json dataset_to_json(const ChoiceDataset& dataset);
// `where` prefixes field paths in ParseError messages.
ChoiceDataset dataset_from_json(const nlohmann::json& doc,
                                const std::string& where = "");

void save_dataset(const ChoiceDataset& dataset, const std::filesystem::path& path);
// Throws ParseError or SchemaVersionMismatch (MissingInput if absent).
ChoiceDataset load_dataset(const std::filesystem::path& path);

// Helpers shared by all stage-file readers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
// Parses `text`, mapping syntax errors to ParseError with a line number.
nlohmann::json parse_json_text(const std::string& text);
void require_schema(const nlohmann::json& doc, const std::string& expected);

}  // namespace revpref
