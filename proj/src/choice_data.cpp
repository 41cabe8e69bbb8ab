#include "revpref/choice_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "revpref/errors.hpp"
#include "revpref/format.hpp"

namespace revpref {

namespace {

constexpr int kSignificantDigits = 12;

std::string describe(std::span<const double> values) {
  std::string out = "(";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_sig(values[i], 12);
  }
  return out + ")";
}

nlohmann::json canonical_array(std::span<const double> values) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : values) arr.push_back(round_sig(v, kSignificantDigits));
  return arr;
}

std::vector<double> read_numbers(const nlohmann::json& node, std::size_t expected,
                                 const std::string& field) {
  if (!node.is_array()) throw ParseError("expected an array", 0, field);
  if (node.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " values, found " +
                         std::to_string(node.size()),
                     0, field);
  }
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t k = 0; k < node.size(); ++k) {
    if (!node[k].is_number()) {
      throw ParseError("expected a number", 0, field + "[" + std::to_string(k) + "]");
    }
    out.push_back(node[k].get<double>());
  }
  return out;
}

std::string string_or_empty(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError("expected a string", 0, std::string("metadata.") + key);
  return it->get<std::string>();
}

}  // namespace

Bundle::Bundle(std::vector<double> quantities) : quantities_(std::move(quantities)) {
  if (quantities_.size() < 2) {
    throw InvalidBundle("a bundle needs at least two commodities");
  }
  for (double q : quantities_) {
    if (!std::isfinite(q) || q < 0.0) {
      throw InvalidBundle("bundle quantities must be finite and non-negative: " +
                          describe(quantities_));
    }
  }
}

PriceVector::PriceVector(std::vector<double> prices) : prices_(std::move(prices)) {
  if (prices_.size() < 2) {
    throw DimensionMismatch("a price vector needs at least two commodities");
  }
  for (double p : prices_) {
    if (!std::isfinite(p) || p <= 0.0) {
      throw NonPositivePrice("prices must be finite and strictly positive: " +
                             describe(prices_));
    }
  }
}

PriceVector PriceVector::scaled(double factor) const {
  std::vector<double> out(prices_);
  for (double& p : out) p *= factor;
  return PriceVector(std::move(out));
}

double dot(const PriceVector& prices, const Bundle& bundle) {
  if (prices.size() != bundle.size()) {
    throw DimensionMismatch("price vector has " + std::to_string(prices.size()) +
                            " entries, bundle has " + std::to_string(bundle.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < prices.size(); ++k) sum += prices[k] * bundle[k];
  return sum;
}

Observation::Observation(PriceVector prices, Bundle bundle)
    : prices_(std::move(prices)), bundle_(std::move(bundle)), expenditure_(dot(prices_, bundle_)) {
  if (!(expenditure_ > 0.0)) {
    throw ZeroExpenditure("observation spends nothing: bundle " +
                          describe(bundle_.quantities()));
  }
}

Observation make_observation(PriceVector prices, Bundle bundle) {
  return Observation(std::move(prices), std::move(bundle));
}

namespace {

void check_allocation(std::span<const double> points, std::size_t goods, double budget) {
  if (points.size() != goods) {
    throw DimensionMismatch("allocation has " + std::to_string(points.size()) +
                            " entries for " + std::to_string(goods) + " commodities");
  }
  double total = 0.0;
  for (double a : points) {
    if (!std::isfinite(a) || a < 0.0) {
      throw NegativeAllocation("allocations must be non-negative: " + describe(points));
    }
    total += a;
  }
  if (std::abs(total - budget) > kBudgetTolerance) {
    throw BudgetMismatch("allocation " + describe(points) + " sums to " +
                         format_sig(total, 12) + ", budget is " + format_sig(budget, 12));
  }
}

}  // namespace

Observation points_to_units(std::span<const double> points,
                            std::span<const double> returns_per_point, double budget) {
  check_allocation(points, returns_per_point.size(), budget);
  std::vector<double> prices;
  std::vector<double> quantities;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double r = returns_per_point[k];
    if (!std::isfinite(r) || r <= 0.0) {
      throw NonPositivePrice("returns per point must be strictly positive: " +
                             describe(returns_per_point));
    }
    prices.push_back(1.0 / r);
    quantities.push_back(points[k] * r);
  }
  return Observation(PriceVector(std::move(prices)), Bundle(std::move(quantities)));
}

Observation points_at_prices(std::span<const double> points,
                             std::span<const double> unit_prices, double budget) {
  check_allocation(points, unit_prices.size(), budget);
  PriceVector prices(std::vector<double>(unit_prices.begin(), unit_prices.end()));
  std::vector<double> quantities;
  for (std::size_t k = 0; k < points.size(); ++k) {
    quantities.push_back(points[k] / prices[k]);
  }
  return Observation(std::move(prices), Bundle(std::move(quantities)));
}

ChoiceDataset::ChoiceDataset(std::vector<Observation> observations, DatasetMetadata metadata)
    : observations_(std::move(observations)), metadata_(std::move(metadata)) {
  if (observations_.empty()) throw EmptyDataset("a dataset needs at least one observation");
  const std::size_t k = observations_.front().bundle().size();
  for (std::size_t i = 1; i < observations_.size(); ++i) {
    if (observations_[i].bundle().size() != k) {
      throw DimensionMismatch("observation " + std::to_string(i) + " has " +
                              std::to_string(observations_[i].bundle().size()) +
                              " goods, expected " + std::to_string(k));
    }
  }
}

ChoiceDataset ChoiceDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Observation> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(observations_.at(i));
  return ChoiceDataset(std::move(picked), metadata_);
}

nlohmann::json dataset_to_json(const ChoiceDataset& dataset) {
  nlohmann::json doc;
  doc["schema"] = kDatasetSchema;
  doc["K"] = dataset.goods();
  doc["metadata"] = {{"trial_id", dataset.metadata().trial_id},
                     {"domain", dataset.metadata().domain},
                     {"variant", dataset.metadata().variant}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& obs : dataset.observations()) {
    rows.push_back({{"prices", canonical_array(obs.prices().prices())},
                    {"bundle", canonical_array(obs.bundle().quantities())}});
  }
  doc["observations"] = std::move(rows);
  return doc;
}

ChoiceDataset dataset_from_json(const nlohmann::json& doc, const std::string& where) {
  const std::string prefix = where.empty() ? "" : where + ".";
  if (!doc.is_object()) throw ParseError("expected a JSON object", 0, where);
  require_schema(doc, kDatasetSchema);

  auto k_it = doc.find("K");
  if (k_it == doc.end() || !k_it->is_number_integer() || k_it->get<long long>() < 2) {
    throw ParseError("K must be an integer >= 2", 0, prefix + "K");
  }
  const auto goods = static_cast<std::size_t>(k_it->get<long long>());

  DatasetMetadata meta;
  if (auto m = doc.find("metadata"); m != doc.end() && m->is_object()) {
    meta.trial_id = string_or_empty(*m, "trial_id");
    meta.domain = string_or_empty(*m, "domain");
    meta.variant = string_or_empty(*m, "variant");
  }

  auto rows = doc.find("observations");
  if (rows == doc.end() || !rows->is_array()) {
    throw ParseError("missing observations array", 0, prefix + "observations");
  }
  if (rows->empty()) {
    throw ParseError("a dataset needs at least one observation (N >= 1)", 0,
                     prefix + "observations");
  }
  std::vector<Observation> observations;
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const std::string field = prefix + "observations[" + std::to_string(i) + "]";
    const auto& row = (*rows)[i];
    if (!row.is_object() || !row.contains("prices") || !row.contains("bundle")) {
      throw ParseError("expected {prices, bundle}", 0, field);
    }
    auto prices = read_numbers(row["prices"], goods, field + ".prices");
    auto bundle = read_numbers(row["bundle"], goods, field + ".bundle");
    try {
      observations.emplace_back(PriceVector(std::move(prices)), Bundle(std::move(bundle)));
    } catch (const Error& e) {
      throw ParseError(e.what(), 0, field);
    }
  }
  return ChoiceDataset(std::move(observations), std::move(meta));
}

void save_dataset(const ChoiceDataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_json(dataset).dump(2) + "\n");
}

ChoiceDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(parse_json_text(read_text_file(path)));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
    throw ParseError(e.what(), line, "");
  }
}

void require_schema(const nlohmann::json& doc, const std::string& expected) {
  auto it = doc.find("schema");
  if (it == doc.end() || !it->is_string()) {
    throw ParseError("missing schema tag", 0, "schema");
  }
  if (it->get<std::string>() != expected) {
    throw SchemaVersionMismatch(expected, it->get<std::string>());
  }
}

}  // namespace revpref
