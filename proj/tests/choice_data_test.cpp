#include "revpref/choice_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/random.hpp"

namespace fs = std::filesystem;
using namespace revpref;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("revpref_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Observation, CachesExpenditure) {
  auto a = make_observation(PriceVector({1, 2}), Bundle({0, 2}));
  EXPECT_DOUBLE_EQ(a.expenditure(), 4.0);
  auto b = make_observation(PriceVector({2, 1}), Bundle({2, 0}));
  EXPECT_DOUBLE_EQ(b.expenditure(), 4.0);
}

TEST(Observation, RejectsInvalidInputs) {
  EXPECT_THROW(PriceVector({1, -1}), NonPositivePrice);
  EXPECT_THROW(PriceVector({1, 0}), NonPositivePrice);
  EXPECT_THROW(PriceVector({1, NAN}), NonPositivePrice);
  EXPECT_THROW(Bundle({1, -0.5}), InvalidBundle);
  EXPECT_THROW(Bundle({1}), InvalidBundle);
  EXPECT_THROW(make_observation(PriceVector({1, 2, 3}), Bundle({1, 1})), DimensionMismatch);
  EXPECT_THROW(make_observation(PriceVector({1, 2}), Bundle({0, 0})), ZeroExpenditure);
}

TEST(PointsToUnits, WorkedAllocation) {
  const std::vector<double> points{90, 10};
  const std::vector<double> returns{0.8, 0.2};
  auto obs = points_to_units(points, returns);
  EXPECT_NEAR(obs.bundle()[0], 72.0, 1e-12);
  EXPECT_NEAR(obs.bundle()[1], 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(obs.prices()[0], 1.25);
  EXPECT_DOUBLE_EQ(obs.prices()[1], 5.0);
  EXPECT_NEAR(obs.expenditure(), 100.0, 1e-9);
}

TEST(PointsToUnits, CornerAllocation) {
  auto obs = points_to_units(std::vector<double>{100, 0}, std::vector<double>{0.5, 0.5});
  EXPECT_DOUBLE_EQ(obs.bundle()[0], 50.0);
  EXPECT_DOUBLE_EQ(obs.bundle()[1], 0.0);
  EXPECT_DOUBLE_EQ(obs.prices()[0], 2.0);
  EXPECT_DOUBLE_EQ(obs.prices()[1], 2.0);
}

TEST(PointsToUnits, RejectsBadAllocations) {
  const std::vector<double> returns{0.5, 0.5};
  EXPECT_THROW(points_to_units(std::vector<double>{60, 50}, returns), BudgetMismatch);
  EXPECT_THROW(points_to_units(std::vector<double>{110, -10}, returns), NegativeAllocation);
  EXPECT_THROW(points_to_units(std::vector<double>{50, 50}, std::vector<double>{0.5, 0.0}),
               NonPositivePrice);
}

TEST(PointsToUnits, ExpenditureEqualsBudgetForAnyAllocation) {
  Rng rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const double budget = trial % 2 ? 100.0 : rng.uniform(1.0, 1000.0);
    const double a = rng.uniform(0.0, budget);
    const std::vector<double> points{a, budget - a};
    const std::vector<double> returns{rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
    const auto obs = points_to_units(points, returns, budget);
    EXPECT_NEAR(obs.expenditure(), budget, 1e-9 * budget);
    const std::vector<double> shown{round_decimals(1.0 / returns[0], 2),
                                    round_decimals(1.0 / returns[1], 2)};
    EXPECT_NEAR(points_at_prices(points, shown, budget).expenditure(), budget, 1e-9 * budget);
  }
}

TEST(ChoiceDataset, RequiresObservationsWithSharedDimension) {
  EXPECT_THROW(ChoiceDataset({}), EmptyDataset);
  std::vector<Observation> mixed{make_observation(PriceVector({1, 1}), Bundle({1, 1})),
                                 make_observation(PriceVector({1, 1, 1}), Bundle({1, 1, 1}))};
  EXPECT_THROW(ChoiceDataset(std::move(mixed)), DimensionMismatch);
}

TEST(DatasetFile, LoadsTwentyFiveRows) {
  const auto dir = temp_dir("load25");
  nlohmann::json doc{{"schema", "revpref-dataset/1"},
                     {"K", 2},
                     {"metadata", {{"trial_id", "t1"}, {"domain", "risk"}, {"variant", "baseline"}}}};
  for (int i = 0; i < 25; ++i) {
    doc["observations"].push_back({{"prices", {1.25, 2.5}}, {"bundle", {40, 20}}});
  }
  std::ofstream(dir / "d.json") << doc.dump();
  const auto d = load_dataset(dir / "d.json");
  EXPECT_EQ(d.size(), 25u);
  EXPECT_EQ(d.metadata().domain, "risk");
  EXPECT_DOUBLE_EQ(d[3].expenditure(), 100.0);
}

TEST(DatasetFile, RejectsWrongArity) {
  const auto dir = temp_dir("arity");
  std::ofstream(dir / "d.json")
      << R"({"schema":"revpref-dataset/1","K":2,"observations":[
            {"prices":[1,2],"bundle":[1,1]},
            {"prices":[1,2,3],"bundle":[1,1]}]})";
  try {
    load_dataset(dir / "d.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "observations[1].prices");
  }
}

TEST(DatasetFile, RejectsEmptyInputs) {
  const auto dir = temp_dir("empty");
  std::ofstream(dir / "empty.json").close();
  EXPECT_THROW(load_dataset(dir / "empty.json"), ParseError);
  std::ofstream(dir / "none.json") << R"({"schema":"revpref-dataset/1","K":2,"observations":[]})";
  EXPECT_THROW(load_dataset(dir / "none.json"), ParseError);
}

TEST(DatasetFile, ReportsSyntaxErrorLine) {
  const auto dir = temp_dir("syntax");
  std::ofstream(dir / "bad.json") << "{\n  \"schema\": \"revpref-dataset/1\",\n  \"K\": ,\n}";
  try {
    load_dataset(dir / "bad.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(DatasetFile, RejectsOtherSchemaVersions) {
  const auto dir = temp_dir("schema");
  std::ofstream(dir / "d.json")
      << R"({"schema":"revpref-dataset/2","K":2,"observations":[{"prices":[1,2],"bundle":[1,1]}]})";
  EXPECT_THROW(load_dataset(dir / "d.json"), SchemaVersionMismatch);
  EXPECT_THROW(load_dataset(dir / "missing.json"), MissingInput);
}

// Values with at most 12 significant digits survive save/load bit for bit,
// and saving is idempotent for arbitrary doubles.
TEST(DatasetFile, RoundTripProperty) {
  const auto dir = temp_dir("roundtrip");
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(0, 24);
    const std::size_t k = 2 + rng.uniform_int(0, 2);
    std::vector<Observation> raw;
    std::vector<Observation> canonical;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p, x, pc, xc;
      for (std::size_t g = 0; g < k; ++g) {
        p.push_back(rng.uniform(0.01, 50.0));
        x.push_back(rng.uniform01() < 0.2 ? 0.0 : rng.uniform(0.0, 500.0));
      }
      x[0] += 1.0;
      for (double v : p) pc.push_back(round_sig(v, 12));
      for (double v : x) xc.push_back(round_sig(v, 12));
      raw.emplace_back(PriceVector(p), Bundle(x));
      canonical.emplace_back(PriceVector(pc), Bundle(xc));
    }
    const DatasetMetadata meta{"trial-" + std::to_string(trial), "food", "discrete"};
    const ChoiceDataset exact(canonical, meta);
    save_dataset(exact, dir / "a.json");
    EXPECT_EQ(load_dataset(dir / "a.json"), exact);

    const ChoiceDataset messy(raw, meta);
    save_dataset(messy, dir / "b.json");
    const auto once = read_text_file(dir / "b.json");
    save_dataset(load_dataset(dir / "b.json"), dir / "c.json");
    EXPECT_EQ(read_text_file(dir / "c.json"), once);
  }
}
