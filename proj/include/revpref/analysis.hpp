#pragma once

// Aggregate analysis over scored trials: random-choice power simulation,
// demand diagnostics, t-tests against a benchmark, and the report files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "revpref/choice_data.hpp"
#include "revpref/indices.hpp"
#include "revpref/task_generation.hpp"

namespace revpref {

// Mean CCEI of human subjects in budget experiments (range 0.81 to 0.99).
inline constexpr double kHumanBenchmarkCcei = 0.918;

inline constexpr char kPowerSchema[] = "revpref-power/1";
inline constexpr char kSummarySchema[] = "revpref-summary/1";

// Ranks 1..n with ties sharing the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman's rho as the Pearson correlation of average ranks. nullopt when
// either side has fewer than two distinct values. Throws DimensionMismatch
// when the lengths differ.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of y on x; nullopt when x is constant.
std::optional<LinearFit> least_squares(std::span<const double> x, std::span<const double> y);

struct DemandPoint {
  double ln_price_ratio = 0.0;     // ln(p_A / p_B)
  double ln_quantity_ratio = 0.0;  // ln(x_A / x_B) after the corner shift
  double quantity_share = 0.0;     // x_A / (x_A + x_B), unshifted
};

struct DemandDiagnostics {
  DatasetMetadata metadata;
  std::optional<double> spearman_rho;  // nullopt flags an undefined correlation
  std::vector<DemandPoint> points;
  std::size_t corner_adjusted_count = 0;
  std::optional<LinearFit> fit;  // quantity_share on ln_price_ratio
};

// Requires K = 2 (DimensionMismatch otherwise). A zero quantity is replaced
// by 0.001 * expenditure / price before logs are taken.
DemandDiagnostics demand_diagnostics(const ChoiceDataset& dataset);

enum class TestKind { one_sample, two_sample_welch };

std::string to_string(TestKind kind);

struct BenchmarkComparison {
  TestKind kind = TestKind::one_sample;
  // Labels carried into the report; free-form.
  std::string domain;
  std::string index;
  std::string group;  // e.g. variant
  std::string other;  // second variant, or "benchmark"
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
  // Benchmark value (one-sample) or the second sample's statistics (Welch).
  double benchmark = 0.0;
  double other_sd = 0.0;
  std::size_t other_n = 0;
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Two-sided one-sample t-test of mean(values) = benchmark. Throws
// InsufficientData for n < 2 and InvalidParameter for non-finite input.
// With zero spread, t is 0 (p = 1) when the mean equals the benchmark and
// infinite (p = 0) otherwise.
BenchmarkComparison compare_to_benchmark(std::span<const double> values,
                                         double benchmark = kHumanBenchmarkCcei);

// Two-sided Welch test of equal means, with Welch-Satterthwaite degrees of
// freedom; `mean`/`sd`/`n` describe a and `benchmark`/`other_sd`/`other_n`
// describe b.
BenchmarkComparison welch_test(std::span<const double> a, std::span<const double> b);

// Quantile of Student's t with `df` degrees of freedom.
double t_quantile(double df, double probability);

// Scores `draws` uniform-random trials on the sheet's budgets: the
// random_uniform agent answers every round through the usual prompt and reply
// path. Draw d uses trial id "bronars-<d>" so results do not depend on
// `concurrency`.
std::vector<IndexReport> bronars_simulation(const TaskSheet& sheet, std::size_t draws,
                                            std::uint64_t seed, std::size_t concurrency = 0,
                                            const IndexOptions& options = {});

struct PowerSet {
  Domain domain = Domain::risk;
  Variant variant = Variant::baseline;
  std::uint64_t sheet_seed = 0;
  std::uint64_t seed = 0;
  std::vector<IndexReport> reports;
};

nlohmann::json power_to_json(const PowerSet& power);
PowerSet power_from_json(const nlohmann::json& doc);

struct CdfPoint {
  double value = 0.0;
  double cdf = 0.0;
};

// Right-continuous step data: one point per distinct value, ascending, with
// the fraction of values <= it. The last point has cdf 1.
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);
std::string cdf_csv(const std::vector<CdfPoint>& cdf);

struct SummaryRow {
  std::string domain;
  std::string variant;
  std::string index;
  std::size_t n = 0;
  std::size_t excluded = 0;  // undefined values left out of the mean
  double mean = 0.0;
  double sd = 0.0;
  double ci_half_width = 0.0;  // t(n-1, 0.975) * sd / sqrt(n); 0 when n < 2
};

// Index values of a report by column name: ccei, hmi_fraction, mpi_mean, mci.
inline constexpr const char* kReportIndices[] = {"ccei", "hmi_fraction", "mpi_mean", "mci"};
double index_value(const IndexReport& report, const std::string& index);

// One-sample CCEI tests against the benchmark for every (domain, variant)
// with at least two trials, then per domain a Welch CCEI test of baseline
// against each other variant present.
std::vector<BenchmarkComparison> standard_comparisons(const std::vector<IndexReport>& reports,
                                                      double benchmark = kHumanBenchmarkCcei);

struct ReportInputs {
  std::vector<IndexReport> reports;
  std::vector<DemandDiagnostics> diagnostics;
  std::vector<BenchmarkComparison> comparisons;
  std::vector<PowerSet> power;
};

// Writes into out_dir (created if needed):
//   {domain}_{variant}_{index}.cdf.csv  per index, plus _spearman and, with
//                                        power data, _ccei_random
//   demand_points.csv, demand_fits.csv
//   summary.csv, summary.json, comparisons.csv, summary.txt
// Output depends only on the inputs, not on their order.
void emit_report(const ReportInputs& inputs, const std::filesystem::path& out_dir);

std::vector<SummaryRow> summarize(const ReportInputs& inputs);

}  // namespace revpref
