#pragma once

// Budget task sheets: per-round returns (M, N) for the two commodities and,
// for the discrete variant, the 11 point allocations offered.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "revpref/choice_data.hpp"

namespace revpref {

enum class Domain { risk, time, social, food };
enum class Variant { baseline, price_reframed, discrete };
enum class ConstraintMode { max_at_least_half, max_at_most_half };

inline constexpr std::array<Domain, 4> kAllDomains{Domain::risk, Domain::time, Domain::social,
                                                   Domain::food};
inline constexpr char kSheetSchema[] = "revpref-sheet/1";
inline constexpr std::size_t kDefaultRounds = 25;
inline constexpr std::size_t kDiscreteOptions = 11;

std::string to_string(Domain domain);
std::string to_string(Variant variant);
std::string to_string(ConstraintMode mode);
Domain domain_from_string(std::string_view name);  // throws UnknownDomain
Variant variant_from_string(std::string_view name);  // throws InvalidParameter
ConstraintMode constraint_mode_from_string(std::string_view name);  // throws InvalidParameter

// Points given to commodity A and B.
struct PointOption {
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const PointOption&, const PointOption&) = default;
};

struct RoundSpec {
  double m = 0.0;  // units of A per point
  double n = 0.0;  // units of B per point
  std::vector<PointOption> options;  // discrete variant only, A ascending

  friend bool operator==(const RoundSpec&, const RoundSpec&) = default;
};

struct TaskSheet {
  Domain domain = Domain::risk;
  Variant variant = Variant::baseline;
  std::uint64_t seed = 0;
  double budget = kDefaultBudget;
  ConstraintMode constraint_mode = ConstraintMode::max_at_least_half;
  std::vector<RoundSpec> rounds;

  friend bool operator==(const TaskSheet&, const TaskSheet&) = default;
};

// Returns are drawn uniformly from the 0.01 grid on [0.10, 1.00] and redrawn
// until the constraint holds, so every return prints exactly at 2 decimals.
TaskSheet generate_sheet(Domain domain, Variant variant, std::uint64_t seed,
                         ConstraintMode mode = ConstraintMode::max_at_least_half,
                         std::size_t rounds = kDefaultRounds, double budget = kDefaultBudget);

// Seed for trial `trial` of a domain. The variant is not mixed in, so trial k
// faces the same budgets under every variant.
std::uint64_t trial_seed(std::uint64_t base_seed, Domain domain, std::size_t trial);

// "risk-baseline-007".
std::string trial_id(Domain domain, Variant variant, std::size_t trial);

// Strings substituted into the decision question. Baseline shows units per
// point ("0.5"); the reframed variant shows points per unit at 2 decimals
// ("2.00"); the discrete variant shows the option list in units.
struct PromptParameters {
  std::string a;
  std::string b;
  std::string options;  // discrete only: "(0, 20), (5, 18), ..., and (50, 0)"
};

PromptParameters round_to_prompt_parameters(const RoundSpec& round, Variant variant);

// Points-per-unit prices the agent was shown for this round.
std::pair<double, double> displayed_prices(const RoundSpec& round, Variant variant);

// Units of (A, B) an option buys.
std::pair<double, double> option_units(const RoundSpec& round, const PointOption& option);

// The observation recorded for a point allocation under the prices shown.
Observation observation_for(const RoundSpec& round, Variant variant, const PointOption& points,
                            double budget = kDefaultBudget);

nlohmann::json sheet_to_json(const TaskSheet& sheet);
TaskSheet sheet_from_json(const nlohmann::json& doc);
void save_sheet(const TaskSheet& sheet, const std::filesystem::path& path);
TaskSheet load_sheet(const std::filesystem::path& path);

}  // namespace revpref
