#include "revpref/task_generation.hpp"

#include <algorithm>
#include <cstdio>

#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/random.hpp"

namespace revpref {

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::risk: return "risk";
    case Domain::time: return "time";
    case Domain::social: return "social";
    case Domain::food: return "food";
  }
  return "risk";
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::baseline: return "baseline";
    case Variant::price_reframed: return "price_reframed";
    case Variant::discrete: return "discrete";
  }
  return "baseline";
}

std::string to_string(ConstraintMode mode) {
  return mode == ConstraintMode::max_at_least_half ? "max_at_least_half" : "max_at_most_half";
}

Domain domain_from_string(std::string_view name) {
  for (Domain d : kAllDomains) {
    if (to_string(d) == name) return d;
  }
  throw UnknownDomain("unknown domain '" + std::string(name) + "'");
}

Variant variant_from_string(std::string_view name) {
  for (Variant v : {Variant::baseline, Variant::price_reframed, Variant::discrete}) {
    if (to_string(v) == name) return v;
  }
  throw InvalidParameter("unknown variant '" + std::string(name) + "'");
}

ConstraintMode constraint_mode_from_string(std::string_view name) {
  if (name == "max_at_least_half") return ConstraintMode::max_at_least_half;
  if (name == "max_at_most_half") return ConstraintMode::max_at_most_half;
  throw InvalidParameter("unknown constraint mode '" + std::string(name) + "'");
}

namespace {

// Grid index 10..100 stands for 0.10..1.00.
double grid_return(Rng& rng) { return static_cast<double>(rng.uniform_int(10, 100)) / 100.0; }

bool accepted(double m, double n, ConstraintMode mode) {
  const double hi = std::max(m, n);
  return mode == ConstraintMode::max_at_least_half ? hi >= 0.5 : hi <= 0.5;
}

std::vector<PointOption> discrete_options(double budget) {
  std::vector<PointOption> options;
  for (std::size_t k = 0; k < kDiscreteOptions; ++k) {
    const double a = budget * static_cast<double>(k) / static_cast<double>(kDiscreteOptions - 1);
    options.push_back({a, budget - a});
  }
  return options;
}

}  // namespace

TaskSheet generate_sheet(Domain domain, Variant variant, std::uint64_t seed, ConstraintMode mode,
                         std::size_t rounds, double budget) {
  if (rounds == 0) throw InvalidParameter("a sheet needs at least one round");
  if (!(budget > 0.0)) throw InvalidParameter("budget must be positive");
  TaskSheet sheet;
  sheet.domain = domain;
  sheet.variant = variant;
  sheet.seed = seed;
  sheet.budget = budget;
  sheet.constraint_mode = mode;
  Rng rng(seed);
  for (std::size_t r = 0; r < rounds; ++r) {
    RoundSpec spec;
    do {
      spec.m = grid_return(rng);
      spec.n = grid_return(rng);
    } while (!accepted(spec.m, spec.n, mode));
    if (variant == Variant::discrete) spec.options = discrete_options(budget);
    sheet.rounds.push_back(std::move(spec));
  }
  return sheet;
}

std::uint64_t trial_seed(std::uint64_t base_seed, Domain domain, std::size_t trial) {
  return derive_seed(derive_seed(base_seed, hash_string(to_string(domain))), trial);
}

std::string trial_id(Domain domain, Variant variant, std::size_t trial) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", trial);
  return to_string(domain) + "-" + to_string(variant) + "-" + buf;
}

std::pair<double, double> option_units(const RoundSpec& round, const PointOption& option) {
  return {option.a * round.m, option.b * round.n};
}

PromptParameters round_to_prompt_parameters(const RoundSpec& round, Variant variant) {
  if (!(round.m > 0.0) || !(round.n > 0.0)) throw InvalidParameter("returns must be positive");
  PromptParameters params;
  switch (variant) {
    case Variant::baseline:
      params.a = format_trimmed(round.m, 2);
      params.b = format_trimmed(round.n, 2);
      break;
    case Variant::price_reframed:
      params.a = format_fixed(1.0 / round.m, 2);
      params.b = format_fixed(1.0 / round.n, 2);
      break;
    case Variant::discrete: {
      params.a = format_trimmed(round.m, 2);
      params.b = format_trimmed(round.n, 2);
      for (std::size_t k = 0; k < round.options.size(); ++k) {
        const auto [ua, ub] = option_units(round, round.options[k]);
        if (k > 0) params.options += k + 1 == round.options.size() ? ", and " : ", ";
        params.options += "(" + format_trimmed(ua, 2) + ", " + format_trimmed(ub, 2) + ")";
      }
      break;
    }
  }
  return params;
}

std::pair<double, double> displayed_prices(const RoundSpec& round, Variant variant) {
  if (variant == Variant::price_reframed) {
    return {round_decimals(1.0 / round.m, 2), round_decimals(1.0 / round.n, 2)};
  }
  return {1.0 / round.m, 1.0 / round.n};
}

Observation observation_for(const RoundSpec& round, Variant variant, const PointOption& points,
                            double budget) {
  const std::vector<double> alloc{points.a, points.b};
  if (variant == Variant::price_reframed) {
    const auto [pa, pb] = displayed_prices(round, variant);
    return points_at_prices(alloc, std::vector<double>{pa, pb}, budget);
  }
  return points_to_units(alloc, std::vector<double>{round.m, round.n}, budget);
}

nlohmann::json sheet_to_json(const TaskSheet& sheet) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : sheet.rounds) {
    nlohmann::json row{{"M", r.m}, {"N", r.n}};
    if (!r.options.empty()) {
      auto& opts = row["options"] = nlohmann::json::array();
      for (const auto& o : r.options) opts.push_back({o.a, o.b});
    }
    rounds.push_back(std::move(row));
  }
  return {{"schema", kSheetSchema},
          {"domain", to_string(sheet.domain)},
          {"variant", to_string(sheet.variant)},
          {"seed", sheet.seed},
          {"budget", sheet.budget},
          {"constraint_mode", to_string(sheet.constraint_mode)},
          {"rounds", std::move(rounds)}};
}

TaskSheet sheet_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("expected a JSON object", 0, "");
  require_schema(doc, kSheetSchema);
  std::string field = "domain";
  try {
    TaskSheet sheet;
    sheet.domain = domain_from_string(doc.at("domain").get<std::string>());
    field = "variant";
    sheet.variant = variant_from_string(doc.at("variant").get<std::string>());
    field = "seed";
    sheet.seed = doc.at("seed").get<std::uint64_t>();
    field = "budget";
    sheet.budget = doc.at("budget").get<double>();
    field = "constraint_mode";
    sheet.constraint_mode =
        constraint_mode_from_string(doc.at("constraint_mode").get<std::string>());
    const auto& rounds = doc.at("rounds");
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      field = "rounds[" + std::to_string(i) + "]";
      RoundSpec r;
      r.m = rounds[i].at("M").get<double>();
      r.n = rounds[i].at("N").get<double>();
      if (!(r.m > 0.0) || !(r.n > 0.0)) throw ParseError("returns must be positive", 0, field);
      if (auto o = rounds[i].find("options"); o != rounds[i].end()) {
        for (const auto& pair : *o) {
          r.options.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
        }
      }
      sheet.rounds.push_back(std::move(r));
    }
    if (sheet.rounds.empty()) throw ParseError("sheet has no rounds", 0, "rounds");
    return sheet;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 0, field);
  } catch (const InvalidParameter& e) {
    throw ParseError(e.what(), 0, field);
  } catch (const UnknownDomain& e) {
    throw ParseError(e.what(), 0, field);
  }
}

void save_sheet(const TaskSheet& sheet, const std::filesystem::path& path) {
  write_text_file(path, sheet_to_json(sheet).dump(2) + "\n");
}

TaskSheet load_sheet(const std::filesystem::path& path) {
  return sheet_from_json(parse_json_text(read_text_file(path)));
}

}  // namespace revpref
