#include "revpref/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "revpref/agents.hpp"
#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/harness.hpp"
#include "revpref/prompts.hpp"

namespace revpref {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
// Works on deviations from the first value so constant input gives exactly 0.
double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  std::vector<double> d;
  for (double x : v) d.push_back(x - v[0]);
  const double m = mean_of(d);
  double ss = 0.0;
  for (double x : d) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// mean(v) - ref, summed as deviations so it is exactly 0 when every value is ref.
double mean_minus(std::span<const double> v, double ref) {
  double s = 0.0;
  for (double x : v) s += x - ref;
  return s / static_cast<double>(v.size());
}

void require_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidParameter("t-test input must be finite");
  }
}

double two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

std::string num(double v) { return format_sig(v, 12); }

// Empty for undefined values so spreadsheets read them as missing.
std::string opt_num(std::optional<double> v) { return v ? num(*v) : ""; }

nlohmann::json json_num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig(v, 12);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

using GroupKey = std::pair<std::string, std::string>;  // domain, variant

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("spearman: inputs differ in length");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<LinearFit> least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("least_squares: inputs differ in length");
  if (x.empty()) return std::nullopt;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

DemandDiagnostics demand_diagnostics(const ChoiceDataset& dataset) {
  if (dataset.goods() != 2) throw DimensionMismatch("demand diagnostics need two goods");
  DemandDiagnostics out;
  out.metadata = dataset.metadata();
  std::vector<double> lp, lq, share;
  for (const auto& obs : dataset.observations()) {
    const auto& p = obs.prices();
    const auto& x = obs.bundle();
    const double shift = 0.001 * obs.expenditure();
    double xa = x[0], xb = x[1];
    if (xa == 0.0 || xb == 0.0) ++out.corner_adjusted_count;
    if (xa == 0.0) xa = shift / p[0];
    if (xb == 0.0) xb = shift / p[1];
    DemandPoint pt;
    pt.ln_price_ratio = std::log(p[0] / p[1]);
    pt.ln_quantity_ratio = std::log(xa / xb);
    pt.quantity_share = x[0] / (x[0] + x[1]);
    out.points.push_back(pt);
    lp.push_back(pt.ln_price_ratio);
    lq.push_back(pt.ln_quantity_ratio);
    share.push_back(pt.quantity_share);
  }
  out.spearman_rho = spearman(lq, lp);
  out.fit = least_squares(lp, share);
  return out;
}

std::string to_string(TestKind kind) {
  return kind == TestKind::one_sample ? "one_sample" : "two_sample_welch";
}

BenchmarkComparison compare_to_benchmark(std::span<const double> values, double benchmark) {
  if (values.size() < 2) throw InsufficientData("one-sample t-test needs at least two values");
  require_finite(values);
  if (!std::isfinite(benchmark)) throw InvalidParameter("benchmark must be finite");
  BenchmarkComparison c;
  c.kind = TestKind::one_sample;
  c.other = "benchmark";
  c.n = values.size();
  c.mean = mean_of(values);
  c.sd = sd_of(values);
  c.benchmark = benchmark;
  c.df = static_cast<double>(c.n - 1);
  const double se = c.sd / std::sqrt(static_cast<double>(c.n));
  const double diff = mean_minus(values, benchmark);
  if (se == 0.0) {
    c.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  } else {
    c.t = diff / se;
  }
  c.p_value = two_sided_p(c.t, c.df);
  return c;
}

BenchmarkComparison welch_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InsufficientData("Welch t-test needs two values per sample");
  require_finite(a);
  require_finite(b);
  BenchmarkComparison c;
  c.kind = TestKind::two_sample_welch;
  c.n = a.size();
  c.mean = mean_of(a);
  c.sd = sd_of(a);
  c.other_n = b.size();
  c.benchmark = mean_of(b);
  c.other_sd = sd_of(b);
  const double va = c.sd * c.sd / static_cast<double>(c.n);
  const double vb = c.other_sd * c.other_sd / static_cast<double>(c.other_n);
  const double diff = mean_minus(a, a[0]) - mean_minus(b, a[0]);
  if (va + vb == 0.0) {
    c.df = static_cast<double>(c.n + c.other_n - 2);
    c.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  } else {
    c.df = (va + vb) * (va + vb) /
           (va * va / static_cast<double>(c.n - 1) + vb * vb / static_cast<double>(c.other_n - 1));
    c.t = diff / std::sqrt(va + vb);
  }
  c.p_value = two_sided_p(c.t, c.df);
  return c;
}

double t_quantile(double df, double probability) {
  if (!(df > 0.0)) throw InvalidParameter("degrees of freedom must be positive");
  if (!(probability > 0.0 && probability < 1.0)) throw InvalidParameter("probability must lie in (0, 1)");
  return boost::math::quantile(boost::math::students_t(df), probability);
}

std::vector<IndexReport> bronars_simulation(const TaskSheet& sheet, std::size_t draws,
                                            std::uint64_t seed, std::size_t concurrency,
                                            const IndexOptions& options) {
  if (draws == 0) throw InvalidParameter("draws must be at least 1");
  if (concurrency == 0) concurrency = std::max(1u, std::thread::hardware_concurrency());
  const auto script = build_prompts(sheet);
  const auto agent = random_uniform_agent(seed);
  RetryPolicy policy;
  std::vector<IndexReport> out(draws);
  parallel_for(draws, concurrency, [&](std::size_t d) {
    TrialOptions opts;
    opts.trial_id = "bronars-" + std::to_string(d);
    opts.trial_index = d;
    opts.stateless = true;
    opts.ask_comprehension = false;
    const auto record = run_trial(sheet, script, *agent, policy, opts);
    const auto dataset = trial_dataset(record, sheet);
    if (!dataset) throw Error("random agent produced no valid round in " + opts.trial_id);
    out[d] = score_all(*dataset, options);
  });
  return out;
}

nlohmann::json power_to_json(const PowerSet& power) {
  auto reports = nlohmann::json::array();
  for (const auto& r : power.reports) reports.push_back(report_to_json(r));
  return {{"schema", kPowerSchema},
          {"domain", to_string(power.domain)},
          {"variant", to_string(power.variant)},
          {"sheet_seed", power.sheet_seed},
          {"seed", power.seed},
          {"draws", power.reports.size()},
          {"reports", reports}};
}

PowerSet power_from_json(const nlohmann::json& doc) {
  require_schema(doc, kPowerSchema);
  PowerSet p;
  try {
    p.domain = domain_from_string(doc.at("domain").get<std::string>());
    p.variant = variant_from_string(doc.at("variant").get<std::string>());
    p.sheet_seed = doc.at("sheet_seed").get<std::uint64_t>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& r : doc.at("reports")) p.reports.push_back(report_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 0, "power");
  } catch (const UnknownDomain& e) {
    throw ParseError(e.what(), 0, "domain");
  } catch (const InvalidParameter& e) {
    throw ParseError(e.what(), 0, "variant");
  }
  return p;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  if (!out.empty()) out.back().cdf = 1.0;
  return out;
}

std::string cdf_csv(const std::vector<CdfPoint>& cdf) {
  std::string out = "value,cdf\n";
  for (const auto& p : cdf) out += num(p.value) + "," + num(p.cdf) + "\n";
  return out;
}

double index_value(const IndexReport& report, const std::string& index) {
  if (index == "ccei") return report.ccei;
  if (index == "hmi_fraction") return report.hmi_fraction;
  if (index == "mpi_mean") return report.mpi_mean;
  if (index == "mci") return report.mci;
  throw InvalidParameter("unknown index '" + index + "'");
}

std::vector<BenchmarkComparison> standard_comparisons(const std::vector<IndexReport>& reports,
                                                      double benchmark) {
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& r : reports) groups[{r.metadata.domain, r.metadata.variant}].push_back(r.ccei);
  for (auto& [key, v] : groups) std::sort(v.begin(), v.end());

  std::vector<BenchmarkComparison> out;
  for (const auto& [key, v] : groups) {
    if (v.size() < 2) continue;
    auto c = compare_to_benchmark(v, benchmark);
    c.domain = key.first;
    c.index = "ccei";
    c.group = key.second;
    out.push_back(c);
  }
  for (const auto& [key, v] : groups) {
    if (key.second == "baseline" || v.size() < 2) continue;
    const auto base = groups.find({key.first, "baseline"});
    if (base == groups.end() || base->second.size() < 2) continue;
    auto c = welch_test(base->second, v);
    c.domain = key.first;
    c.index = "ccei";
    c.group = "baseline";
    c.other = key.second;
    out.push_back(c);
  }
  return out;
}

namespace {

SummaryRow make_row(const GroupKey& key, std::string index, std::vector<double> values,
                    std::size_t excluded) {
  std::sort(values.begin(), values.end());
  SummaryRow row;
  row.domain = key.first;
  row.variant = key.second;
  row.index = std::move(index);
  row.n = values.size();
  row.excluded = excluded;
  row.mean = values.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(values);
  row.sd = sd_of(values);
  if (row.n >= 2) {
    row.ci_half_width = t_quantile(static_cast<double>(row.n - 1), 0.975) * row.sd /
                        std::sqrt(static_cast<double>(row.n));
  }
  return row;
}

}  // namespace

std::vector<SummaryRow> summarize(const ReportInputs& inputs) {
  std::map<GroupKey, std::vector<const IndexReport*>> by_group;
  for (const auto& r : inputs.reports) by_group[{r.metadata.domain, r.metadata.variant}].push_back(&r);
  std::map<GroupKey, std::pair<std::vector<double>, std::size_t>> rho;
  for (const auto& d : inputs.diagnostics) {
    auto& slot = rho[{d.metadata.domain, d.metadata.variant}];
    if (d.spearman_rho) {
      slot.first.push_back(*d.spearman_rho);
    } else {
      ++slot.second;
    }
  }
  std::map<GroupKey, std::vector<double>> random;
  for (const auto& p : inputs.power) {
    auto& v = random[{to_string(p.domain), to_string(p.variant)}];
    for (const auto& r : p.reports) v.push_back(r.ccei);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : by_group) {
    for (const char* index : kReportIndices) {
      std::vector<double> v;
      for (const auto* r : group) v.push_back(index_value(*r, index));
      rows.push_back(make_row(key, index, std::move(v), 0));
    }
  }
  for (const auto& [key, slot] : rho) rows.push_back(make_row(key, "spearman", slot.first, slot.second));
  for (const auto& [key, v] : random) rows.push_back(make_row(key, "ccei_random", v, 0));
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return std::tie(a.domain, a.variant, a.index) < std::tie(b.domain, b.variant, b.index);
  });
  return rows;
}

void emit_report(const ReportInputs& inputs, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  const auto rows = summarize(inputs);

  // CDF tables, one per summary row with data.
  std::map<std::string, std::vector<double>> cdf_values;
  for (const auto& r : inputs.reports) {
    for (const char* index : kReportIndices) {
      cdf_values[r.metadata.domain + "_" + r.metadata.variant + "_" + index].push_back(
          index_value(r, index));
    }
  }
  for (const auto& d : inputs.diagnostics) {
    if (d.spearman_rho) {
      cdf_values[d.metadata.domain + "_" + d.metadata.variant + "_spearman"].push_back(*d.spearman_rho);
    }
  }
  for (const auto& p : inputs.power) {
    auto& v = cdf_values[to_string(p.domain) + "_" + to_string(p.variant) + "_ccei_random"];
    for (const auto& r : p.reports) v.push_back(r.ccei);
  }
  for (const auto& [stem, values] : cdf_values) {
    write_text_file(out_dir / (stem + ".cdf.csv"), cdf_csv(empirical_cdf(values)));
  }

  // Demand scatter points and per-trial fitted lines.
  std::vector<const DemandDiagnostics*> diags;
  for (const auto& d : inputs.diagnostics) diags.push_back(&d);
  std::sort(diags.begin(), diags.end(), [](const DemandDiagnostics* a, const DemandDiagnostics* b) {
    return std::tie(a->metadata.domain, a->metadata.variant, a->metadata.trial_id) <
           std::tie(b->metadata.domain, b->metadata.variant, b->metadata.trial_id);
  });
  std::string points = "trial_id,domain,variant,round,ln_price_ratio,ln_quantity_ratio,quantity_share\n";
  std::string fits = "trial_id,domain,variant,points,corner_adjusted,spearman_rho,slope,intercept\n";
  for (const auto* d : diags) {
    const auto prefix = d->metadata.trial_id + "," + d->metadata.domain + "," + d->metadata.variant + ",";
    for (std::size_t i = 0; i < d->points.size(); ++i) {
      const auto& p = d->points[i];
      points += prefix + std::to_string(i) + "," + num(p.ln_price_ratio) + "," +
                num(p.ln_quantity_ratio) + "," + num(p.quantity_share) + "\n";
    }
    fits += prefix + std::to_string(d->points.size()) + "," + std::to_string(d->corner_adjusted_count) +
            "," + opt_num(d->spearman_rho) + "," +
            opt_num(d->fit ? std::optional(d->fit->slope) : std::nullopt) + "," +
            opt_num(d->fit ? std::optional(d->fit->intercept) : std::nullopt) + "\n";
  }
  write_text_file(out_dir / "demand_points.csv", points);
  write_text_file(out_dir / "demand_fits.csv", fits);

  // Summary table.
  std::string csv = "domain,variant,index,n,excluded,mean,sd,ci_low,ci_high\n";
  auto json_rows = nlohmann::json::array();
  for (const auto& r : rows) {
    const bool has = r.n > 0;
    csv += r.domain + "," + r.variant + "," + r.index + "," + std::to_string(r.n) + "," +
           std::to_string(r.excluded) + "," + (has ? num(r.mean) : "") + "," + (has ? num(r.sd) : "") +
           "," + (has ? num(r.mean - r.ci_half_width) : "") + "," +
           (has ? num(r.mean + r.ci_half_width) : "") + "\n";
    json_rows.push_back({{"domain", r.domain},
                         {"variant", r.variant},
                         {"index", r.index},
                         {"n", r.n},
                         {"excluded", r.excluded},
                         {"mean", json_num(r.mean)},
                         {"sd", json_num(r.sd)},
                         {"ci_low", has ? json_num(r.mean - r.ci_half_width) : nullptr},
                         {"ci_high", has ? json_num(r.mean + r.ci_half_width) : nullptr}});
  }
  write_text_file(out_dir / "summary.csv", csv);

  auto comparisons = inputs.comparisons;
  std::sort(comparisons.begin(), comparisons.end(),
            [](const BenchmarkComparison& a, const BenchmarkComparison& b) {
              return std::tie(a.domain, a.index, a.kind, a.group, a.other) <
                     std::tie(b.domain, b.index, b.kind, b.group, b.other);
            });
  std::string ccsv = "kind,domain,index,group,other,n,mean,sd,other_n,other_mean,other_sd,t,df,p_value\n";
  auto json_cmp = nlohmann::json::array();
  for (const auto& c : comparisons) {
    const bool welch = c.kind == TestKind::two_sample_welch;
    ccsv += to_string(c.kind) + "," + c.domain + "," + c.index + "," + c.group + "," + c.other + "," +
            std::to_string(c.n) + "," + num(c.mean) + "," + num(c.sd) + "," +
            (welch ? std::to_string(c.other_n) : "") + "," + num(c.benchmark) + "," +
            (welch ? num(c.other_sd) : "") + "," + num(c.t) + "," + num(c.df) + "," +
            num(c.p_value) + "\n";
    nlohmann::json j{{"kind", to_string(c.kind)}, {"domain", c.domain}, {"index", c.index},
                     {"group", c.group},          {"other", c.other},   {"n", c.n},
                     {"mean", json_num(c.mean)},  {"sd", json_num(c.sd)},
                     {"other_mean", json_num(c.benchmark)},
                     {"t", c.t == 0.0 || std::isfinite(c.t) ? json_num(c.t)
                                                            : nlohmann::json(c.t > 0 ? "inf" : "-inf")},
                     {"df", json_num(c.df)},      {"p_value", json_num(c.p_value)}};
    if (welch) {
      j["other_n"] = c.other_n;
      j["other_sd"] = json_num(c.other_sd);
    }
    json_cmp.push_back(j);
  }
  write_text_file(out_dir / "comparisons.csv", ccsv);

  nlohmann::json summary{{"schema", kSummarySchema},
                         {"trials", inputs.reports.size()},
                         {"rows", json_rows},
                         {"comparisons", json_cmp}};
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

  std::ostringstream txt;
  txt << "trials scored: " << inputs.reports.size() << "\n";
  std::string current;
  for (const auto& r : rows) {
    const auto group = r.domain + " / " + r.variant;
    if (group != current) {
      txt << "\n" << group << "\n";
      current = group;
    }
    txt << "  " << r.index << std::string(r.index.size() < 14 ? 14 - r.index.size() : 1, ' ');
    if (r.n == 0) {
      txt << "no defined values";
    } else {
      txt << "mean " << format_fixed(r.mean, 4) << "  95% CI [" << format_fixed(r.mean - r.ci_half_width, 4)
          << ", " << format_fixed(r.mean + r.ci_half_width, 4) << "]  n " << r.n;
    }
    if (r.excluded > 0) txt << "  (" << r.excluded << " undefined)";
    txt << "\n";
  }
  if (!comparisons.empty()) txt << "\ntests\n";
  for (const auto& c : comparisons) {
    txt << "  " << c.domain << " " << c.index << ": " << c.group << " vs " << c.other;
    if (c.kind == TestKind::one_sample) txt << " " << format_sig(c.benchmark, 6);
    txt << "  t = " << format_sig(c.t, 6) << ", df = " << format_sig(c.df, 6)
        << ", p = " << format_sig(c.p_value, 4) << "\n";
  }
  write_text_file(out_dir / "summary.txt", txt.str());
}

}  // namespace revpref
