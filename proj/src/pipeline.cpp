#include "revpref/pipeline.hpp"

#include <algorithm>
#include <set>

#include "revpref/errors.hpp"
#include "revpref/indices.hpp"
#include "revpref/random.hpp"

namespace fs = std::filesystem;

namespace revpref {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Regular files in `dir` whose names end in `suffix`, sorted by name.
std::vector<fs::path> list_files(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw MissingInput(dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && ends_with(entry.path().filename().string(), suffix)) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json load_json(const fs::path& path) {
  if (!fs::exists(path)) throw MissingInput(path.string());
  return parse_json_text(read_text_file(path));
}

TrialRecord load_record(const fs::path& path) { return record_from_json(load_json(path)); }

std::string family(Domain d, Variant v) { return to_string(d) + "_" + to_string(v); }

}  // namespace

void RunConfig::validate() const {
  if (trials == 0) throw InvalidParameter("trials must be at least 1");
  if (rounds == 0) throw InvalidParameter("rounds must be at least 1");
  if (!(temperature >= 0.0 && temperature <= 1.0)) throw InvalidParameter("temperature must lie in [0, 1]");
  if (concurrency == 0) throw InvalidParameter("concurrency must be at least 1");
  if (draws == 0) throw InvalidParameter("draws must be at least 1");
  if (domains.empty()) throw InvalidParameter("at least one domain is required");
  if (std::set<Domain>(domains.begin(), domains.end()).size() != domains.size()) {
    throw InvalidParameter("domains must not repeat");
  }
}

fs::path sheets_dir(const RunConfig& c) { return c.out / "sheets"; }
fs::path runs_dir(const RunConfig& c) { return c.out / "runs"; }
fs::path datasets_dir(const RunConfig& c) { return c.out / "datasets"; }
fs::path scores_dir(const RunConfig& c) { return c.out / "scores"; }
fs::path power_dir(const RunConfig& c) { return c.out / "power"; }
fs::path report_dir(const RunConfig& c) { return c.out / "report"; }

fs::path sheet_path(const RunConfig& c, const std::string& id) {
  return sheets_dir(c) / (id + ".sheet.json");
}

std::vector<fs::path> cmd_generate(const RunConfig& config) {
  config.validate();
  std::vector<fs::path> out;
  for (Domain d : config.domains) {
    for (std::size_t t = 0; t < config.trials; ++t) {
      const auto sheet = generate_sheet(d, config.variant, trial_seed(config.seed, d, t),
                                        config.constraint_mode, config.rounds);
      const auto path = sheet_path(config, trial_id(d, config.variant, t));
      save_sheet(sheet, path);
      out.push_back(path);
    }
  }
  return out;
}

RunSummary cmd_run(const RunConfig& config, const AgentFactory& factory) {
  config.validate();
  struct Job {
    std::string id;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (std::size_t j = 0; j < config.domains.size(); ++j) {
    for (std::size_t t = 0; t < config.trials; ++t) {
      jobs.push_back({trial_id(config.domains[j], config.variant, t), j * config.trials + t});
    }
  }
  // Fail before any trial starts when a sheet is missing.
  for (const auto& job : jobs) {
    if (!fs::exists(sheet_path(config, job.id))) throw MissingInput(sheet_path(config, job.id).string());
  }

  // Built up front so a bad agent spec fails even when nothing is left to run.
  const std::shared_ptr<AgentEndpoint> agent =
      factory ? factory(config) : make_agent(config.agent, config.seed, config.endpoint_url);

  std::vector<Job> pending;
  RunSummary summary;
  summary.trials = jobs.size();
  for (const auto& job : jobs) {
    const auto rec = record_path(runs_dir(config), job.id);
    if (fs::exists(rec) && load_record(rec).status == TrialStatus::complete) {
      ++summary.skipped;
    } else {
      pending.push_back(job);
    }
  }
  summary.executed = pending.size();

  if (!pending.empty()) {
    parallel_for(pending.size(), config.concurrency, [&](std::size_t i) {
      const auto& job = pending[i];
      const auto path = sheet_path(config, job.id);
      const auto sheet = load_sheet(path);
      TrialOptions opts;
      opts.trial_id = job.id;
      opts.trial_index = job.index;
      opts.sheet_ref = fs::relative(path, config.out).generic_string();
      opts.stateless = config.stateless;
      opts.ask_comprehension = config.ask_comprehension;
      opts.runs_dir = runs_dir(config);
      opts.datasets_dir = datasets_dir(config);
      run_trial(sheet, build_prompts(sheet, config.demographics, config.temperature), *agent,
                config.retry, opts);
    });
  }

  for (const auto& job : jobs) {
    const auto rec = load_record(record_path(runs_dir(config), job.id));
    (rec.status == TrialStatus::complete ? summary.complete : summary.aborted)++;
    summary.rounds += rec.rounds.size();
    summary.refusals += rec.refusal_count;
    summary.malformed += rec.malformed_count;
  }
  return summary;
}

std::vector<IndexReport> cmd_score(const RunConfig& config) {
  const auto files = list_files(datasets_dir(config), ".json");
  if (files.empty()) throw MissingInput(datasets_dir(config).string());
  std::vector<IndexReport> reports;
  std::string csv = report_csv_header() + "\n";
  for (const auto& path : files) {
    auto report = score_all(load_dataset(path));
    const auto stem = path.stem().string();
    write_text_file(scores_dir(config) / (stem + ".score.json"), report_to_json(report).dump(2) + "\n");
    csv += report_csv_row(report) + "\n";
    reports.push_back(std::move(report));
  }
  write_text_file(scores_dir(config) / "scores.csv", csv);
  return reports;
}

std::vector<PowerSet> cmd_power(const RunConfig& config) {
  config.validate();
  std::vector<PowerSet> out;
  for (Domain d : config.domains) {
    const auto path = sheet_path(config, trial_id(d, config.variant, 0));
    if (!fs::exists(path)) throw MissingInput(path.string());
    const auto sheet = load_sheet(path);
    PowerSet p;
    p.domain = d;
    p.variant = config.variant;
    p.sheet_seed = sheet.seed;
    p.seed = derive_seed(config.seed, hash_string("power/" + to_string(d)));
    p.reports = bronars_simulation(sheet, config.draws, p.seed, config.concurrency);
    std::vector<double> ccei;
    for (const auto& r : p.reports) ccei.push_back(r.ccei);
    const auto stem = family(d, config.variant);
    write_text_file(power_dir(config) / (stem + ".power.json"), power_to_json(p).dump() + "\n");
    write_text_file(power_dir(config) / (stem + "_ccei.cdf.csv"), cdf_csv(empirical_cdf(ccei)));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SummaryRow> cmd_report(const RunConfig& config) {
  const auto files = list_files(scores_dir(config), ".score.json");
  if (files.empty()) throw MissingInput(scores_dir(config).string());
  ReportInputs inputs;
  for (const auto& path : files) {
    inputs.reports.push_back(report_from_json(load_json(path)));
    const auto& id = inputs.reports.back().metadata.trial_id;
    const auto data = load_dataset(dataset_path(datasets_dir(config), id));
    if (data.goods() == 2) inputs.diagnostics.push_back(demand_diagnostics(data));
  }
  if (fs::is_directory(power_dir(config))) {
    for (const auto& path : list_files(power_dir(config), ".power.json")) {
      inputs.power.push_back(power_from_json(load_json(path)));
    }
  }
  inputs.comparisons = standard_comparisons(inputs.reports);
  emit_report(inputs, report_dir(config));
  return summarize(inputs);
}

}  // namespace revpref
