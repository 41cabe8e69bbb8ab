#pragma once

// The five command-line stages. Each reads and writes files under one output
// directory:
//   sheets/<trial>.sheet.json      generate
//   runs/<trial>.record.json       run (plus .transcript.jsonl)
//   datasets/<trial>.json          run, complete trials with valid rounds
//   scores/<trial>.score.json      score (plus scores.csv)
//   power/<domain>_<variant>.*     power
//   report/                        report

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "revpref/agents.hpp"
#include "revpref/analysis.hpp"
#include "revpref/harness.hpp"
#include "revpref/prompts.hpp"
#include "revpref/task_generation.hpp"

namespace revpref {

struct RunConfig {
  std::vector<Domain> domains{kAllDomains.begin(), kAllDomains.end()};
  Variant variant = Variant::baseline;
  std::size_t trials = 100;
  std::size_t rounds = kDefaultRounds;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::string agent;
  std::string endpoint_url;
  std::filesystem::path out = "out";
  ConstraintMode constraint_mode = ConstraintMode::max_at_least_half;
  std::size_t concurrency = 4;
  std::size_t draws = 1000;
  bool stateless = false;
  bool ask_comprehension = true;
  std::optional<Demographics> demographics;
  RetryPolicy retry;

  // Throws InvalidParameter on trials = 0, temperature outside [0, 1],
  // concurrency = 0, draws = 0 or an empty or repeated domain list.
  void validate() const;
};

std::filesystem::path sheets_dir(const RunConfig& config);
std::filesystem::path runs_dir(const RunConfig& config);
std::filesystem::path datasets_dir(const RunConfig& config);
std::filesystem::path scores_dir(const RunConfig& config);
std::filesystem::path power_dir(const RunConfig& config);
std::filesystem::path report_dir(const RunConfig& config);
std::filesystem::path sheet_path(const RunConfig& config, const std::string& trial_id);

// Writes one sheet per (domain, trial); returns the paths in domain-major order.
std::vector<std::filesystem::path> cmd_generate(const RunConfig& config);

struct RunSummary {
  std::size_t trials = 0;
  std::size_t executed = 0;
  std::size_t skipped = 0;  // complete records found from an earlier run
  std::size_t complete = 0;
  std::size_t aborted = 0;
  std::size_t rounds = 0;
  std::size_t refusals = 0;
  std::size_t malformed = 0;

  std::size_t invalid() const { return refusals + malformed; }
};

using AgentFactory = std::function<std::shared_ptr<AgentEndpoint>(const RunConfig&)>;

// Runs every configured trial whose record is missing or aborted, up to
// `concurrency` at a time. Trial k of the j-th configured domain gets
// trial_index j * trials + k. The summary covers all configured trials,
// including skipped ones. `factory` defaults to make_agent(config.agent, ...).
RunSummary cmd_run(const RunConfig& config, const AgentFactory& factory = {});

// Scores every dataset in datasets/ (sorted by file name) and writes
// scores/<trial>.score.json and scores/scores.csv.
std::vector<IndexReport> cmd_score(const RunConfig& config);

// Bronars simulation on the trial-0 sheet of each configured domain.
std::vector<PowerSet> cmd_power(const RunConfig& config);

// Reads scores/, the matching datasets and any power/ files, and writes the
// report tables into report/.
std::vector<SummaryRow> cmd_report(const RunConfig& config);

}  // namespace revpref
