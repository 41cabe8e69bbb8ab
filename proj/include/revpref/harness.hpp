#pragma once

// Runs one trial (one conversation over a task sheet) against an agent and
// keeps the transcript, the parsed replies and the derived dataset.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "revpref/agents.hpp"
#include "revpref/choice_data.hpp"
#include "revpref/prompts.hpp"
#include "revpref/replies.hpp"
#include "revpref/task_generation.hpp"

namespace revpref {

inline constexpr char kRecordSchema[] = "revpref-record/1";
inline constexpr char kTranscriptSchema[] = "revpref-transcript/1";

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{60000};
  // Defaults to std::this_thread::sleep_for; tests inject a recorder.
  std::function<void(std::chrono::milliseconds)> sleeper;

  // Wait before attempt `attempt + 1` after attempt `attempt` (1-based)
  // failed. A server-provided Retry-After wins over the backoff schedule.
  std::chrono::milliseconds delay_after(int attempt, long retry_after_ms) const;
};

struct RetryEvent {
  std::string phase;
  std::size_t round = 0;
  int attempt = 0;
  int status = 0;
  long wait_ms = 0;  // 0 when no further attempt followed
  std::string message;
};

struct RoundRecord {
  std::size_t round = 0;
  std::string question;
  std::string raw_reply;
  ParsedReply parsed;
};

struct ComprehensionRecord {
  std::string question;
  std::string reply;
};

enum class TrialStatus { complete, aborted };

std::string to_string(TrialStatus status);

struct TrialRecord {
  std::string trial_id;
  std::string sheet_ref;
  Domain domain = Domain::risk;
  Variant variant = Variant::baseline;
  std::uint64_t sheet_seed = 0;
  double budget = kDefaultBudget;
  std::string agent;
  std::string model;
  double temperature = 0.0;
  bool stateless = false;
  std::string system_text;
  std::optional<std::string> demographic_preamble;
  TrialStatus status = TrialStatus::complete;
  std::string error;
  std::vector<ComprehensionRecord> comprehension;
  std::vector<RoundRecord> rounds;
  std::size_t refusal_count = 0;
  std::size_t malformed_count = 0;
  std::vector<RetryEvent> retries;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;

  std::size_t invalid_count() const { return refusal_count + malformed_count; }
};

struct TrialOptions {
  std::string trial_id;
  std::size_t trial_index = 0;
  std::string sheet_ref;
  // Each decision question in a fresh conversation instead of one history.
  bool stateless = false;
  bool ask_comprehension = true;
  // When set, the transcript is appended round by round and the record (and
  // the dataset of a complete trial) is written before run_trial returns.
  std::optional<std::filesystem::path> runs_dir;
  std::optional<std::filesystem::path> datasets_dir;
};

// Never throws EndpointError: once retries are exhausted the trial is marked
// aborted and the rounds answered so far are kept.
TrialRecord run_trial(const TaskSheet& sheet, const PromptScript& script, AgentEndpoint& agent,
                      const RetryPolicy& policy, const TrialOptions& options);

// Observations for the valid rounds, in round order; nullopt when none.
std::optional<ChoiceDataset> trial_dataset(const TrialRecord& record, const TaskSheet& sheet);

nlohmann::json record_to_json(const TrialRecord& record);
TrialRecord record_from_json(const nlohmann::json& doc);
nlohmann::json transcript_entry(const TrialRecord& record, const RoundRecord& round);

std::filesystem::path record_path(const std::filesystem::path& runs_dir, const std::string& trial_id);
std::filesystem::path transcript_path(const std::filesystem::path& runs_dir,
                                      const std::string& trial_id);
std::filesystem::path dataset_path(const std::filesystem::path& datasets_dir,
                                   const std::string& trial_id);

// Calls fn(i) for i in [0, count) on up to `concurrency` threads. The first
// exception thrown by any call is rethrown after all threads finish.
void parallel_for(std::size_t count, std::size_t concurrency,
                  const std::function<void(std::size_t)>& fn);

}  // namespace revpref
