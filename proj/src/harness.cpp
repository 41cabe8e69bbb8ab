#include "revpref/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "revpref/errors.hpp"

namespace revpref {

std::string to_string(TrialStatus status) {
  return status == TrialStatus::complete ? "complete" : "aborted";
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt, long retry_after_ms) const {
  if (retry_after_ms >= 0) return std::chrono::milliseconds(retry_after_ms);
  const double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 1);
  return std::chrono::milliseconds(
      static_cast<long long>(std::min(ms, static_cast<double>(max_delay.count()))));
}

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string call_with_retries(AgentEndpoint& agent, const ChatRequest& request,
                              const RetryPolicy& policy, std::vector<RetryEvent>& log) {
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      return agent.complete(request);
    } catch (const EndpointError& e) {
      RetryEvent ev{request.context.phase, request.context.round, attempt, e.status(), 0, e.what()};
      const bool again = e.retryable() && attempt < attempts;
      if (again) ev.wait_ms = static_cast<long>(policy.delay_after(attempt, e.retry_after_ms()).count());
      log.push_back(ev);
      if (!again) throw;
      const auto wait = std::chrono::milliseconds(ev.wait_ms);
      if (policy.sleeper) {
        policy.sleeper(wait);
      } else {
        std::this_thread::sleep_for(wait);
      }
    }
  }
}

nlohmann::json points_json(const ParsedReply& parsed) {
  if (!parsed.points) return nullptr;
  return {parsed.points->a, parsed.points->b};
}

void write_outputs(const TrialRecord& record, const TaskSheet& sheet, const TrialOptions& options) {
  if (options.runs_dir) {
    write_text_file(record_path(*options.runs_dir, record.trial_id),
                    record_to_json(record).dump(2) + "\n");
  }
  if (options.datasets_dir) {
    const auto path = dataset_path(*options.datasets_dir, record.trial_id);
    std::error_code ec;
    std::filesystem::remove(path, ec);
    if (record.status == TrialStatus::complete) {
      if (auto ds = trial_dataset(record, sheet)) save_dataset(*ds, path);
    }
  }
}

}  // namespace

std::filesystem::path record_path(const std::filesystem::path& runs_dir, const std::string& trial_id) {
  return runs_dir / (trial_id + ".record.json");
}

std::filesystem::path transcript_path(const std::filesystem::path& runs_dir,
                                      const std::string& trial_id) {
  return runs_dir / (trial_id + ".transcript.jsonl");
}

std::filesystem::path dataset_path(const std::filesystem::path& datasets_dir,
                                   const std::string& trial_id) {
  return datasets_dir / (trial_id + ".json");
}

TrialRecord run_trial(const TaskSheet& sheet, const PromptScript& script, AgentEndpoint& agent,
                      const RetryPolicy& policy, const TrialOptions& options) {
  if (script.decision_questions.size() != sheet.rounds.size()) {
    throw InvalidParameter("prompt script and sheet disagree on the number of rounds");
  }
  TrialRecord record;
  record.trial_id = options.trial_id;
  record.sheet_ref = options.sheet_ref;
  record.domain = sheet.domain;
  record.variant = sheet.variant;
  record.sheet_seed = sheet.seed;
  record.budget = sheet.budget;
  record.agent = agent.name();
  record.model = agent.model();
  record.temperature = script.temperature;
  record.stateless = options.stateless;
  record.system_text = script.system_text;
  record.demographic_preamble = script.demographic_preamble;
  if (agent.remote()) record.started_at = utc_now();

  std::ofstream transcript;
  if (options.runs_dir) {
    std::filesystem::create_directories(*options.runs_dir);
    const auto path = transcript_path(*options.runs_dir, options.trial_id);
    transcript.open(path, std::ios::binary | std::ios::trunc);
    if (!transcript) throw IoError("cannot write " + path.string());
  }

  const std::vector<ChatMessage> preamble{{"system", script.system_text},
                                          {"assistant", script.assistant_text}};
  ChatRequest request;
  request.model = agent.model();
  request.temperature = script.temperature;
  request.context.trial_id = options.trial_id;
  request.context.trial_index = options.trial_index;
  request.context.rounds_per_trial = sheet.rounds.size();

  try {
    if (options.ask_comprehension) {
      request.context.phase = "comprehension";
      request.messages = preamble;
      for (std::size_t i = 0; i < script.comprehension_questions.size(); ++i) {
        request.context.round = i;
        request.messages.push_back({"user", script.comprehension_questions[i]});
        const auto reply = call_with_retries(agent, request, policy, record.retries);
        request.messages.push_back({"assistant", reply});
        record.comprehension.push_back({script.comprehension_questions[i], reply});
      }
    }

    request.context.phase = "decision";
    request.messages = preamble;
    for (std::size_t r = 0; r < sheet.rounds.size(); ++r) {
      const auto& question = script.decision_questions[r];
      request.context.round = r;
      if (options.stateless) request.messages = preamble;
      request.messages.push_back({"user", question});
      const auto reply = call_with_retries(agent, request, policy, record.retries);
      request.messages.push_back({"assistant", reply});

      RoundRecord rr{r, question, reply,
                     parse_reply(reply, sheet.budget, sheet.variant, sheet.rounds[r])};
      if (rr.parsed.status == ReplyStatus::refusal) ++record.refusal_count;
      if (rr.parsed.status == ReplyStatus::malformed) ++record.malformed_count;
      record.rounds.push_back(std::move(rr));
      if (transcript.is_open()) {
        transcript << transcript_entry(record, record.rounds.back()).dump() << "\n";
        transcript.flush();
      }
    }
  } catch (const EndpointError& e) {
    record.status = TrialStatus::aborted;
    record.error = e.what();
  }

  if (agent.remote()) record.finished_at = utc_now();
  write_outputs(record, sheet, options);
  return record;
}

std::optional<ChoiceDataset> trial_dataset(const TrialRecord& record, const TaskSheet& sheet) {
  std::vector<Observation> obs;
  for (const auto& r : record.rounds) {
    if (r.parsed.status != ReplyStatus::valid) continue;
    obs.push_back(observation_for(sheet.rounds.at(r.round), sheet.variant, *r.parsed.points,
                                  sheet.budget));
  }
  if (obs.empty()) return std::nullopt;
  return ChoiceDataset(std::move(obs),
                       {record.trial_id, to_string(record.domain), to_string(record.variant)});
}

nlohmann::json transcript_entry(const TrialRecord& record, const RoundRecord& round) {
  return {{"schema", kTranscriptSchema},
          {"trial_id", record.trial_id},
          {"domain", to_string(record.domain)},
          {"variant", to_string(record.variant)},
          {"round", round.round},
          {"question", round.question},
          {"raw_reply", round.raw_reply},
          {"status", to_string(round.parsed.status)},
          {"points", points_json(round.parsed)}};
}

nlohmann::json record_to_json(const TrialRecord& r) {
  nlohmann::json doc{{"schema", kRecordSchema},
                     {"trial_id", r.trial_id},
                     {"sheet", r.sheet_ref},
                     {"domain", to_string(r.domain)},
                     {"variant", to_string(r.variant)},
                     {"sheet_seed", r.sheet_seed},
                     {"budget", r.budget},
                     {"agent", r.agent},
                     {"model", r.model},
                     {"temperature", r.temperature},
                     {"stateless", r.stateless},
                     {"system_text", r.system_text},
                     {"demographic_preamble", nullptr},
                     {"status", to_string(r.status)},
                     {"error", r.error},
                     {"refusal_count", r.refusal_count},
                     {"malformed_count", r.malformed_count},
                     {"invalid_count", r.invalid_count()}};
  if (r.demographic_preamble) doc["demographic_preamble"] = *r.demographic_preamble;
  if (r.started_at) doc["started_at"] = *r.started_at;
  if (r.finished_at) doc["finished_at"] = *r.finished_at;
  auto& comp = doc["comprehension"] = nlohmann::json::array();
  for (const auto& c : r.comprehension) comp.push_back({{"question", c.question}, {"reply", c.reply}});
  auto& rounds = doc["rounds"] = nlohmann::json::array();
  for (const auto& rr : r.rounds) {
    rounds.push_back({{"round", rr.round},
                      {"question", rr.question},
                      {"raw_reply", rr.raw_reply},
                      {"status", to_string(rr.parsed.status)},
                      {"points", points_json(rr.parsed)}});
  }
  auto& retries = doc["retries"] = nlohmann::json::array();
  for (const auto& e : r.retries) {
    retries.push_back({{"phase", e.phase},
                       {"round", e.round},
                       {"attempt", e.attempt},
                       {"status", e.status},
                       {"wait_ms", e.wait_ms},
                       {"message", e.message}});
  }
  return doc;
}

TrialRecord record_from_json(const nlohmann::json& doc) {
  require_schema(doc, kRecordSchema);
  try {
    TrialRecord r;
    r.trial_id = doc.at("trial_id").get<std::string>();
    r.sheet_ref = doc.at("sheet").get<std::string>();
    r.domain = domain_from_string(doc.at("domain").get<std::string>());
    r.variant = variant_from_string(doc.at("variant").get<std::string>());
    r.sheet_seed = doc.at("sheet_seed").get<std::uint64_t>();
    r.budget = doc.at("budget").get<double>();
    r.agent = doc.at("agent").get<std::string>();
    r.model = doc.at("model").get<std::string>();
    r.temperature = doc.at("temperature").get<double>();
    r.stateless = doc.at("stateless").get<bool>();
    r.system_text = doc.at("system_text").get<std::string>();
    if (!doc.at("demographic_preamble").is_null()) {
      r.demographic_preamble = doc.at("demographic_preamble").get<std::string>();
    }
    r.status = doc.at("status").get<std::string>() == "complete" ? TrialStatus::complete
                                                                  : TrialStatus::aborted;
    r.error = doc.at("error").get<std::string>();
    r.refusal_count = doc.at("refusal_count").get<std::size_t>();
    r.malformed_count = doc.at("malformed_count").get<std::size_t>();
    if (doc.contains("started_at")) r.started_at = doc.at("started_at").get<std::string>();
    if (doc.contains("finished_at")) r.finished_at = doc.at("finished_at").get<std::string>();
    for (const auto& c : doc.at("comprehension")) {
      r.comprehension.push_back({c.at("question").get<std::string>(), c.at("reply").get<std::string>()});
    }
    for (const auto& x : doc.at("rounds")) {
      RoundRecord rr;
      rr.round = x.at("round").get<std::size_t>();
      rr.question = x.at("question").get<std::string>();
      rr.raw_reply = x.at("raw_reply").get<std::string>();
      rr.parsed.raw_text = rr.raw_reply;
      rr.parsed.status = reply_status_from_string(x.at("status").get<std::string>());
      if (!x.at("points").is_null()) {
        rr.parsed.points = PointOption{x.at("points").at(0).get<double>(),
                                       x.at("points").at(1).get<double>()};
      }
      r.rounds.push_back(std::move(rr));
    }
    for (const auto& e : doc.at("retries")) {
      r.retries.push_back({e.at("phase").get<std::string>(), e.at("round").get<std::size_t>(),
                           e.at("attempt").get<int>(), e.at("status").get<int>(),
                           e.at("wait_ms").get<long>(), e.at("message").get<std::string>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 0, "record");
  } catch (const InvalidParameter& e) {
    throw ParseError(e.what(), 0, "record");
  } catch (const UnknownDomain& e) {
    throw ParseError(e.what(), 0, "record");
  }
}

void parallel_for(std::size_t count, std::size_t concurrency,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(concurrency, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace revpref
