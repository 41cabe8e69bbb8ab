#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "oracles.hpp"
#include "revpref/agents.hpp"
#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/harness.hpp"
#include "revpref/indices.hpp"
#include "revpref/prompts.hpp"
#include "revpref/random.hpp"
#include "revpref/replies.hpp"

namespace fs = std::filesystem;
using namespace revpref;

namespace {

RetryPolicy no_sleep(std::vector<long>* waits = nullptr) {
  RetryPolicy p;
  p.sleeper = [waits](std::chrono::milliseconds ms) {
    if (waits) waits->push_back(static_cast<long>(ms.count()));
  };
  return p;
}

ChatRequest decision_request(const std::string& question, std::string trial = "t", std::size_t round = 0) {
  ChatRequest req;
  req.messages = {{"system", "s"}, {"assistant", "a"}, {"user", question}};
  req.context.trial_id = std::move(trial);
  req.context.round = round;
  return req;
}

// Answers 50/50 except for one round, where it refuses.
class RefuseOneRound : public AgentEndpoint {
 public:
  explicit RefuseOneRound(std::size_t round) : round_(round) {}
  std::string complete(const ChatRequest& r) override {
    if (r.context.phase == "decision" && r.context.round == round_) {
      return "As an AI language model, I am not capable of making decisions on my own...";
    }
    return "50 points for A and 50 points for B";
  }
  std::string name() const override { return "refuse_one"; }

 private:
  std::size_t round_;
};

// Records the message history it is shown.
class Recorder : public AgentEndpoint {
 public:
  std::string complete(const ChatRequest& r) override {
    std::lock_guard lock(mu);
    seen.push_back(r);
    return "60 and 40";
  }
  std::string name() const override { return "recorder"; }
  std::mutex mu;
  std::vector<ChatRequest> seen;
};

// Fails with the given status from decision round `from` onwards.
class FailsFrom : public AgentEndpoint {
 public:
  FailsFrom(std::size_t from, int status, bool retryable)
      : from_(from), status_(status), retryable_(retryable) {}
  std::string complete(const ChatRequest& r) override {
    if (r.context.phase == "decision" && r.context.round >= from_) {
      throw EndpointError("HTTP " + std::to_string(status_), status_, retryable_);
    }
    return "30 and 70";
  }
  std::string name() const override { return "fails_from"; }

 private:
  std::size_t from_;
  int status_;
  bool retryable_;
};

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("revpref_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

// ---------------------------------------------------------------------------
// Prompts

TEST(BuildPrompts, RiskDecisionQuestion) {
  EXPECT_EQ(decision_question(Domain::risk, Variant::baseline, RoundSpec{0.8, 0.2, {}}),
            "In this round, investing every 1 point for Asset A returns 0.8 dollars and investing "
            "every 1 point for Asset B returns 0.2 dollars. What is your allocation?");
}

TEST(BuildPrompts, ProtocolTexts) {
  const auto sheet = generate_sheet(Domain::food, Variant::baseline, 1);
  const auto script = build_prompts(sheet);
  EXPECT_NE(script.assistant_text.find("meat and tomatoes"), std::string::npos);
  EXPECT_EQ(script.system_text.rfind("I want to you act as a human decision maker. You will be "
                                     "given 25 rounds of decision-making tasks",
                                     0),
            0u);
  EXPECT_EQ(script.decision_questions.size(), 25u);
  EXPECT_EQ(script.comprehension_questions.size(), 3u);
  EXPECT_FALSE(script.demographic_preamble.has_value());

  const auto risk = build_prompts(generate_sheet(Domain::risk, Variant::baseline, 1));
  EXPECT_NE(risk.assistant_text.find("100 points that need to be invested between"),
            std::string::npos);
  const auto social = build_prompts(generate_sheet(Domain::social, Variant::baseline, 1));
  EXPECT_NE(social.assistant_text.find("randomly matched with a new anonymous subject"),
            std::string::npos);
  const auto time = build_prompts(generate_sheet(Domain::time, Variant::baseline, 1));
  EXPECT_NE(time.assistant_text.find("invested between today and one month later"),
            std::string::npos);
}

TEST(BuildPrompts, DemographicPreamble) {
  const auto script = build_prompts(generate_sheet(Domain::risk, Variant::baseline, 1),
                                    Demographics{30, "female"}, 0.5);
  EXPECT_EQ(script.system_text.rfind("You are a 30-year-old female. I want to you act", 0), 0u);
  EXPECT_EQ(script.demographic_preamble, "You are a 30-year-old female.");
  EXPECT_EQ(script.temperature, 0.5);
}

TEST(BuildPrompts, VariantsAndInversion) {
  Rng rng(5);
  for (Domain d : kAllDomains) {
    for (auto v : {Variant::baseline, Variant::price_reframed, Variant::discrete}) {
      const auto sheet = generate_sheet(d, v, rng.next());
      for (const auto& r : sheet.rounds) {
        const auto q = decision_question(d, v, r);
        const auto view = read_question(q);
        ASSERT_TRUE(view.has_value()) << q;
        EXPECT_EQ(view->variant, v);
        if (v == Variant::discrete) {
          EXPECT_EQ(q.rfind("In this round, there are 11 options, which are (0, ", 0), 0u);
          ASSERT_EQ(view->options.size(), 11u);
          EXPECT_NEAR(view->options.back().first, 100.0 * r.m, 1e-9);
          continue;
        }
        EXPECT_EQ(view->domain, d);
        const auto [pa, pb] = displayed_prices(r, v);
        EXPECT_NEAR(view->units_per_point.first, 1.0 / pa, 1e-12);
        EXPECT_NEAR(view->units_per_point.second, 1.0 / pb, 1e-12);
      }
    }
  }
  EXPECT_FALSE(read_question("What is the probability you will get a return from asset A?"));
  const auto reframed = decision_question(Domain::food, Variant::price_reframed, {0.5, 0.3, {}});
  EXPECT_NE(reframed.find("2.00 points = 1 kg meat"), std::string::npos);
  EXPECT_NE(reframed.find("3.33 points = 1 kg tomatoes"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Replies

TEST(ParseReply, Examples) {
  auto r = parse_reply("I will invest 60 points in Asset A and 40 points in Asset B", 100);
  EXPECT_EQ(r.status, ReplyStatus::valid);
  EXPECT_EQ(r.points, (PointOption{60, 40}));
  r = parse_reply("75 points for today and 25 points for one month later", 100);
  EXPECT_EQ(r.status, ReplyStatus::valid);
  EXPECT_EQ(r.points, (PointOption{75, 25}));
  r = parse_reply("I allocate 70 and 50", 100);
  EXPECT_EQ(r.status, ReplyStatus::malformed);
  EXPECT_FALSE(r.points.has_value());
  EXPECT_EQ(parse_reply(kRefusalReply, 100).status, ReplyStatus::refusal);
  EXPECT_EQ(parse_reply("", 100).status, ReplyStatus::refusal);
  EXPECT_EQ(parse_reply("Only 100", 100).status, ReplyStatus::malformed);
  EXPECT_EQ(parse_reply("-10 points and 110 points", 100).status, ReplyStatus::malformed);
  EXPECT_EQ(parse_reply("A 25-75 split", 100).points, (PointOption{25, 75}));
  EXPECT_EQ(parse_reply("33.5 and 66.5.", 100).points, (PointOption{33.5, 66.5}));
  EXPECT_EQ(parse_reply("59.9999995 and 40", 100).status, ReplyStatus::valid);
  EXPECT_EQ(parse_reply("59.99999 and 40", 100).status, ReplyStatus::malformed);
}

TEST(ParseReply, DiscreteOptions) {
  auto sheet = generate_sheet(Domain::risk, Variant::discrete, 1);
  RoundSpec r = sheet.rounds[0];
  r.m = 0.53;
  r.n = 0.27;
  auto p = parse_reply("My best option is (21.2, 16.2).", 100, Variant::discrete, r);
  EXPECT_EQ(p.status, ReplyStatus::valid);
  EXPECT_EQ(p.points, (PointOption{40, 60}));
  p = parse_reply("I pick 40 points and 60 points", 100, Variant::discrete, r);
  EXPECT_EQ(p.points, (PointOption{40, 60}));
  EXPECT_EQ(parse_reply("(21, 16)", 100, Variant::discrete, r).status, ReplyStatus::malformed);
  EXPECT_EQ(parse_reply("no idea", 100, Variant::discrete, r).status, ReplyStatus::refusal);
}

TEST(ParseReply, RoundTripsMachineFormattedReplies) {
  Rng rng(13);
  for (int i = 0; i < 5000; ++i) {
    const double a = rng.uniform(0.0, 100.0);
    const auto p = parse_reply(format_reply({a, 100.0 - a}), 100.0);
    ASSERT_EQ(p.status, ReplyStatus::valid);
    EXPECT_EQ(p.points->a, a);
    EXPECT_EQ(p.points->b, 100.0 - a);
  }
  const auto sheet = generate_sheet(Domain::food, Variant::discrete, 17);
  for (const auto& r : sheet.rounds) {
    for (const auto& o : r.options) {
      const auto [ua, ub] = option_units(r, o);
      const auto p = parse_reply(format_option_reply(ua, ub), 100.0, Variant::discrete, r);
      ASSERT_EQ(p.status, ReplyStatus::valid);
      EXPECT_EQ(*p.points, o);
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic agents

TEST(SyntheticAgents, CobbDouglasHalfIsFiftyFifty) {
  auto agent = make_agent("cobb_douglas:alpha=0.5", 1);
  const auto sheet = generate_sheet(Domain::risk, Variant::baseline, 21);
  for (const auto& r : sheet.rounds) {
    const auto reply = agent->complete(decision_request(decision_question(Domain::risk, Variant::baseline, r)));
    EXPECT_EQ(parse_reply(reply, 100).points, (PointOption{50, 50}));
  }
}

TEST(SyntheticAgents, MatchNumericUtilityMaximisation) {
  Rng rng(23);
  const std::vector<std::pair<double, double>> params{{0.0, 0.3}, {0.5, 0.5}, {-1.0, 0.4},
                                                      {-4.0, 0.7}, {0.8, 0.6}};
  for (int trial = 0; trial < 200; ++trial) {
    const double ra = rng.uniform(0.1, 1.0);
    const double rb = rng.uniform(0.1, 1.0);
    for (auto [rho, alpha] : params) {
      auto pref = rho == 0.0 ? cobb_douglas(alpha) : ces(rho, alpha);
      auto u = [&](double a) { return pref->utility(a * ra, (100.0 - a) * rb); };
      EXPECT_NEAR(pref->points_to_a(ra, rb, 100.0), oracle::golden_max(u, 0.0, 100.0), 1e-5)
          << "rho " << rho << " alpha " << alpha;
    }
    // Leontief: equal units of both goods.
    const double a = ces(-INFINITY, 0.5)->points_to_a(ra, rb, 100.0);
    EXPECT_NEAR(a * ra, (100.0 - a) * rb, 1e-9);
    EXPECT_EQ(corner_max_return()->points_to_a(ra, rb, 100.0), ra >= rb ? 100.0 : 0.0);
  }
}

TEST(SyntheticAgents, RandomUniformIsReproducible) {
  auto a = make_agent("random_uniform", 77);
  auto b = make_agent("random_uniform", 77);
  auto c = make_agent("random_uniform", 78);
  const auto q = decision_question(Domain::time, Variant::baseline, {0.4, 0.9, {}});
  int differs = 0;
  for (std::size_t round = 0; round < 25; ++round) {
    const auto req = decision_request(q, "trial-x", round);
    const auto ra = a->complete(req);
    EXPECT_EQ(ra, b->complete(req));
    differs += ra != c->complete(req);
    EXPECT_EQ(parse_reply(ra, 100).status, ReplyStatus::valid);
  }
  EXPECT_GT(differs, 20);
}

TEST(SyntheticAgents, RejectsBadSpecs) {
  EXPECT_THROW(make_agent("cobb_douglas:alpha=0", 1), InvalidParameter);
  EXPECT_THROW(make_agent("cobb_douglas:alpha=1.5", 1), InvalidParameter);
  EXPECT_THROW(make_agent("ces:rho=1,alpha=0.5", 1), InvalidParameter);
  EXPECT_THROW(make_agent("tremble:p=1.5/cobb_douglas", 1), InvalidParameter);
  EXPECT_THROW(make_agent("refuse:rate=2/cobb_douglas", 1), InvalidParameter);
  EXPECT_THROW(make_agent("wizard", 1), InvalidParameter);
  EXPECT_THROW(make_agent("cobb_douglas:beta=2", 1), InvalidParameter);
  EXPECT_THROW(make_agent("http:model=x,api_key=sk-123", 1, "http://127.0.0.1:1/v1"),
               InvalidParameter);
  EXPECT_THROW(make_agent("http:model=x", 1), InvalidParameter);
  EXPECT_EQ(make_agent("tremble:p=0.1/ces:rho=-inf,alpha=0.5", 1)->name(),
            "tremble/ces:rho=-inf,alpha=0.5");
}

TEST(SyntheticAgents, TrembleMixesInNoise) {
  auto pure = make_agent("cobb_douglas:alpha=0.3", 5);
  auto shaky = make_agent("tremble:p=0.5/cobb_douglas:alpha=0.3", 5);
  auto never = make_agent("tremble:p=0/cobb_douglas:alpha=0.3", 5);
  const auto q = decision_question(Domain::social, Variant::baseline, {0.6, 0.3, {}});
  int noisy = 0;
  for (std::size_t round = 0; round < 200; ++round) {
    const auto req = decision_request(q, "t", round);
    noisy += shaky->complete(req) != pure->complete(req);
    EXPECT_EQ(never->complete(req), pure->complete(req));
  }
  EXPECT_GT(noisy, 60);
  EXPECT_LT(noisy, 140);
}

// ---------------------------------------------------------------------------
// Trials

TEST(RunTrial, MaximizerAnswersEveryRound) {
  const auto sheet = generate_sheet(Domain::risk, Variant::baseline, 5);
  auto agent = make_agent("cobb_douglas:alpha=0.4", 1);
  const auto rec = run_trial(sheet, build_prompts(sheet), *agent, no_sleep(), {"risk-baseline-000"});
  EXPECT_EQ(rec.status, TrialStatus::complete);
  EXPECT_EQ(rec.rounds.size(), 25u);
  EXPECT_EQ(rec.invalid_count(), 0u);
  EXPECT_EQ(rec.comprehension.size(), 3u);
  EXPECT_EQ(rec.comprehension[0].reply, kComprehensionReply);
  const auto ds = trial_dataset(rec, sheet);
  ASSERT_TRUE(ds.has_value());
  EXPECT_EQ(ds->size(), 25u);
  EXPECT_EQ(ds->metadata().trial_id, "risk-baseline-000");
  EXPECT_FALSE(rec.started_at.has_value());
}

TEST(RunTrial, RefusedRoundIsExcluded) {
  const auto sheet = generate_sheet(Domain::time, Variant::baseline, 6);
  RefuseOneRound agent(6);  // the seventh round
  const auto rec = run_trial(sheet, build_prompts(sheet), agent, no_sleep(), {"t"});
  EXPECT_EQ(rec.invalid_count(), 1u);
  EXPECT_EQ(rec.refusal_count, 1u);
  EXPECT_EQ(rec.rounds[6].parsed.status, ReplyStatus::refusal);
  const auto ds = trial_dataset(rec, sheet);
  ASSERT_TRUE(ds.has_value());
  EXPECT_EQ(ds->size(), 24u);
  // Round 7 (index 6) is skipped, so observation 6 comes from round index 7.
  EXPECT_DOUBLE_EQ((*ds)[6].prices()[0], 1.0 / sheet.rounds[7].m);
}

TEST(RunTrial, RetriesRateLimitsThenCompletes) {
  const auto sheet = generate_sheet(Domain::food, Variant::baseline, 8);
  std::vector<long> waits;
  auto agent = make_agent("flaky:failures=2/cobb_douglas:alpha=0.5", 1);
  const auto rec = run_trial(sheet, build_prompts(sheet), *agent, no_sleep(&waits), {"f"});
  EXPECT_EQ(rec.status, TrialStatus::complete);
  ASSERT_EQ(rec.retries.size(), 2u);
  EXPECT_EQ(rec.retries[0].status, 429);
  EXPECT_EQ(rec.retries[0].attempt, 1);
  EXPECT_EQ(rec.retries[1].attempt, 2);
  EXPECT_EQ(waits, (std::vector<long>{1000, 2000}));
  EXPECT_EQ(rec.invalid_count(), 0u);

  waits.clear();
  auto honoured = make_agent("flaky:failures=1,retry_after_ms=1500/cobb_douglas", 1);
  run_trial(sheet, build_prompts(sheet), *honoured, no_sleep(&waits), {"g"});
  EXPECT_EQ(waits, (std::vector<long>{1500}));
}

TEST(RunTrial, ExhaustedRetriesAbortButKeepRounds) {
  const auto dir = fresh_dir("abort");
  const auto sheet = generate_sheet(Domain::social, Variant::baseline, 9);
  FailsFrom agent(10, 503, true);
  std::vector<long> waits;
  TrialOptions opts{"social-baseline-000"};
  opts.runs_dir = dir / "runs";
  opts.datasets_dir = dir / "datasets";
  const auto rec = run_trial(sheet, build_prompts(sheet), agent, no_sleep(&waits), opts);
  EXPECT_EQ(rec.status, TrialStatus::aborted);
  EXPECT_EQ(rec.rounds.size(), 10u);
  EXPECT_EQ(rec.retries.size(), 5u);
  EXPECT_EQ(waits, (std::vector<long>{1000, 2000, 4000, 8000}));
  EXPECT_TRUE(fs::exists(record_path(dir / "runs", "social-baseline-000")));
  EXPECT_FALSE(fs::exists(dataset_path(dir / "datasets", "social-baseline-000")));
  const auto back = record_from_json(parse_json_text(read_text_file(record_path(dir / "runs", "social-baseline-000"))));
  EXPECT_EQ(back.status, TrialStatus::aborted);
  EXPECT_EQ(back.rounds.size(), 10u);

  FailsFrom hard(3, 400, false);
  const auto rec2 = run_trial(sheet, build_prompts(sheet), hard, no_sleep(), {"x"});
  EXPECT_EQ(rec2.status, TrialStatus::aborted);
  EXPECT_EQ(rec2.retries.size(), 1u);
  EXPECT_EQ(rec2.rounds.size(), 3u);
}

TEST(RunTrial, OneConversationPerTrial) {
  const auto sheet = generate_sheet(Domain::risk, Variant::baseline, 10);
  const auto script = build_prompts(sheet);
  Recorder agent;
  run_trial(sheet, script, agent, no_sleep(), {"c"});
  ASSERT_EQ(agent.seen.size(), 3u + 25u);
  // Comprehension runs in its own conversation.
  EXPECT_EQ(agent.seen[2].messages.size(), 2u + 5u);
  const auto& first = agent.seen[3];
  ASSERT_EQ(first.messages.size(), 3u);
  EXPECT_EQ(first.messages[0].role, "system");
  EXPECT_EQ(first.messages[1].role, "assistant");
  EXPECT_EQ(first.messages[1].content, script.assistant_text);
  EXPECT_EQ(first.messages[2].content, script.decision_questions[0]);
  const auto& last = agent.seen.back();
  EXPECT_EQ(last.messages.size(), 2u + 2u * 24u + 1u);
  EXPECT_EQ(last.messages[3].content, "60 and 40");
  for (const auto& m : last.messages) {
    EXPECT_EQ(m.content.find("What goods"), std::string::npos);
    EXPECT_EQ(m.content.find("probability"), std::string::npos);
  }

  Recorder fresh;
  TrialOptions stateless{"s"};
  stateless.stateless = true;
  stateless.ask_comprehension = false;
  run_trial(sheet, script, fresh, no_sleep(), stateless);
  ASSERT_EQ(fresh.seen.size(), 25u);
  for (const auto& r : fresh.seen) EXPECT_EQ(r.messages.size(), 3u);
}

TEST(RunTrial, PersistsTranscriptAndIsIdempotent) {
  const auto dir = fresh_dir("persist");
  const auto sheet = generate_sheet(Domain::food, Variant::price_reframed, 12);
  auto agent = make_agent("tremble:p=0.2/ces:rho=-1,alpha=0.6", 3);
  TrialOptions opts{"food-price_reframed-000"};
  opts.runs_dir = dir / "runs";
  opts.datasets_dir = dir / "datasets";
  run_trial(sheet, build_prompts(sheet), *agent, no_sleep(), opts);
  const auto transcript = read_text_file(transcript_path(dir / "runs", opts.trial_id));
  const auto record = read_text_file(record_path(dir / "runs", opts.trial_id));
  const auto dataset = read_text_file(dataset_path(dir / "datasets", opts.trial_id));

  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = transcript.find('\n', pos)) != std::string::npos; ++pos) ++lines;
  EXPECT_EQ(lines, 25u);
  const auto first = nlohmann::json::parse(transcript.substr(0, transcript.find('\n')));
  for (const char* key : {"trial_id", "domain", "variant", "round", "question", "raw_reply",
                          "status", "points"}) {
    EXPECT_TRUE(first.contains(key)) << key;
  }
  EXPECT_EQ(first["variant"], "price_reframed");

  run_trial(sheet, build_prompts(sheet), *agent, no_sleep(), opts);
  EXPECT_EQ(read_text_file(transcript_path(dir / "runs", opts.trial_id)), transcript);
  EXPECT_EQ(read_text_file(record_path(dir / "runs", opts.trial_id)), record);
  EXPECT_EQ(read_text_file(dataset_path(dir / "datasets", opts.trial_id)), dataset);
}

TEST(RunTrial, RefusalInjectionIsExact) {
  auto agent = make_agent("refuse:rate=0.1/cobb_douglas:alpha=0.5", 1);
  std::size_t refused = 0;
  for (std::size_t t = 0; t < 10; ++t) {
    const auto sheet = generate_sheet(Domain::risk, Variant::baseline, t);
    TrialOptions opts{"risk-baseline-" + std::to_string(t)};
    opts.trial_index = t;
    opts.ask_comprehension = false;
    refused += run_trial(sheet, build_prompts(sheet), *agent, no_sleep(), opts).refusal_count;
  }
  EXPECT_EQ(refused, 25u);
}

TEST(RunTrial, ConsistentAgentsScorePerfectly) {
  for (const char* spec : {"cobb_douglas:alpha=0.3", "ces:rho=-2,alpha=0.5", "ces:rho=0.5,alpha=0.4",
                           "ces:rho=-inf,alpha=0.5"}) {
    auto agent = make_agent(spec, 1);
    for (auto variant : {Variant::baseline, Variant::price_reframed}) {
      const auto sheet = generate_sheet(Domain::food, variant, 31);
      const auto rec = run_trial(sheet, build_prompts(sheet), *agent, no_sleep(), {"t"});
      const auto report = score_all(*trial_dataset(rec, sheet));
      EXPECT_TRUE(report.garp_pass) << spec << " " << to_string(variant);
      EXPECT_EQ(report.ccei, 1.0);
      EXPECT_EQ(report.hmi_retained, 25u);
    }
  }
}

// ---------------------------------------------------------------------------
// HTTP endpoint

class ChatServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      auth_ = req.get_header_value("Authorization");
      body_ = nlohmann::json::parse(req.body);
      if (fail_with_ > 0) {
        res.status = fail_with_;
        if (fail_with_ == 429) res.set_header("Retry-After", "2");
        --remaining_failures_;
        if (remaining_failures_ == 0) fail_with_ = 0;
        return;
      }
      nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "70 and 30"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    url_ = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
    unsetenv(kApiKeyEnv);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string url_;
  std::mutex mu_;
  std::string auth_;
  nlohmann::json body_;
  int fail_with_ = 0;
  int remaining_failures_ = 0;
};

TEST_F(ChatServer, SendsChatRequestWithBearerToken) {
  setenv(kApiKeyEnv, "sk-test-do-not-log", 1);
  auto agent = make_agent("http:model=gpt-3.5-turbo", 1, url_);
  ChatRequest req = decision_request("hello");
  req.model = agent->model();
  req.temperature = 0.5;
  EXPECT_EQ(agent->complete(req), "70 and 30");
  EXPECT_TRUE(agent->remote());
  std::lock_guard lock(mu_);
  EXPECT_EQ(auth_, "Bearer sk-test-do-not-log");
  EXPECT_EQ(body_["model"], "gpt-3.5-turbo");
  EXPECT_EQ(body_["temperature"], 0.5);
  ASSERT_EQ(body_["messages"].size(), 3u);
  EXPECT_EQ(body_["messages"][0]["role"], "system");
  EXPECT_EQ(body_["messages"][2]["content"], "hello");
  EXPECT_FALSE(body_.contains("context"));
}

TEST_F(ChatServer, ClassifiesErrors) {
  auto agent = make_agent("http", 1, url_);
  fail_with_ = 429;
  remaining_failures_ = 1;
  try {
    agent->complete(decision_request("q"));
    FAIL() << "expected EndpointError";
  } catch (const EndpointError& e) {
    EXPECT_EQ(e.status(), 429);
    EXPECT_TRUE(e.retryable());
    EXPECT_EQ(e.retry_after_ms(), 2000);
  }
  fail_with_ = 400;
  remaining_failures_ = 1;
  try {
    agent->complete(decision_request("q"));
    FAIL() << "expected EndpointError";
  } catch (const EndpointError& e) {
    EXPECT_EQ(e.status(), 400);
    EXPECT_FALSE(e.retryable());
  }
  auto dead = make_agent("http", 1, "http://127.0.0.1:1/v1/chat/completions");
  try {
    dead->complete(decision_request("q"));
    FAIL() << "expected EndpointError";
  } catch (const EndpointError& e) {
    EXPECT_TRUE(e.retryable());
  }
}

TEST_F(ChatServer, TrialOverHttpNeverRecordsTheKey) {
  setenv(kApiKeyEnv, "sk-test-do-not-log", 1);
  const auto dir = fresh_dir("http_trial");
  fail_with_ = 429;
  remaining_failures_ = 2;
  auto agent = make_agent("http:model=mock", 1, url_);
  const auto sheet = generate_sheet(Domain::risk, Variant::baseline, 4);
  TrialOptions opts{"risk-baseline-000"};
  opts.runs_dir = dir;
  std::vector<long> waits;
  const auto rec = run_trial(sheet, build_prompts(sheet), *agent, no_sleep(&waits), opts);
  EXPECT_EQ(rec.status, TrialStatus::complete);
  EXPECT_EQ(rec.retries.size(), 2u);
  EXPECT_EQ(waits, (std::vector<long>{2000, 2000}));
  EXPECT_EQ(rec.model, "mock");
  EXPECT_TRUE(rec.started_at.has_value());
  EXPECT_EQ(rec.rounds[0].parsed.points, (PointOption{70, 30}));
  for (const auto& f : fs::directory_iterator(dir)) {
    EXPECT_EQ(read_text_file(f.path()).find("sk-test-do-not-log"), std::string::npos);
  }
}
