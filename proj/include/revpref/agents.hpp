#pragma once

// Decision makers the harness can talk to: a chat endpoint over HTTP, or
// synthetic agents that read the question text and answer in text.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "revpref/task_generation.hpp"

namespace revpref {

struct ChatMessage {
  std::string role;  // system, assistant or user
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Harness bookkeeping that travels with a request. Endpoints never see it;
// synthetic agents and test wrappers use it to stay deterministic under
// concurrency.
struct RequestContext {
  std::string trial_id;
  std::size_t trial_index = 0;  // position of the trial in the run
  std::size_t rounds_per_trial = kDefaultRounds;
  std::size_t round = 0;
  std::string phase = "decision";  // or "comprehension"
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;
  RequestContext context;
};

class AgentEndpoint {
 public:
  virtual ~AgentEndpoint() = default;

  // Reply text for the last user message. Throws EndpointError.
  virtual std::string complete(const ChatRequest& request) = 0;

  virtual std::string name() const = 0;

  // Model name sent with each request and recorded with the trial.
  virtual std::string model() const { return name(); }

  // Wall-clock timestamps go into trial records only for remote agents, so
  // synthetic runs stay byte-identical.
  virtual bool remote() const { return false; }
};

// Allocation rule for a synthetic agent: points to A given the units per
// point of A and B, and utility over units for picking discrete options.
class Preference {
 public:
  virtual ~Preference() = default;
  virtual double points_to_a(double ra, double rb, double budget) const = 0;
  virtual double utility(double xa, double xb) const = 0;
};

std::unique_ptr<Preference> cobb_douglas(double alpha);
// rho < 1; rho = 0 is Cobb-Douglas and rho = -infinity is Leontief.
std::unique_ptr<Preference> ces(double rho, double alpha);
// All points to the higher return; ties go to A.
std::unique_ptr<Preference> corner_max_return();

// Canned reply to comprehension questions.
inline constexpr char kComprehensionReply[] = "Understood.";
inline constexpr char kRefusalReply[] =
    "As an AI language model, I am not capable of making decisions on my own.";

// Answers every decision question by maximising `preference` on the budget
// read from the question text.
std::unique_ptr<AgentEndpoint> maximizer_agent(std::string name,
                                               std::shared_ptr<const Preference> preference);

// Uniform allocation a ~ U[0, budget] (or a uniform option when discrete).
// Draws depend only on (seed, trial id, round).
std::unique_ptr<AgentEndpoint> random_uniform_agent(std::uint64_t seed);

// With probability p answer like random_uniform, otherwise like `inner`.
std::unique_ptr<AgentEndpoint> tremble_agent(std::shared_ptr<AgentEndpoint> inner, double p,
                                             std::uint64_t seed);

// Refuses an exact share `rate` of decision rounds. Round g of the run
// (trial_index * rounds_per_trial + round) is refused when
// floor((g + 1) * rate) > floor(g * rate), with rate held as an exact
// fraction of 10^6; any prefix of L rounds then holds floor(L * rate)
// refusals.
std::unique_ptr<AgentEndpoint> refusing_agent(std::shared_ptr<AgentEndpoint> inner, double rate);

// Fails the first `failures` requests of each trial with HTTP 429.
std::unique_ptr<AgentEndpoint> flaky_agent(std::shared_ptr<AgentEndpoint> inner,
                                           std::size_t failures, long retry_after_ms = -1);

struct HttpAgentOptions {
  std::string endpoint_url;  // e.g. https://api.example.com/v1/chat/completions
  std::string model = "gpt-3.5-turbo";
  int connect_timeout_s = 10;
  int read_timeout_s = 120;
};

// Chat-completions client. The bearer token comes from REVPREF_API_KEY and
// is never written to logs, records or error messages.
std::unique_ptr<AgentEndpoint> http_agent(const HttpAgentOptions& options);

inline constexpr char kApiKeyEnv[] = "REVPREF_API_KEY";

// Builds an agent from a spec such as
//   cobb_douglas:alpha=0.5
//   ces:rho=-inf,alpha=0.5
//   tremble:p=0.1/cobb_douglas:alpha=0.3
//   refuse:rate=0.098/corner_max_return
//   flaky:failures=2/random_uniform
//   http:model=gpt-3.5-turbo
// Wrappers come first, separated by '/'. Throws InvalidParameter.
std::shared_ptr<AgentEndpoint> make_agent(const std::string& spec, std::uint64_t seed,
                                          const std::string& endpoint_url = "");

}  // namespace revpref
