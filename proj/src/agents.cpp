#include "revpref/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>

#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/prompts.hpp"
#include "revpref/random.hpp"
#include "revpref/replies.hpp"

namespace revpref {

namespace {

void check_share(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
}

class CobbDouglas : public Preference {
 public:
  explicit CobbDouglas(double alpha) : alpha_(alpha) { check_share(alpha); }
  double points_to_a(double, double, double budget) const override { return alpha_ * budget; }
  double utility(double xa, double xb) const override {
    return std::pow(xa, alpha_) * std::pow(xb, 1.0 - alpha_);
  }

 private:
  double alpha_;
};

class Ces : public Preference {
 public:
  Ces(double rho, double alpha) : rho_(rho), alpha_(alpha) {
    check_share(alpha);
    if (!(rho < 1.0) || std::isnan(rho)) throw InvalidParameter("rho must be below 1");
  }

  // Expenditure share on A at points-per-unit prices pa, pb:
  //   a^s pa^(1-s) / (a^s pa^(1-s) + (1-a)^s pb^(1-s)),  s = 1 / (1 - rho).
  // At rho = -inf, s = 0 and the share is pa / (pa + pb), equal units.
  double points_to_a(double ra, double rb, double budget) const override {
    const double s = 1.0 / (1.0 - rho_);
    const double pa = 1.0 / ra;
    const double pb = 1.0 / rb;
    const double wa = std::pow(alpha_, s) * std::pow(pa, 1.0 - s);
    const double wb = std::pow(1.0 - alpha_, s) * std::pow(pb, 1.0 - s);
    return budget * wa / (wa + wb);
  }

  double utility(double xa, double xb) const override {
    if (std::isinf(rho_)) return std::min(xa, xb);
    if (rho_ == 0.0) return std::pow(xa, alpha_) * std::pow(xb, 1.0 - alpha_);
    return std::pow(alpha_ * std::pow(xa, rho_) + (1.0 - alpha_) * std::pow(xb, rho_), 1.0 / rho_);
  }

 private:
  double rho_;
  double alpha_;
};

class CornerMaxReturn : public Preference {
 public:
  double points_to_a(double ra, double rb, double budget) const override {
    return ra >= rb ? budget : 0.0;
  }
  double utility(double xa, double xb) const override { return xa + xb; }
};

const ChatMessage* last_user_message(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return &*it;
  }
  return nullptr;
}

std::optional<QuestionView> question_of(const ChatRequest& request) {
  const auto* msg = last_user_message(request);
  if (!msg) return std::nullopt;
  return read_question(msg->content);
}

std::string continuous_reply(double a, double budget) {
  a = std::clamp(a, 0.0, budget);
  return format_reply({a, budget - a});
}

constexpr char kUnreadable[] = "I could not understand the question.";

class MaximizerAgent : public AgentEndpoint {
 public:
  MaximizerAgent(std::string name, std::shared_ptr<const Preference> pref)
      : name_(std::move(name)), pref_(std::move(pref)) {}

  std::string complete(const ChatRequest& request) override {
    if (request.context.phase == "comprehension") return kComprehensionReply;
    const auto q = question_of(request);
    if (!q) return kUnreadable;
    if (q->variant == Variant::discrete) {
      std::size_t best = 0;
      double best_u = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < q->options.size(); ++k) {
        const double u = pref_->utility(q->options[k].first, q->options[k].second);
        if (u > best_u) {
          best_u = u;
          best = k;
        }
      }
      return format_option_reply(q->options[best].first, q->options[best].second);
    }
    const auto [ra, rb] = q->units_per_point;
    return continuous_reply(pref_->points_to_a(ra, rb, kDefaultBudget), kDefaultBudget);
  }

  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::shared_ptr<const Preference> pref_;
};

class RandomUniformAgent : public AgentEndpoint {
 public:
  explicit RandomUniformAgent(std::uint64_t seed) : seed_(seed) {}

  std::string complete(const ChatRequest& request) override {
    if (request.context.phase == "comprehension") return kComprehensionReply;
    const auto q = question_of(request);
    if (!q) return kUnreadable;
    Rng rng(derive_seed(derive_seed(seed_, hash_string(request.context.trial_id)),
                        request.context.round));
    if (q->variant == Variant::discrete) {
      const auto k = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(q->options.size()) - 1));
      return format_option_reply(q->options[k].first, q->options[k].second);
    }
    return continuous_reply(rng.uniform(0.0, kDefaultBudget), kDefaultBudget);
  }

  std::string name() const override { return "random_uniform"; }

 private:
  std::uint64_t seed_;
};

class TrembleAgent : public AgentEndpoint {
 public:
  TrembleAgent(std::shared_ptr<AgentEndpoint> inner, double p, std::uint64_t seed)
      : inner_(std::move(inner)), p_(p), seed_(seed), noise_(mix64(seed)) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("tremble probability must lie in [0, 1]");
  }

  std::string complete(const ChatRequest& request) override {
    if (request.context.phase != "comprehension") {
      Rng rng(derive_seed(derive_seed(seed_, hash_string("tremble/" + request.context.trial_id)),
                          request.context.round));
      if (rng.bernoulli(p_)) return noise_.complete(request);
    }
    return inner_->complete(request);
  }

  std::string name() const override { return "tremble/" + inner_->name(); }
  std::string model() const override { return inner_->model(); }
  bool remote() const override { return inner_->remote(); }

 private:
  std::shared_ptr<AgentEndpoint> inner_;
  double p_;
  std::uint64_t seed_;
  RandomUniformAgent noise_;
};

class RefusingAgent : public AgentEndpoint {
 public:
  static constexpr std::uint64_t kScale = 1000000;

  RefusingAgent(std::shared_ptr<AgentEndpoint> inner, double rate) : inner_(std::move(inner)) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidParameter("refusal rate must lie in [0, 1]");
    per_million_ = static_cast<std::uint64_t>(std::llround(rate * kScale));
  }

  std::string complete(const ChatRequest& request) override {
    const auto& ctx = request.context;
    if (ctx.phase != "comprehension") {
      const std::uint64_t g = ctx.trial_index * ctx.rounds_per_trial + ctx.round;
      if ((g + 1) * per_million_ / kScale > g * per_million_ / kScale) return kRefusalReply;
    }
    return inner_->complete(request);
  }

  std::string name() const override { return "refuse/" + inner_->name(); }
  std::string model() const override { return inner_->model(); }
  bool remote() const override { return inner_->remote(); }

 private:
  std::shared_ptr<AgentEndpoint> inner_;
  std::uint64_t per_million_ = 0;
};

class FlakyAgent : public AgentEndpoint {
 public:
  FlakyAgent(std::shared_ptr<AgentEndpoint> inner, std::size_t failures, long retry_after_ms)
      : inner_(std::move(inner)), failures_(failures), retry_after_ms_(retry_after_ms) {}

  std::string complete(const ChatRequest& request) override {
    {
      std::lock_guard lock(mu_);
      auto& seen = calls_[request.context.trial_id];
      if (seen < failures_) {
        ++seen;
        throw EndpointError("HTTP 429 Too Many Requests", 429, true, retry_after_ms_);
      }
    }
    return inner_->complete(request);
  }

  std::string name() const override { return "flaky/" + inner_->name(); }
  std::string model() const override { return inner_->model(); }
  bool remote() const override { return inner_->remote(); }

 private:
  std::shared_ptr<AgentEndpoint> inner_;
  std::size_t failures_;
  long retry_after_ms_;
  std::mutex mu_;
  std::map<std::string, std::size_t> calls_;
};

// "kind:key=value,key=value"
struct SpecPart {
  std::string kind;
  std::map<std::string, std::string> params;
};

SpecPart parse_part(const std::string& text) {
  SpecPart part;
  const auto colon = text.find(':');
  part.kind = text.substr(0, colon);
  if (colon == std::string::npos) return part;
  std::size_t pos = colon + 1;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string kv = text.substr(pos, comma - pos);
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidParameter("agent parameter '" + kv + "' is not key=value");
    }
    part.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    pos = comma + 1;
  }
  return part;
}

double number_param(const SpecPart& part, const std::string& key,
                    std::optional<double> fallback = std::nullopt) {
  const auto it = part.params.find(key);
  if (it == part.params.end()) {
    if (fallback) return *fallback;
    throw InvalidParameter(part.kind + " needs " + key + "=");
  }
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0') {
    throw InvalidParameter(part.kind + ": " + key + " is not a number");
  }
  return v;
}

void check_keys(const SpecPart& part, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : part.params) {
    if (key == "api_key" || key == "key" || key == "token") {
      throw InvalidParameter("credentials are read from " + std::string(kApiKeyEnv) +
                             " only, never from an agent spec");
    }
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
      throw InvalidParameter(part.kind + ": unknown parameter '" + key + "'");
    }
  }
}

std::unique_ptr<AgentEndpoint> make_base(const SpecPart& part, std::uint64_t seed,
                                         const std::string& endpoint_url) {
  const std::string& kind = part.kind;
  if (kind == "cobb_douglas") {
    check_keys(part, {"alpha"});
    const double alpha = number_param(part, "alpha", 0.5);
    return maximizer_agent("cobb_douglas:alpha=" + format_sig(alpha, 12), cobb_douglas(alpha));
  }
  if (kind == "ces") {
    check_keys(part, {"rho", "alpha"});
    const double rho = number_param(part, "rho");
    const double alpha = number_param(part, "alpha", 0.5);
    return maximizer_agent("ces:rho=" + format_sig(rho, 12) + ",alpha=" + format_sig(alpha, 12),
                           ces(rho, alpha));
  }
  if (kind == "corner_max_return") {
    check_keys(part, {});
    return maximizer_agent("corner_max_return", corner_max_return());
  }
  if (kind == "random_uniform") {
    check_keys(part, {});
    return random_uniform_agent(seed);
  }
  if (kind == "http") {
    check_keys(part, {"model"});
    HttpAgentOptions opts;
    opts.endpoint_url = endpoint_url;
    if (auto it = part.params.find("model"); it != part.params.end()) opts.model = it->second;
    return http_agent(opts);
  }
  throw InvalidParameter("unknown agent kind '" + kind + "'");
}

}  // namespace

std::unique_ptr<Preference> cobb_douglas(double alpha) { return std::make_unique<CobbDouglas>(alpha); }

std::unique_ptr<Preference> ces(double rho, double alpha) {
  return std::make_unique<Ces>(rho, alpha);
}

std::unique_ptr<Preference> corner_max_return() { return std::make_unique<CornerMaxReturn>(); }

std::unique_ptr<AgentEndpoint> maximizer_agent(std::string name,
                                               std::shared_ptr<const Preference> preference) {
  return std::make_unique<MaximizerAgent>(std::move(name), std::move(preference));
}

std::unique_ptr<AgentEndpoint> random_uniform_agent(std::uint64_t seed) {
  return std::make_unique<RandomUniformAgent>(seed);
}

std::unique_ptr<AgentEndpoint> tremble_agent(std::shared_ptr<AgentEndpoint> inner, double p,
                                             std::uint64_t seed) {
  return std::make_unique<TrembleAgent>(std::move(inner), p, seed);
}

std::unique_ptr<AgentEndpoint> refusing_agent(std::shared_ptr<AgentEndpoint> inner, double rate) {
  return std::make_unique<RefusingAgent>(std::move(inner), rate);
}

std::unique_ptr<AgentEndpoint> flaky_agent(std::shared_ptr<AgentEndpoint> inner,
                                           std::size_t failures, long retry_after_ms) {
  return std::make_unique<FlakyAgent>(std::move(inner), failures, retry_after_ms);
}

std::shared_ptr<AgentEndpoint> make_agent(const std::string& spec, std::uint64_t seed,
                                          const std::string& endpoint_url) {
  std::vector<SpecPart> parts;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto slash = spec.find('/', pos);
    if (slash == std::string::npos) slash = spec.size();
    const std::string text = spec.substr(pos, slash - pos);
    if (text.empty()) throw InvalidParameter("empty agent spec segment in '" + spec + "'");
    parts.push_back(parse_part(text));
    pos = slash + 1;
  }
  std::shared_ptr<AgentEndpoint> agent = make_base(parts.back(), seed, endpoint_url);
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) {
    if (it->kind == "tremble") {
      check_keys(*it, {"p"});
      agent = tremble_agent(agent, number_param(*it, "p"), seed);
    } else if (it->kind == "refuse") {
      check_keys(*it, {"rate"});
      agent = refusing_agent(agent, number_param(*it, "rate"));
    } else if (it->kind == "flaky") {
      check_keys(*it, {"failures", "retry_after_ms"});
      const double failures = number_param(*it, "failures", 1.0);
      if (failures < 0.0) throw InvalidParameter("flaky: failures must be non-negative");
      agent = flaky_agent(agent, static_cast<std::size_t>(failures),
                          static_cast<long>(number_param(*it, "retry_after_ms", -1.0)));
    } else {
      throw InvalidParameter("unknown agent wrapper '" + it->kind + "'");
    }
  }
  return agent;
}

}  // namespace revpref
