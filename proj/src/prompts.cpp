#include "revpref/prompts.hpp"

#include <cstdlib>
#include <regex>

#include "revpref/errors.hpp"

namespace revpref {

namespace {

constexpr char kSystemText[] =
    "I want to you act as a human decision maker. You will be given {rounds} rounds of "
    "decision-making tasks, and will be responsible for making decisions. You should use your "
    "best judgment to come up with solutions that you like most. My first request is 'You must "
    "provide your answers in every round.' If you do not provide an answer, I will assume that "
    "you make a random choice.";

struct DomainText {
  const char* assistant;
  std::vector<std::string> comprehension;
  const char* baseline;
  const char* reframed;
};

// Continuous templates take {A} and {B}; the discrete one takes {OPTIONS}.
constexpr char kDiscreteQuestion[] =
    "In this round, there are 11 options, which are {OPTIONS}. Please only tell me your best "
    "option in every round";

const DomainText& domain_text(Domain domain) {
  static const DomainText risk{
      "In every round, the decision maker has 100 points that need to be invested between A "
      "asset and asset B. The decision maker will get a return from one of the rounds randomly. "
      "In the selected paying round, the decision maker has a 50% chance to get the return from "
      "Asset A or the other 50% chance to get the return from Asset B.  First please only tell "
      "me the number of points for investing Asset A, then please only tell me the number of "
      "points for investing Asset B.",
      {"What is the probability you will get a return from asset A?",
       "If you invest 90 points to Asset A, and 10 points to Asset B. In this round, investing "
       "every 1 point for Asset A returns 0.8 dollars, investing every 1 point for Asset B return "
       "0.2 dollars. What return will you get?",
       "If you invest 90 points to Asset A, and 10 points to Asset B. In this round, investing "
       "every 1 point for Asset A returns 0.8 dollars, investing every 1 point for Asset B "
       "returns 0.2 dollars. Is there a chance to get 72 dollars?"},
      "In this round, investing every 1 point for Asset A returns {A} dollars and investing "
      "every 1 point for Asset B returns {B} dollars. What is your allocation?",
      "In this round, {A} points = 1 dollar of return from Asset A and {B} points = 1 dollar of "
      "return from Asset B. What is your allocation?"};
  static const DomainText time{
      "In every round, the decision maker has 100 points that need to be invested between today "
      "and one month later. The decision maker will get dollars today from the points invested "
      "today and will get a check that can be cashed in one month later from the points "
      "invested one month later. Please first only tell me the number of points for investing "
      "today, then only tell me the number of points for investing one month later.",
      {"If you invest 90 points to today, and 10 points to one month later. In this round, "
       "investing every 1 point for today returns 0.8 dollars cash today, investing every 1 point "
       "for one month later returns 0.2 dollars check which can be cashed one month later. What "
       "return will you get?",
       "In this round, investing every 1 point for today returns 0.8 dollars cash today, "
       "investing every 1 point for one month later returns 0.2 dollars check which can be "
       "cashed one month later. What is your allocation? Why?",
       "If you invest 90 points to today, and 10 points to one month later. In this round, "
       "investing every 1 point for today returns 0.8 dollars cash today, investing every 1 point "
       "for one month later return 0.2 dollars check which can be cashed one month later. What "
       "time can you get just the 2 dollars cash?"},
      "In this round, investing every 1 point for today returns {A} dollars today and investing "
      "every 1 point for one month later returns an {B} dollars check that can be cashed one "
      "month later. What is your allocation?",
      "In this round, {A} points = 1 dollar today and {B} points = 1 dollar check that can be "
      "cashed one month later. What is your allocation?"};
  static const DomainText social{
      "In every round, the decision maker is randomly matched with a new anonymous subject and "
      "there is no feedback across rounds. The decision maker has 100 points that need to be "
      "allocated between him/herself and the other one. The decision maker will get a return "
      "from the points allocated to him/herself and the other one will get a return from the "
      "points allocated. First please only tell me the number of points for the self of "
      "decision-maker, then please only tell me the number of points for the other",
      {"If you invest 90 points to yourself, and 10 points the other. In this round, investing "
       "every 1 point to yourself return 0.8 dollars for yourself, investing every 1 point to "
       "the other return 0.2 dollars for the other. What return will you get?",
       "If you invest 90 points to yourself, and  10 points to the other. In this round, "
       "investing every 1 point for yourself return 0.8 dollars for yourself, investing every 1 "
       "point for the other return 0.2 dollars for the other. Who will get just 2 dollars?",
       "In this round, investing every 1 point for Asset A return 0.8 dollars, investing every 1 "
       "point for Asset B return 0.2 dollars. Will you invest to the other? Why?"},
      "In this round, allocating every 1 point for yourself returns {A} dollars for yourself and "
      "allocating every 1 point for the other one returns {B} dollars for him/her. What is your "
      "allocation?",
      "In this round, {A} points = 1 dollar for yourself and {B} points = 1 dollar for the other "
      "one. What is your allocation?"};
  static const DomainText food{
      "In every round, the decision maker has 100 points that need to be spent between meat and "
      "tomatoes. The decision maker will get the amount of meat and tomatoes he/she spends on. "
      "First please only tell me the number of points for meat, then please only tell me the "
      "number of points for tomatoes.",
      {"What goods can you get from decisions?",
       "If you spend 90 points to meat, and 10 points to tomatoes later. In this round, spending "
       "every 1 point for meat will get 0.8 kg meat, spending every 1 point for meat will get "
       "0.2 kg tomatoes, What will you get?",
       "In this round, spending every 1 point for meat will get 0.8 kg meat, spending every 1 "
       "point for meat will get 0.2 kg tomatoes. What is your allocation? Why?"},
      "In this round, spending every 1 point will get {A} kg meat and spending every 1 point "
      "will get {B} kg tomatoes. What is your allocation?",
      "In this round, {A} points = 1 kg meat and {B} points = 1 kg tomatoes. What is your "
      "allocation?"};
  switch (domain) {
    case Domain::risk: return risk;
    case Domain::time: return time;
    case Domain::social: return social;
    case Domain::food: return food;
  }
  throw UnknownDomain("unknown domain");
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string regex_escape(std::string_view literal) {
  static const std::string special = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : literal) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

// Turns a template into a regex with one capture group per placeholder.
std::regex template_regex(std::string_view tmpl) {
  static const std::string number = R"(([0-9]+(?:\.[0-9]+)?))";
  std::string pattern;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      pattern += regex_escape(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find('}', open);
    pattern += regex_escape(tmpl.substr(pos, open - pos));
    pattern += tmpl.substr(open, close - open + 1) == "{OPTIONS}" ? "(.+)" : number;
    pos = close + 1;
  }
  return std::regex(pattern);
}

struct CompiledTemplate {
  std::optional<Domain> domain;
  Variant variant;
  std::regex pattern;
};

const std::vector<CompiledTemplate>& compiled_templates() {
  static const std::vector<CompiledTemplate> all = [] {
    std::vector<CompiledTemplate> out;
    for (Domain d : kAllDomains) {
      out.push_back({d, Variant::baseline, template_regex(domain_text(d).baseline)});
      out.push_back({d, Variant::price_reframed, template_regex(domain_text(d).reframed)});
    }
    out.push_back({std::nullopt, Variant::discrete, template_regex(kDiscreteQuestion)});
    return out;
  }();
  return all;
}

}  // namespace

std::string render_preamble(const Demographics& demographics) {
  auto text = replace_all(demographics.template_text, "{age}", std::to_string(demographics.age));
  return replace_all(std::move(text), "{gender}", demographics.gender);
}

std::string decision_question(Domain domain, Variant variant, const RoundSpec& round) {
  const auto params = round_to_prompt_parameters(round, variant);
  if (variant == Variant::discrete) return replace_all(kDiscreteQuestion, "{OPTIONS}", params.options);
  const auto& text = domain_text(domain);
  std::string q = variant == Variant::baseline ? text.baseline : text.reframed;
  q = replace_all(std::move(q), "{A}", params.a);
  return replace_all(std::move(q), "{B}", params.b);
}

PromptScript build_prompts(const TaskSheet& sheet, const std::optional<Demographics>& demographics,
                           double temperature) {
  const auto& text = domain_text(sheet.domain);
  PromptScript script;
  script.domain = sheet.domain;
  script.variant = sheet.variant;
  script.system_text = replace_all(kSystemText, "{rounds}", std::to_string(sheet.rounds.size()));
  if (demographics) {
    script.demographic_preamble = render_preamble(*demographics);
    script.system_text = *script.demographic_preamble + " " + script.system_text;
  }
  script.assistant_text = text.assistant;
  script.comprehension_questions = text.comprehension;
  for (const auto& round : sheet.rounds) {
    script.decision_questions.push_back(decision_question(sheet.domain, sheet.variant, round));
  }
  script.temperature = temperature;
  return script;
}

std::optional<QuestionView> read_question(std::string_view text) {
  const std::string s(text);
  std::smatch match;
  for (const auto& t : compiled_templates()) {
    if (!std::regex_match(s, match, t.pattern)) continue;
    QuestionView view;
    view.variant = t.variant;
    view.domain = t.domain;
    if (t.variant == Variant::discrete) {
      static const std::regex pair(R"(\(([0-9]+(?:\.[0-9]+)?), ([0-9]+(?:\.[0-9]+)?)\))");
      const std::string list = match[1].str();
      for (auto it = std::sregex_iterator(list.begin(), list.end(), pair);
           it != std::sregex_iterator(); ++it) {
        view.options.emplace_back(std::strtod((*it)[1].str().c_str(), nullptr),
                                  std::strtod((*it)[2].str().c_str(), nullptr));
      }
      if (view.options.empty()) return std::nullopt;
      return view;
    }
    const double a = std::strtod(match[1].str().c_str(), nullptr);
    const double b = std::strtod(match[2].str().c_str(), nullptr);
    if (!(a > 0.0) || !(b > 0.0)) return std::nullopt;
    view.units_per_point =
        t.variant == Variant::price_reframed ? std::make_pair(1.0 / a, 1.0 / b) : std::make_pair(a, b);
    return view;
  }
  return std::nullopt;
}

}  // namespace revpref
