#pragma once

// Protocol texts sent to the decision maker, and the reverse mapping from a
// decision question back to its round parameters (used by synthetic agents,
// which only ever see the text).

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "revpref/task_generation.hpp"

namespace revpref {

struct Demographics {
  int age = 0;
  std::string gender;
  std::string template_text = "You are a {age}-year-old {gender}.";
};

std::string render_preamble(const Demographics& demographics);

struct PromptScript {
  Domain domain = Domain::risk;
  Variant variant = Variant::baseline;
  std::string system_text;  // includes the preamble when one is set
  std::string assistant_text;
  std::vector<std::string> comprehension_questions;
  std::vector<std::string> decision_questions;  // one per sheet round
  std::optional<std::string> demographic_preamble;
  double temperature = 0.0;
};

PromptScript build_prompts(const TaskSheet& sheet,
                           const std::optional<Demographics>& demographics = std::nullopt,
                           double temperature = 0.0);

// Decision question for one round.
std::string decision_question(Domain domain, Variant variant, const RoundSpec& round);

// What a reader of a decision question can recover from it. For the
// continuous variants `units_per_point` holds the returns implied by the
// text (1 / shown price when reframed); for the discrete variant `options`
// holds the listed bundles in units.
struct QuestionView {
  Variant variant = Variant::baseline;
  std::optional<Domain> domain;  // not identifiable from discrete questions
  std::pair<double, double> units_per_point{0.0, 0.0};
  std::vector<std::pair<double, double>> options;
};

std::optional<QuestionView> read_question(std::string_view text);

}  // namespace revpref
