#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "revpref/task_generation.hpp"

namespace revpref {

enum class ReplyStatus { valid, refusal, malformed };

std::string to_string(ReplyStatus status);
ReplyStatus reply_status_from_string(std::string_view name);

struct ParsedReply {
  ReplyStatus status = ReplyStatus::refusal;
  std::optional<PointOption> points;  // set only when valid
  std::string raw_text;
};

// Continuous variants: the first two numbers in the text are the points for A
// and B. No number at all is a refusal; anything else that is not two
// non-negative numbers summing to the budget (within 1e-6) is malformed.
//
// Discrete variant: the first two numbers must name one of the round's
// options, either as the listed bundle in units or as its point allocation.
ParsedReply parse_reply(std::string_view raw_text, double budget, Variant variant,
                        const RoundSpec& round);
ParsedReply parse_reply(std::string_view raw_text, double budget);

// Machine-formatted answers, as written by the synthetic agents.
// Numbers are written in shortest round-trip form, so parse_reply recovers
// the exact doubles.
std::string format_reply(const PointOption& points);
std::string format_option_reply(double units_a, double units_b);  // 2 decimals, trimmed

}  // namespace revpref
