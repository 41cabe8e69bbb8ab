#include "revpref/replies.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "revpref/errors.hpp"
#include "revpref/format.hpp"

namespace revpref {

std::string to_string(ReplyStatus status) {
  switch (status) {
    case ReplyStatus::valid: return "valid";
    case ReplyStatus::refusal: return "refusal";
    case ReplyStatus::malformed: return "malformed";
  }
  return "malformed";
}

ReplyStatus reply_status_from_string(std::string_view name) {
  if (name == "valid") return ReplyStatus::valid;
  if (name == "refusal") return ReplyStatus::refusal;
  if (name == "malformed") return ReplyStatus::malformed;
  throw InvalidParameter("unknown reply status '" + std::string(name) + "'");
}

namespace {

// Decimal numbers in reading order. A minus sign counts only at the start of
// a word, so "25-75" reads as 25 and 75.
std::vector<double> numbers_in(std::string_view text, std::size_t limit) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size() && out.size() < limit) {
    const auto c = static_cast<unsigned char>(text[i]);
    const bool starts_word = i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])) ||
                             text[i - 1] == '(';
    const bool negative = c == '-' && starts_word && i + 1 < text.size() &&
                          std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (!std::isdigit(c) && !negative) {
      ++i;
      continue;
    }
    std::size_t j = i + (negative ? 1 : 0);
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j + 1 < text.size() && text[j] == '.' && std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
      ++j;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    }
    out.push_back(std::strtod(std::string(text.substr(i, j - i)).c_str(), nullptr));
    i = j;
  }
  return out;
}

bool near(double x, double y) { return std::fabs(x - y) <= kBudgetTolerance; }

}  // namespace

ParsedReply parse_reply(std::string_view raw_text, double budget) {
  ParsedReply reply;
  reply.raw_text = std::string(raw_text);
  const auto nums = numbers_in(raw_text, 2);
  if (nums.empty()) {
    reply.status = ReplyStatus::refusal;
    return reply;
  }
  reply.status = ReplyStatus::malformed;
  if (nums.size() < 2 || nums[0] < 0.0 || nums[1] < 0.0) return reply;
  if (!near(nums[0] + nums[1], budget)) return reply;
  reply.status = ReplyStatus::valid;
  reply.points = PointOption{nums[0], nums[1]};
  return reply;
}

ParsedReply parse_reply(std::string_view raw_text, double budget, Variant variant,
                        const RoundSpec& round) {
  if (variant != Variant::discrete) return parse_reply(raw_text, budget);
  ParsedReply reply;
  reply.raw_text = std::string(raw_text);
  const auto nums = numbers_in(raw_text, 2);
  if (nums.empty()) {
    reply.status = ReplyStatus::refusal;
    return reply;
  }
  reply.status = ReplyStatus::malformed;
  if (nums.size() < 2) return reply;
  for (const auto& option : round.options) {
    // Compare against the bundle as printed in the question.
    const auto [ua, ub] = option_units(round, option);
    const bool as_units = near(nums[0], round_decimals(ua, 2)) && near(nums[1], round_decimals(ub, 2));
    const bool as_points = near(nums[0], option.a) && near(nums[1], option.b);
    if (as_units || as_points) {
      reply.status = ReplyStatus::valid;
      reply.points = option;
      return reply;
    }
  }
  return reply;
}

std::string format_reply(const PointOption& points) {
  return "I allocate " + format_shortest(points.a) + " points to the first and " +
         format_shortest(points.b) + " points to the second.";
}

std::string format_option_reply(double ua, double ub) {
  return "My best option is (" + format_trimmed(ua, 2) + ", " + format_trimmed(ub, 2) + ").";
}

}  // namespace revpref
