// SPDX-License-Identifier: Apache-2.0
//
// Text normalization and the <think>/<answer> span grammar shared by the
// format reward, answer comparison, and all response parsers.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace care {

// ASCII lower-casing; bytes outside A-Z pass through.
std::string fold_case(std::string_view s);

// Strips leading and trailing ASCII whitespace.
std::string trim(std::string_view s);

// Collapses interior whitespace runs to single spaces, then trims.
std::string collapse_whitespace(std::string_view s);

// Entity-name normalization: case-fold + whitespace collapse + trim.
std::string normalize_entity(std::string_view s);

// Answer normalization: case-fold + trim + strip terminal punctuation.
std::string normalize_answer(std::string_view s);

// Count of whitespace-delimited words.
std::size_t word_count(std::string_view s);

// Content of the single <tag>...</tag> span, or nullopt unless the text
// contains exactly one opening and one closing tag in order.
std::optional<std::string> extract_single_span(std::string_view text, std::string_view tag);

struct ThinkAnswer {
  std::string think;
  std::string answer;
};

// Strict response grammar: exactly one non-empty <think> span followed by
// exactly one non-empty <answer> span. Returns nullopt on any violation.
std::optional<ThinkAnswer> parse_think_answer(std::string_view text);

}  // namespace care
