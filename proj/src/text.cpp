// SPDX-License-Identifier: Apache-2.0

#include "care/text.hpp"

#include <cctype>

namespace care {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

// Positions of every occurrence of `needle` in `hay`.
std::size_t count_occurrences(std::string_view hay, std::string_view needle,
                              std::size_t* first) {
  std::size_t n = 0;
  std::size_t pos = hay.find(needle);
  if (first) *first = pos;
  while (pos != std::string_view::npos) {
    ++n;
    pos = hay.find(needle, pos + needle.size());
  }
  return n;
}

}  // namespace

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // swallow leading whitespace
  for (char c : s) {
    if (is_space(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize_entity(std::string_view s) {
  return collapse_whitespace(fold_case(s));
}

std::string normalize_answer(std::string_view s) {
  std::string out = trim(fold_case(s));
  while (!out.empty() && is_terminal_punct(out.back())) out.pop_back();
  return trim(out);
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::optional<std::string> extract_single_span(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::size_t open_pos = 0;
  std::size_t close_pos = 0;
  if (count_occurrences(text, open, &open_pos) != 1) return std::nullopt;
  if (count_occurrences(text, close, &close_pos) != 1) return std::nullopt;
  if (close_pos < open_pos + open.size()) return std::nullopt;
  const std::size_t begin = open_pos + open.size();
  return std::string(text.substr(begin, close_pos - begin));
}

std::optional<ThinkAnswer> parse_think_answer(std::string_view text) {
  const auto think = extract_single_span(text, "think");
  const auto answer = extract_single_span(text, "answer");
  if (!think || !answer) return std::nullopt;
  // The think span must close before the answer span opens.
  const std::size_t think_close = text.find("</think>");
  const std::size_t answer_open = text.find("<answer>");
  if (answer_open < think_close) return std::nullopt;
  if (trim(*think).empty() || trim(*answer).empty()) return std::nullopt;
  return ThinkAnswer{*think, *answer};
}

}  // namespace care
