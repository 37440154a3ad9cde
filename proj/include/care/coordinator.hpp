// SPDX-License-Identifier: Apache-2.0
//
// Dynamic coordination: a planner model drives the entity/segmentation/
// grounded-VQA tools under explicit budgets, reviews each grounded answer,
// and must ground at least once before finishing. Final answers originate
// from a grounded result or an explicit overwrite verdict, never from the
// planner's free text.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "care/flow.hpp"

namespace care {

struct ProtocolViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoordBudget {
  int max_tool_calls = 8;
  int max_review_rounds = 2;
};

enum class ReviewAction { Accept, RerunTool, Overwrite };

struct ReviewVerdict {
  bool consistent = true;
  ReviewAction action = ReviewAction::Accept;
  std::optional<std::string> corrected_answer;
  // Set when both verdict attempts were unparseable and the engine degraded
  // to accept.
  bool defaulted = false;
};

struct CoordMessage {
  std::string text;
};
struct ToolCallRec {
  std::string name;
  nlohmann::json args;
};
struct ToolResultRec {
  std::string name;
  nlohmann::json result;
  bool error = false;
};
struct ReviewRec {
  ReviewVerdict verdict;
  std::string cot;
  std::string answer;
};

using TranscriptEvent = std::variant<CoordMessage, ToolCallRec, ToolResultRec, ReviewRec>;

struct AgentTranscript {
  std::vector<TranscriptEvent> events;
  int tool_calls = 0;
  int gvqa_calls = 0;
  int review_rounds = 0;
  std::vector<std::string> warnings;
};

struct CoordResult {
  std::string final_answer;
  // The grounded answer the final answer derives from, before review edits.
  std::string pre_review_answer;
  std::optional<ClueKind> final_clue;
  AgentTranscript transcript;
  std::string trace_id;
};

struct CoordBackends {
  ChatBackend* coordinator = nullptr;
  ChatBackend* proposal = nullptr;
  SegmentBackend* segmenter = nullptr;
  ChatBackend* gvqa = nullptr;
};

// One constrained review exchange. Throws UnparseableVerdict when neither
// the reply nor one reprompt yields a well-formed verdict (a corrected
// answer is well-formed only with an overwrite action).
ReviewVerdict review_step(const std::string& cot, const std::string& answer,
                          ChatBackend& reviewer);

// Runs the agent loop. Throws ProtocolViolation when the planner finishes
// (or exhausts its budget) without a single grounded call, after one
// corrective reprompt.
CoordResult run_coord(const ImageRef& image, const std::string& question,
                      const CoordBackends& backends, const CoordBudget& budget,
                      const FlowConfig& cfg, RunContext& ctx);

// Post-hoc accounting of review edits against ground truth.
struct EditInput {
  std::string pre;
  std::string post;
  std::string gt;
  QType qtype = QType::Closed;
  std::string dataset = "all";
};

struct EditCell {
  std::uint64_t n = 0;
  std::uint64_t fixed = 0;          // wrong before, right after
  std::uint64_t broke = 0;          // right before, wrong after
  std::uint64_t unchanged = 0;
  std::uint64_t changed_wrong = 0;  // edited, wrong on both sides
  std::uint64_t changed_right = 0;  // edited, right on both sides
  double fixed_ratio = 0.0;
  double broke_ratio = 0.0;
  double delta = 0.0;               // fixed_ratio - broke_ratio, exactly
  double total_overwrite = 0.0;     // fixed_ratio + broke_ratio
};

struct EditTable {
  std::vector<std::pair<std::string, EditCell>> per_dataset;
  EditCell overall;
};

EditTable edit_accounting(const std::vector<EditInput>& runs);

}  // namespace care
