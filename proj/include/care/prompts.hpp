// SPDX-License-Identifier: Apache-2.0
//
// Engine-owned prompt text. Centralized so request digests stay stable and
// tests can pin exact strings.

#pragma once

#include <string>

#include "care/types.hpp"

namespace care {
namespace prompts {

// Entity proposal: asks for the most question-relevant findings as JSON.
std::string proposal_system();
std::string proposal_user(const std::string& question);

// Appended after a malformed reply to request one corrected attempt.
std::string malformed_retry_reminder();

// Grounded VQA over an original image plus evidence views.
std::string gvqa_system();
std::string gvqa_user(const std::string& question, ClueKind clue,
                      const std::string& evidence_note);

// Coordinator: tool surface, planning rules, and the review contract.
std::string coordinator_system(int max_tool_calls, int max_review_rounds);
std::string coordinator_user(const std::string& question);
std::string coordinator_must_ground_reminder();

// Review of one chain-of-thought / answer pair.
std::string review_system();
std::string review_user(const std::string& cot, const std::string& answer);
std::string review_retry_reminder();

// Strict yes/no answer judge.
std::string judge_system();
std::string judge_user(const std::string& question, const std::string& gt,
                       const std::string& pred);
std::string judge_retry_reminder();

// Question synthesis from segmentation metadata.
std::string synth_system();
std::string synth_user(const std::string& metadata_block, const std::string& task_name,
                       const std::string& entity_list);

}  // namespace prompts
}  // namespace care
