// SPDX-License-Identifier: Apache-2.0

#include "care/prompts.hpp"

namespace care {
namespace prompts {

std::string proposal_system() {
  return "You are a medical imaging analyst. You receive one medical image and a "
         "question about it. Identify the entities (organs, lesions, devices, or "
         "other findings) that matter for answering the question. For each entity "
         "give its name and, when visible, a rough size and position. Respond with "
         "your reasoning inside <think>...</think>, then exactly one "
         "<answer>...</answer> span containing JSON of the form "
         "{\"entities\": [{\"name\": \"...\", \"size\": \"...\", \"position\": \"...\"}]}. "
         "Name at most 5 entities and do not repeat names.";
}

std::string proposal_user(const std::string& question) {
  return "Question: " + question +
         "\nList the entities most relevant to this question.";
}

std::string malformed_retry_reminder() {
  return "Your previous reply could not be parsed. Respond again following the "
         "required format exactly, with one <think> span and one <answer> span.";
}

std::string gvqa_system() {
  return "You are a medical visual question answering assistant. You receive the "
         "original image, one evidence view, and a question. The evidence view is "
         "one of three kinds. zoom: a cropped close-up of one instance, tagged "
         "with a line of the form (instance: NAME, confidence: P%). mask: a "
         "binary mask image of one instance, white foreground on black, tagged "
         "with the same line. global: the whole image marked as foreground, with "
         "no instance tag. Ground your reasoning in the evidence you were given. "
         "Respond with your reasoning inside <think>...</think> followed by "
         "exactly one <answer>...</answer> span holding only the final answer.";
}

std::string gvqa_user(const std::string& question, ClueKind clue,
                      const std::string& evidence_note) {
  std::string text = "Question: " + question + "\nEvidence kind: ";
  text += std::string(to_string(clue));
  if (!evidence_note.empty()) {
    text += "\n" + evidence_note;
  }
  return text;
}

std::string coordinator_system(int max_tool_calls, int max_review_rounds) {
  return "You coordinate specialist tools to answer a question about a medical "
         "image. Tools: propose_entities(image, question) names the relevant "
         "findings; segment_entity(image, entity_name) returns a mask id, a "
         "confidence percent, and a bounding box for one entity; "
         "grounded_vqa(image, question, clue_type[, entity_name, mask_id, "
         "confidence]) answers the question grounded in one evidence view, where "
         "clue_type is zoom, mask, or global. Plan which evidence the question "
         "needs, call tools one at a time, and adapt when a tool fails or "
         "returns low confidence. You must call grounded_vqa at least once "
         "before giving a final answer; prefer zoom evidence when a single "
         "instance matters. After each grounded_vqa result you may be asked to "
         "review its reasoning: verify the reasoning logic rather than making "
         "clinical judgments, and reply with one <answer> span holding JSON "
         "{\"consistent\": true|false, \"action\": \"accept\"|\"rerun_tool\"|"
         "\"overwrite\", \"corrected_answer\": \"...\"} where corrected_answer "
         "appears exactly when action is overwrite. You have at most " +
         std::to_string(max_tool_calls) + " tool calls and " +
         std::to_string(max_review_rounds) +
         " review rounds per answer. When you are done, reply with no tool "
         "calls to finish; the accepted grounded answer becomes the final "
         "answer.";
}

std::string coordinator_user(const std::string& question) {
  return "Question: " + question;
}

std::string coordinator_must_ground_reminder() {
  return "You have not called grounded_vqa yet. Call grounded_vqa at least once "
         "before finishing.";
}

std::string review_system() {
  return "You review an answer produced from visual evidence. Check whether the "
         "reasoning is internally consistent with the answer; verify the "
         "reasoning logic rather than making clinical judgments. Reply with "
         "exactly one <answer>...</answer> span holding JSON "
         "{\"consistent\": true|false, \"action\": \"accept\"|\"rerun_tool\"|"
         "\"overwrite\", \"corrected_answer\": \"...\"}. Use accept when the "
         "reasoning supports the answer, rerun_tool when the evidence itself "
         "looks unreliable, and overwrite with a corrected_answer when the "
         "reasoning is sound but the stated answer does not follow from it. "
         "Include corrected_answer only with overwrite.";
}

std::string review_user(const std::string& cot, const std::string& answer) {
  return "Review the following grounded answer. Check whether the reasoning "
         "supports the answer; verify the reasoning logic rather than making "
         "clinical judgments.\nReasoning: " +
         cot + "\nAnswer: " + answer +
         "\nReply with one <answer> span holding the review JSON.";
}

std::string review_retry_reminder() {
  return "Your review could not be parsed. Reply with exactly one <answer> span "
         "holding JSON {\"consistent\": true|false, \"action\": \"accept\"|"
         "\"rerun_tool\"|\"overwrite\", \"corrected_answer\": \"...\"}.";
}

std::string judge_system() {
  return "You judge whether a predicted answer matches a reference answer for a "
         "medical question. Judge meaning, not wording. Reply with exactly one "
         "word: yes or no.";
}

std::string judge_user(const std::string& question, const std::string& gt,
                       const std::string& pred) {
  return "Question: " + question + "\nReference answer: " + gt +
         "\nPredicted answer: " + pred + "\nDo they match? Answer yes or no.";
}

std::string judge_retry_reminder() {
  return "Answer strictly with one word: yes or no.";
}

std::string synth_system() {
  return "You write one training question for a medical image, using the "
         "segmentation metadata you are given. The answer to the question must "
         "be exactly the listed entity names, so ask about those entities "
         "without naming them in the question. Write only the question text, "
         "nothing else.";
}

std::string synth_user(const std::string& metadata_block, const std::string& task_name,
                       const std::string& entity_list) {
  return "Image metadata:\n" + metadata_block + "\nTask style: " + task_name +
         "\nTarget entities: " + entity_list + "\nWrite the question.";
}

}  // namespace prompts
}  // namespace care
