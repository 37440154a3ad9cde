// SPDX-License-Identifier: Apache-2.0
//
// Static pipeline: entity proposal, confidence-gated segmentation, evidence
// view construction, one grounded answer per clue kind, majority vote.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "care/backends.hpp"
#include "care/evidence.hpp"
#include "care/rewards.hpp"
#include "care/trace.hpp"

namespace care {

struct ParseFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowConfig {
  double tau_c = 0.70;
  int max_entities = 5;
  double pad_frac = 0.10;
  float bin_threshold = 0.5f;
  int evidence_cap = 3;
  std::uint64_t seed = 42;
};

struct ClueAnswer {
  ClueKind clue = ClueKind::Global;
  std::string think;
  std::string answer;
  bool format_valid = false;
};

struct KeptMask {
  std::string entity;
  BinaryMask mask;
  Confidence confidence;
  BBox bbox;
};

struct FlowResult {
  std::string final_answer;
  std::array<ClueAnswer, 3> per_clue;  // zoom, mask, global
  std::vector<KeptMask> kept_masks;
  EntityProposal proposal;
  std::string trace_id;
};

struct FlowBackends {
  ChatBackend* proposal = nullptr;
  SegmentBackend* segmenter = nullptr;
  ChatBackend* gvqa = nullptr;
};

// Extracts the entity name list from a proposal reply: one <answer> span
// holding {"entities": [...]} where items are names or objects carrying a
// name (size/position hints are parsed and discarded). Whitespace is
// normalized and duplicates are dropped preserving order. Throws
// ParseFailure on malformed replies or an empty list.
std::vector<std::string> parse_entity_answer(const std::string& raw);

// One proposal call (plus one corrective retry on a malformed reply).
// Degrades to an empty proposal when the retry also fails to parse.
EntityProposal propose_entities(const ImageRef& image, const std::string& question,
                                ChatBackend& chat, int max_entities);

// One grounded call conditioned on the original image plus the evidence
// views. Shared by the static pipeline and the planner's grounded_vqa tool.
// A reply without the expected spans still answers, with format_valid false.
ClueAnswer grounded_answer(ChatBackend& gvqa, const ImageRef& image,
                           const std::string& question, ClueKind clue,
                           const std::vector<EvidenceView>& views);

// Majority vote over normalized answers. A strict majority wins and is
// reported with the text of its highest-priority member (zoom, then mask,
// then global); three-way divergence falls back to the zoom answer.
std::string majority_vote(const std::array<ClueAnswer, 3>& answers);

// Full pipeline over one image/question. Exactly three grounded calls are
// made; when no mask survives the confidence gate, all three carry global
// evidence. Traces through ctx when a writer is attached.
FlowResult run_flow(const ImageRef& image, const std::string& question,
                    const FlowBackends& backends, const FlowConfig& cfg,
                    RunContext& ctx);

}  // namespace care
