// SPDX-License-Identifier: Apache-2.0
//
// Verifiable reward suite: entity-set similarity via optimal matching,
// count/repetition/format/length shaping terms, binary answer accuracy,
// the viable-clue set, and the coordinator selection reward.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "care/assignment.hpp"
#include "care/types.hpp"

namespace care {

struct ZeroNormVector : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Entity names as proposed, with the raw model text they came from.
struct EntityProposal {
  std::vector<std::string> entities;
  std::string raw_text;

  std::size_t count() const { return entities.size(); }
};

struct GroundTruthEntities {
  std::vector<std::string> entities;
};

// Component rewards; a field is set once its term has been computed.
struct RewardBreakdown {
  std::optional<double> sim;
  std::optional<double> count;
  std::optional<double> repetition;
  std::optional<double> format;
  std::optional<double> accuracy;
  std::optional<double> length;
};

using Embedding = std::vector<float>;

// Cosine similarities between unit-normalized embeddings, preds as rows.
// Throws ZeroNormVector when any input has zero norm.
SimilarityMatrix similarity_matrix(const std::vector<Embedding>& preds,
                                   const std::vector<Embedding>& gts);

// Mean matched similarity: sum of s over the assignment / min(rows, cols).
double reward_sim(const SimilarityMatrix& s, const Assignment& k);

// 1 when 0 < proposed_count <= 5, else 0.
double reward_count(std::size_t proposed_count);

// 1 / (r + 1) with r = count - distinct normalized names.
double reward_repetition(const EntityProposal& proposal);

// 1 when the raw text is exactly one non-empty <think> span followed by one
// non-empty <answer> span, else 0.
double reward_format(const std::string& raw_text);

// 0.25 * min(1, cot_len / max_len). Throws std::invalid_argument on
// max_len == 0.
double reward_length(std::size_t cot_len, std::size_t max_len);

// Binary accuracy after normalization (case-fold, trim, strip terminal
// punctuation). Closed questions also accept a bare option letter matching
// the ground truth's option prefix; open questions also accept predictions
// containing the ground truth.
double reward_accuracy(const std::string& pred, const std::string& gt, QType qtype);

// sim + count + repetition + format; throws std::invalid_argument when any
// of those terms is missing.
double reward_entity_total(const RewardBreakdown& parts);

// accuracy + format + length; throws std::invalid_argument when any of
// those terms is missing.
double reward_egvqa_total(const RewardBreakdown& parts);

using ViableClueSet = std::set<ClueKind>;

// Clues whose prediction scores accuracy 1 against the ground truth.
// Requires all three clues to be present.
ViableClueSet viable_clue_set(const std::map<ClueKind, std::string>& per_clue_preds,
                              const std::string& gt, QType qtype = QType::Closed);

// 1 when the chosen clue is viable, else 0.
double reward_coordinator(ClueKind chosen, const ViableClueSet& viable);

}  // namespace care
