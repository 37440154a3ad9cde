// SPDX-License-Identifier: Apache-2.0

#include "care/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "care/kernels.hpp"
#include "care/text.hpp"

namespace care {

namespace {

// True when pred is a single letter matching gt's option prefix, e.g.
// pred "b" against gt "b. lung opacity" (inputs already normalized).
bool option_letter_match(const std::string& pred, const std::string& gt) {
  if (pred.size() != 1 || !std::isalpha(static_cast<unsigned char>(pred[0]))) {
    return false;
  }
  if (gt.size() < 2 || gt[0] != pred[0]) return false;
  const char sep = gt[1];
  return sep == '.' || sep == ')' || sep == ':' || sep == ' ';
}

}  // namespace

SimilarityMatrix similarity_matrix(const std::vector<Embedding>& preds,
                                   const std::vector<Embedding>& gts) {
  auto unit = [](const Embedding& v) {
    const double norm_sq = kernels::dot_f32(v.data(), v.data(), v.size());
    if (!(norm_sq > 0.0)) {
      throw ZeroNormVector("similarity_matrix: zero-norm embedding");
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    Embedding out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = static_cast<float>(v[i] * inv);
    }
    return out;
  };

  std::vector<Embedding> pu(preds.size()), gu(gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) pu[i] = unit(preds[i]);
  for (std::size_t j = 0; j < gts.size(); ++j) gu[j] = unit(gts[j]);

  SimilarityMatrix s;
  s.rows = preds.size();
  s.cols = gts.size();
  s.data.resize(s.rows * s.cols, 0.0);
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) {
      s.at(i, j) = kernels::dot_f32(pu[i].data(), gu[j].data(), pu[i].size());
    }
  }
  return s;
}

double reward_sim(const SimilarityMatrix& s, const Assignment& k) {
  const std::size_t m = std::min(s.rows, s.cols);
  if (m == 0) throw std::invalid_argument("reward_sim: empty matrix");
  double total = 0.0;
  for (const auto& [i, j] : k.pairs) total += s.at(i, j);
  return total / static_cast<double>(m);
}

double reward_count(std::size_t proposed_count) {
  return proposed_count > 0 && proposed_count <= 5 ? 1.0 : 0.0;
}

double reward_repetition(const EntityProposal& proposal) {
  std::set<std::string> distinct;
  for (const auto& name : proposal.entities) distinct.insert(normalize_entity(name));
  const std::size_t repeats = proposal.entities.size() - distinct.size();
  return 1.0 / static_cast<double>(repeats + 1);
}

double reward_format(const std::string& raw_text) {
  return parse_think_answer(raw_text).has_value() ? 1.0 : 0.0;
}

double reward_length(std::size_t cot_len, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("reward_length: max_len must be > 0");
  const double frac =
      static_cast<double>(cot_len) / static_cast<double>(max_len);
  return 0.25 * std::min(1.0, frac);
}

double reward_accuracy(const std::string& pred, const std::string& gt, QType qtype) {
  const std::string p = normalize_answer(pred);
  const std::string g = normalize_answer(gt);
  if (g.empty()) return 0.0;
  if (p == g) return 1.0;
  if (qtype == QType::Closed) {
    return option_letter_match(p, g) ? 1.0 : 0.0;
  }
  return p.find(g) != std::string::npos ? 1.0 : 0.0;
}

double reward_entity_total(const RewardBreakdown& parts) {
  if (!parts.sim || !parts.count || !parts.repetition || !parts.format) {
    throw std::invalid_argument("reward_entity_total: missing component");
  }
  return *parts.sim + *parts.count + *parts.repetition + *parts.format;
}

double reward_egvqa_total(const RewardBreakdown& parts) {
  if (!parts.accuracy || !parts.format || !parts.length) {
    throw std::invalid_argument("reward_egvqa_total: missing component");
  }
  return *parts.accuracy + *parts.format + *parts.length;
}

ViableClueSet viable_clue_set(const std::map<ClueKind, std::string>& per_clue_preds,
                              const std::string& gt, QType qtype) {
  for (ClueKind k : {ClueKind::ZoomIn, ClueKind::MaskView, ClueKind::Global}) {
    if (!per_clue_preds.contains(k)) {
      throw std::invalid_argument("viable_clue_set: missing clue prediction");
    }
  }
  ViableClueSet viable;
  for (const auto& [clue, pred] : per_clue_preds) {
    if (reward_accuracy(pred, gt, qtype) == 1.0) viable.insert(clue);
  }
  return viable;
}

double reward_coordinator(ClueKind chosen, const ViableClueSet& viable) {
  return viable.contains(chosen) ? 1.0 : 0.0;
}

}  // namespace care
