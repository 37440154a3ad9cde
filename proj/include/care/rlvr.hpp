// SPDX-License-Identifier: Apache-2.0
//
// Group-relative advantage normalization and the token-level clipped
// surrogate objective with decoupled clip ranges, evaluated at desk scale
// from recorded log-probabilities.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace care {

struct GroupTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One sampled response: per-token log-probs under the current policy and
// the reference (rollout-time) policy, plus its scalar reward.
struct Rollout {
  std::vector<double> logp_policy;
  std::vector<double> logp_ref;
  double reward = 0.0;
};

struct RolloutGroup {
  std::vector<Rollout> rollouts;
};

struct DapoConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
};

struct GroupAdvantages {
  std::vector<double> values;
  // True when every reward in the group is identical (zero spread); the
  // advantages are then all zero rather than a division by zero.
  bool degenerate = false;
};

// (R_i - mean) / population_std over the group. Throws GroupTooSmall when
// fewer than two rewards are given.
GroupAdvantages group_advantages(const std::vector<double>& rewards);

// exp(logp_policy - logp_ref) per token. Throws LengthMismatch when the two
// arrays differ in length.
std::vector<double> token_ratios(const Rollout& r);

// Token-mean of min(r * A, clip(r, 1 - eps_low, 1 + eps_high) * A) across
// the group, normalized by the total token count. Throws GroupTooSmall when
// the group has fewer than two rollouts and LengthMismatch on ragged
// log-prob arrays. Zero-length rollouts contribute no tokens.
double dapo_objective(const RolloutGroup& group, const DapoConfig& cfg = {});

}  // namespace care
