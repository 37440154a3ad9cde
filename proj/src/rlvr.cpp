// SPDX-License-Identifier: Apache-2.0

#include "care/rlvr.hpp"

#include <cmath>

#include "care/kernels.hpp"

namespace care {

GroupAdvantages group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw GroupTooSmall("group_advantages: need at least two rewards");
  }
  const double n = static_cast<double>(rewards.size());
  double sum = 0.0;
  for (double r : rewards) sum += r;
  const double mean = sum / n;
  double var_sum = 0.0;
  for (double r : rewards) {
    const double d = r - mean;
    var_sum += d * d;
  }
  const double std_dev = std::sqrt(var_sum / n);

  GroupAdvantages out;
  out.values.resize(rewards.size(), 0.0);
  if (std_dev == 0.0) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out.values[i] = (rewards[i] - mean) / std_dev;
  }
  return out;
}

std::vector<double> token_ratios(const Rollout& r) {
  if (r.logp_policy.size() != r.logp_ref.size()) {
    throw LengthMismatch("token_ratios: policy/reference length mismatch");
  }
  std::vector<double> ratios(r.logp_policy.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    ratios[i] = std::exp(r.logp_policy[i] - r.logp_ref[i]);
  }
  return ratios;
}

double dapo_objective(const RolloutGroup& group, const DapoConfig& cfg) {
  if (group.rollouts.size() < 2) {
    throw GroupTooSmall("dapo_objective: need at least two rollouts");
  }
  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  std::size_t total_tokens = 0;
  for (const auto& r : group.rollouts) {
    if (r.logp_policy.size() != r.logp_ref.size()) {
      throw LengthMismatch("dapo_objective: policy/reference length mismatch");
    }
    rewards.push_back(r.reward);
    total_tokens += r.logp_policy.size();
  }
  if (total_tokens == 0) return 0.0;

  const GroupAdvantages adv = group_advantages(rewards);
  const double clip_lo = 1.0 - cfg.eps_low;
  const double clip_hi = 1.0 + cfg.eps_high;
  double sum = 0.0;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const std::vector<double> ratios = token_ratios(group.rollouts[i]);
    sum += kernels::clipped_term_sum(ratios.data(), ratios.size(), adv.values[i],
                                     clip_lo, clip_hi);
  }
  return sum / static_cast<double>(total_tokens);
}

}  // namespace care
