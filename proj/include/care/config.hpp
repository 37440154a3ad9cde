// SPDX-License-Identifier: Apache-2.0
//
// Flat key-value engine configuration. Precedence: built-in defaults, then
// config file, then CARE_-prefixed environment variables (key upper-cased).

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace care {

struct ConfigInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineConfig {
  double tau_c = 0.70;            // confidence threshold for keeping masks
  std::size_t max_cot_length = 200;  // length-reward saturation point
  int group_size = 8;             // rollouts per objective group
  double eps_low = 0.2;           // lower clip offset
  double eps_high = 0.28;         // upper clip offset
  std::uint64_t seed = 42;
  int max_tool_calls = 8;
  int max_review_rounds = 2;
  int workers = 1;
  double pad_frac = 0.10;         // zoom crop padding
  double bin_threshold = 0.5;     // mask binarization threshold
  int max_entities = 5;
  int evidence_cap = 3;           // kept masks per question
  double sim_threshold = 0.85;    // entity-set accuracy match threshold
  std::string chat_endpoint;      // proposal / grounded VQA / coordinator
  std::string segment_endpoint;
  std::string embed_endpoint;
  std::string judge_endpoint;
  std::string api_key;
  std::string model;
};

// Parses "key = value" lines; '#' starts a comment. Unknown keys throw
// ConfigInvalid, as do out-of-range values.
EngineConfig load_config(const std::string& path_or_empty,
                         const std::map<std::string, std::string>* env_override = nullptr);

// Applies one key; exposed for the CLI's flag handling.
void apply_config_value(EngineConfig& cfg, const std::string& key,
                        const std::string& value);

}  // namespace care
