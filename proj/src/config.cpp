// SPDX-License-Identifier: Apache-2.0

#include "care/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "care/text.hpp"

namespace care {

namespace {

const char* kKeys[] = {
    "tau_c",        "max_cot_length",  "group_size",      "eps_low",
    "eps_high",     "seed",            "max_tool_calls",  "max_review_rounds",
    "workers",      "pad_frac",        "bin_threshold",   "max_entities",
    "evidence_cap", "sim_threshold",   "chat_endpoint",   "segment_endpoint",
    "embed_endpoint", "judge_endpoint", "api_key",        "model",
};

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw ConfigInvalid("config: " + key + " is not a number: " + value);
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("config: " + key + " is not an integer: " + value);
  }
}

void check_range(const std::string& key, bool ok) {
  if (!ok) throw ConfigInvalid("config: " + key + " out of range");
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

void apply_config_value(EngineConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "tau_c") {
    cfg.tau_c = parse_double(key, value);
    check_range(key, cfg.tau_c >= 0.0 && cfg.tau_c <= 1.0);
  } else if (key == "max_cot_length") {
    const long long v = parse_int(key, value);
    check_range(key, v > 0);
    cfg.max_cot_length = static_cast<std::size_t>(v);
  } else if (key == "group_size") {
    const long long v = parse_int(key, value);
    check_range(key, v >= 2);
    cfg.group_size = static_cast<int>(v);
  } else if (key == "eps_low") {
    cfg.eps_low = parse_double(key, value);
    check_range(key, cfg.eps_low >= 0.0 && cfg.eps_low < 1.0);
  } else if (key == "eps_high") {
    cfg.eps_high = parse_double(key, value);
    check_range(key, cfg.eps_high >= 0.0);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "max_tool_calls") {
    const long long v = parse_int(key, value);
    check_range(key, v >= 1);
    cfg.max_tool_calls = static_cast<int>(v);
  } else if (key == "max_review_rounds") {
    const long long v = parse_int(key, value);
    check_range(key, v >= 0);
    cfg.max_review_rounds = static_cast<int>(v);
  } else if (key == "workers") {
    const long long v = parse_int(key, value);
    check_range(key, v >= 1);
    cfg.workers = static_cast<int>(v);
  } else if (key == "pad_frac") {
    cfg.pad_frac = parse_double(key, value);
    check_range(key, cfg.pad_frac >= 0.0);
  } else if (key == "bin_threshold") {
    cfg.bin_threshold = parse_double(key, value);
    check_range(key, cfg.bin_threshold >= 0.0 && cfg.bin_threshold <= 1.0);
  } else if (key == "max_entities") {
    const long long v = parse_int(key, value);
    check_range(key, v >= 1);
    cfg.max_entities = static_cast<int>(v);
  } else if (key == "evidence_cap") {
    const long long v = parse_int(key, value);
    check_range(key, v >= 1);
    cfg.evidence_cap = static_cast<int>(v);
  } else if (key == "sim_threshold") {
    cfg.sim_threshold = parse_double(key, value);
    check_range(key, cfg.sim_threshold >= -1.0 && cfg.sim_threshold <= 1.0);
  } else if (key == "chat_endpoint") {
    cfg.chat_endpoint = value;
  } else if (key == "segment_endpoint") {
    cfg.segment_endpoint = value;
  } else if (key == "embed_endpoint") {
    cfg.embed_endpoint = value;
  } else if (key == "judge_endpoint") {
    cfg.judge_endpoint = value;
  } else if (key == "api_key") {
    cfg.api_key = value;
  } else if (key == "model") {
    cfg.model = value;
  } else {
    throw ConfigInvalid("config: unknown key " + key);
  }
}

EngineConfig load_config(const std::string& path_or_empty,
                         const std::map<std::string, std::string>* env_override) {
  EngineConfig cfg;

  if (!path_or_empty.empty()) {
    std::ifstream in(path_or_empty);
    if (!in) throw ConfigInvalid("config: cannot open " + path_or_empty);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const std::size_t eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw ConfigInvalid("config: missing '=' at line " + std::to_string(line_no));
      }
      apply_config_value(cfg, trim(stripped.substr(0, eq)),
                         trim(stripped.substr(eq + 1)));
    }
  }

  for (const char* key : kKeys) {
    const std::string env_key = "CARE_" + upper(key);
    std::optional<std::string> value;
    if (env_override) {
      const auto it = env_override->find(env_key);
      if (it != env_override->end()) value = it->second;
    } else if (const char* env = std::getenv(env_key.c_str())) {
      value = std::string(env);
    }
    if (value) apply_config_value(cfg, key, *value);
  }
  return cfg;
}

}  // namespace care
