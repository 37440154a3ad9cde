// SPDX-License-Identifier: Apache-2.0
//
// Configuration precedence (defaults, then file, then environment) and
// validation of keys and ranges.

#include <doctest.h>

#include <fstream>
#include <map>
#include <string>

#include "care/config.hpp"
#include "temp_util.hpp"

namespace {

std::string write_config(const std::string& dir, const std::string& body) {
  const std::string path = dir + "/engine.conf";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("defaults stand alone") {
  care::EngineConfig cfg = care::load_config("");
  CHECK(cfg.tau_c == doctest::Approx(0.70));
  CHECK(cfg.max_cot_length == 200);
  CHECK(cfg.eps_low == doctest::Approx(0.2));
  CHECK(cfg.eps_high == doctest::Approx(0.28));
  CHECK(cfg.max_tool_calls == 8);
  CHECK(cfg.max_review_rounds == 2);
  CHECK(cfg.evidence_cap == 3);
  CHECK(cfg.chat_endpoint.empty());
}

TEST_CASE("file values override defaults; comments and blanks are ignored") {
  const std::string dir = care_test::temp_dir("config-file");
  const std::string path = write_config(dir,
                                        "# engine settings\n"
                                        "\n"
                                        "tau_c = 0.80\n"
                                        "max_tool_calls = 5\n"
                                        "chat_endpoint = http://127.0.0.1:9000\n"
                                        "model = care-7b  # trailing comment\n");
  care::EngineConfig cfg = care::load_config(path);
  CHECK(cfg.tau_c == doctest::Approx(0.80));
  CHECK(cfg.max_tool_calls == 5);
  CHECK(cfg.chat_endpoint == "http://127.0.0.1:9000");
  CHECK(cfg.model == "care-7b");
  // Untouched keys keep their defaults.
  CHECK(cfg.eps_high == doctest::Approx(0.28));
}

TEST_CASE("environment overrides beat the file") {
  const std::string dir = care_test::temp_dir("config-env");
  const std::string path = write_config(dir, "tau_c = 0.80\nseed = 7\n");
  std::map<std::string, std::string> env{
      {"CARE_TAU_C", "0.90"},
      {"CARE_MODEL", "env-model"},
  };
  care::EngineConfig cfg = care::load_config(path, &env);
  CHECK(cfg.tau_c == doctest::Approx(0.90));  // env wins over file
  CHECK(cfg.seed == 7);                       // file wins over default
  CHECK(cfg.model == "env-model");

  // Unrelated CARE_ variables must not be interpreted as config keys.
  std::map<std::string, std::string> noise{{"CARE_SIMD", "scalar"}};
  CHECK_NOTHROW(care::load_config(path, &noise));
}

TEST_CASE("unknown keys and malformed lines are rejected") {
  const std::string dir = care_test::temp_dir("config-bad");
  CHECK_THROWS_AS(care::load_config(write_config(dir, "taw_c = 0.7\n")),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::load_config(write_config(dir, "tau_c 0.7\n")),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::load_config(dir + "/absent.conf"), care::ConfigInvalid);
}

TEST_CASE("out-of-range and unparseable values are rejected") {
  care::EngineConfig cfg;
  CHECK_THROWS_AS(care::apply_config_value(cfg, "tau_c", "1.5"), care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "tau_c", "-0.1"), care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "tau_c", "abc"), care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "max_tool_calls", "0"),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "max_tool_calls", "-3"),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "eps_low", "-0.5"),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "max_cot_length", "0"),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "pad_frac", "-0.5"),
                  care::ConfigInvalid);
  CHECK_THROWS_AS(care::apply_config_value(cfg, "bin_threshold", "1.5"),
                  care::ConfigInvalid);

  CHECK_NOTHROW(care::apply_config_value(cfg, "tau_c", "0.0"));
  CHECK_NOTHROW(care::apply_config_value(cfg, "tau_c", "1.0"));
  CHECK(cfg.tau_c == doctest::Approx(1.0));
}

TEST_CASE("endpoint and credential strings pass through verbatim") {
  care::EngineConfig cfg;
  care::apply_config_value(cfg, "api_key", "sk-test-123");
  care::apply_config_value(cfg, "segment_endpoint", "http://127.0.0.1:9001");
  care::apply_config_value(cfg, "judge_endpoint", "http://127.0.0.1:9002");
  care::apply_config_value(cfg, "embed_endpoint", "http://127.0.0.1:9003");
  CHECK(cfg.api_key == "sk-test-123");
  CHECK(cfg.segment_endpoint == "http://127.0.0.1:9001");
  CHECK(cfg.judge_endpoint == "http://127.0.0.1:9002");
  CHECK(cfg.embed_endpoint == "http://127.0.0.1:9003");
}
