// SPDX-License-Identifier: Apache-2.0
//
// End-to-end CLI checks against the built binary: help output, exit codes,
// and the demo-fixture round trip through both pipelines.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "golden_util.hpp"
#include "temp_util.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string base =
      care_test::temp_dir("cli-io") + "/" + std::to_string(counter++);
  const std::string cmd = std::string(CARE_BIN) + " " + args + " > " + base +
                          ".out 2> " + base + ".err";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.code = WEXITSTATUS(status);
  result.out = slurp(base + ".out");
  result.err = slurp(base + ".err");
  return result;
}

}  // namespace

TEST_CASE("help text is stable and exits cleanly") {
  CliResult help = run_cli("--help");
  CHECK(help.code == 0);
  care_test::golden_compare("cli_help.txt", help.out);

  // Every surface is reachable from the help tree.
  for (const char* sub : {"flow", "coord", "eval", "synth", "rewards",
                          "replay", "fixtures"}) {
    CHECK(help.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("usage errors exit 2, runtime failures exit 1") {
  CHECK(run_cli("bogus").code == 2);
  CHECK(run_cli("flow run").code == 2);  // missing required options
  CHECK(run_cli("flow").code == 2);      // subcommand required

  const std::string dir = care_test::temp_dir("cli-codes");
  // A present image but an absent fixture file: config is fine, runtime is not.
  CliResult r = run_cli("replay --run nope --traces " + dir);
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("demo fixtures drive both pipelines to the same grounded answer") {
  const std::string dir = care_test::temp_dir("cli-demo");
  CliResult demo = run_cli("fixtures demo --out " + dir);
  REQUIRE(demo.code == 0);

  const std::string common = " --image " + dir + "/demo.png" +
                             " --question \"Which disease is shown in the CT "
                             "image?\" --fixtures " +
                             dir + "/chat.jsonl --seg-fixtures " + dir +
                             "/seg.jsonl --trace-dir " + dir + "/traces";

  CliResult flow = run_cli("flow run --run-id cli-flow-1" + common);
  CAPTURE(flow.err);
  REQUIRE(flow.code == 0);
  CHECK(flow.out == "Pneumonia\n");

  CliResult coord = run_cli("coord run --run-id cli-coord-1" + common);
  CAPTURE(coord.err);
  REQUIRE(coord.code == 0);
  CHECK(coord.out == "Pneumonia\n");

  // Re-running the same fixtures under a new run id is byte-identical.
  CliResult flow2 = run_cli("flow run --run-id cli-flow-2" + common);
  REQUIRE(flow2.code == 0);
  const std::string trace1 = slurp(dir + "/traces/runs/cli-flow-1.jsonl");
  std::string trace2 = slurp(dir + "/traces/runs/cli-flow-2.jsonl");
  REQUIRE_FALSE(trace1.empty());
  // Only the run id may differ between the two.
  size_t pos = 0;
  while ((pos = trace2.find("cli-flow-2", pos)) != std::string::npos) {
    trace2.replace(pos, 10, "cli-flow-1");
  }
  CHECK(trace1 == trace2);

  // A claimed run id cannot be reused.
  CHECK(run_cli("flow run --run-id cli-flow-1" + common).code == 1);

  // Recorded runs replay byte-for-byte.
  CliResult replay = run_cli("replay --run cli-coord-1 --traces " + dir +
                             "/traces");
  CAPTURE(replay.err);
  CHECK(replay.code == 0);
  CHECK(replay.out.find("identical") != std::string::npos);

  // The audit joins coordinator traces with ground truth.
  CliResult audit = run_cli("coord audit --traces " + dir + "/traces --gt " +
                            dir + "/items.jsonl");
  CAPTURE(audit.err);
  CHECK(audit.code == 0);
  CHECK(audit.out.find("overall") != std::string::npos);

  // The benchmark sweep scores the demo item perfectly.
  CliResult eval = run_cli("eval run --items " + dir + "/items.jsonl" +
                           " --pipeline flow --fixtures " + dir +
                           "/chat.jsonl --seg-fixtures " + dir +
                           "/seg.jsonl --out " + dir + "/report.md" +
                           " --trace-dir " + dir + "/eval-traces");
  CAPTURE(eval.err);
  CHECK(eval.code == 0);
  CHECK(eval.out.find("1.0000") != std::string::npos);
  CHECK_FALSE(slurp(dir + "/report.md").empty());
}

TEST_CASE("the reward self-check table passes") {
  CliResult check = run_cli("rewards check");
  CHECK(check.code == 0);
  CHECK(check.out.find("pass") != std::string::npos);
  CHECK(check.out.find("FAIL") == std::string::npos);
}
