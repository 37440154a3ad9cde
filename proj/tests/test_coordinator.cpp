// SPDX-License-Identifier: Apache-2.0
//
// Coordinator loop: verdict parsing, review actions, budget enforcement,
// the grounding requirement, and edit accounting.

#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "care/coordinator.hpp"
#include "care/scripted.hpp"
#include "care/trace.hpp"
#include "temp_util.hpp"

namespace {

care::Image base_image(int w = 16, int h = 16) {
  care::Image img;
  img.width = w;
  img.height = h;
  img.channels = 1;
  img.pixels.assign(static_cast<std::size_t>(w) * h, 90);
  return img;
}

care::ProbMask block_mask(int w, int h) {
  care::ProbMask m;
  m.width = w;
  m.height = h;
  m.values.assign(static_cast<std::size_t>(w) * h, 0.02f);
  for (int y = 1; y <= 4; ++y) {
    for (int x = 1; x <= 4; ++x) m.values[static_cast<std::size_t>(y) * w + x] = 0.98f;
  }
  return m;
}

care::RawToolCall call(const std::string& name, nlohmann::json args) {
  return {name, std::move(args)};
}

// Planner persona driven by a fixed list of turns; each entry is either a
// tool call or final text.
struct Script {
  std::vector<care::ChatResponse> turns;
  std::size_t next = 0;

  care::ChatResponse operator()(const care::ChatRequest&) {
    if (next >= turns.size()) return care::ChatResponse{"done", {}};
    return turns[next++];
  }
};

care::ChatResponse tool_turn(care::RawToolCall c) {
  care::ChatResponse r;
  r.tool_calls.push_back(std::move(c));
  return r;
}

}  // namespace

TEST_CASE("review_step parses verdicts, retries once, then gives up") {
  care::CallbackChatBackend accept([](const care::ChatRequest&) {
    return care::ChatResponse{
        "{\"consistent\": true, \"action\": \"accept\"}", {}};
  });
  care::ReviewVerdict v = care::review_step("cot", "ans", accept);
  CHECK(v.consistent);
  CHECK(v.action == care::ReviewAction::Accept);
  CHECK_FALSE(v.corrected_answer.has_value());
  CHECK_FALSE(v.defaulted);

  // Verdicts may arrive wrapped in an answer span.
  care::CallbackChatBackend wrapped([](const care::ChatRequest&) {
    return care::ChatResponse{
        "<think>check</think><answer>{\"consistent\": false, \"action\": "
        "\"overwrite\", \"corrected_answer\": \"pleural effusion\"}</answer>",
        {}};
  });
  v = care::review_step("cot", "ans", wrapped);
  CHECK_FALSE(v.consistent);
  CHECK(v.action == care::ReviewAction::Overwrite);
  CHECK(v.corrected_answer == std::optional<std::string>{"pleural effusion"});

  int calls = 0;
  care::CallbackChatBackend slow([&](const care::ChatRequest& req) {
    ++calls;
    if (calls == 1) return care::ChatResponse{"hmm, looks fine", {}};
    CHECK(req.turns.size() == 3);  // original + failed reply + reminder
    return care::ChatResponse{
        "{\"consistent\": true, \"action\": \"accept\"}", {}};
  });
  CHECK(care::review_step("cot", "ans", slow).action == care::ReviewAction::Accept);
  CHECK(calls == 2);

  care::CallbackChatBackend mute(
      [](const care::ChatRequest&) { return care::ChatResponse{"???", {}}; });
  CHECK_THROWS_AS(care::review_step("cot", "ans", mute), care::UnparseableVerdict);
}

TEST_CASE("review_step rejects structurally wrong verdicts") {
  auto verdict_of = [](const std::string& text) {
    care::CallbackChatBackend fixed(
        [text](const care::ChatRequest&) { return care::ChatResponse{text, {}}; });
    return care::review_step("cot", "ans", fixed);
  };
  // An overwrite without a corrected answer is not actionable.
  CHECK_THROWS_AS(
      verdict_of("{\"consistent\": false, \"action\": \"overwrite\"}"),
      care::UnparseableVerdict);
  // A corrected answer outside an overwrite signals confusion.
  CHECK_THROWS_AS(verdict_of("{\"consistent\": true, \"action\": \"accept\", "
                             "\"corrected_answer\": \"x\"}"),
                  care::UnparseableVerdict);
  CHECK_THROWS_AS(verdict_of("{\"action\": \"accept\"}"),
                  care::UnparseableVerdict);
  CHECK_THROWS_AS(verdict_of("{\"consistent\": true, \"action\": \"retry\"}"),
                  care::UnparseableVerdict);
}

namespace {

struct CoordHarness {
  care::ImageRef image = care::make_image_ref("img", base_image());
  Script planner_script;
  std::vector<care::ChatResponse> review_replies;
  std::size_t review_next = 0;
  int gvqa_backend_calls = 0;
  std::string gvqa_answer = "pneumonia";

  care::CoordResult run(const care::CoordBudget& budget,
                        care::RunContext* ctx_in = nullptr) {
    care::CallbackChatBackend coordinator([this](const care::ChatRequest& req) {
      // One backend serves planning and review; review requests are fresh
      // conversations whose first user turn presents the answer to review.
      if (!req.turns.empty() &&
          req.turns.front().text.rfind("Review the following", 0) == 0) {
        if (review_next < review_replies.size()) return review_replies[review_next++];
        return care::ChatResponse{
            "{\"consistent\": true, \"action\": \"accept\"}", {}};
      }
      return planner_script(req);
    });
    care::CallbackChatBackend proposal([](const care::ChatRequest&) {
      return care::ChatResponse{
          "<think>t</think><answer>{\"entities\": [\"lesion\"]}</answer>", {}};
    });
    care::CallbackSegmentBackend segmenter([](const care::SegmentationRequest& req) {
      care::SegmentationResult res;
      res.mask = block_mask(req.image.image->width, req.image.image->height);
      return res;
    });
    care::CallbackChatBackend gvqa([this](const care::ChatRequest&) {
      ++gvqa_backend_calls;
      return care::ChatResponse{
          "<think>looking</think><answer>" + gvqa_answer + "</answer>", {}};
    });
    care::CoordBackends backends{&coordinator, &proposal, &segmenter, &gvqa};
    care::RunContext local;
    care::RunContext& ctx = ctx_in ? *ctx_in : local;
    return care::run_coord(image, "what?", backends, budget, {}, ctx);
  }
};

}  // namespace

TEST_CASE("a full plan: propose, segment, ground, accept") {
  CoordHarness h;
  h.planner_script.turns = {
      tool_turn(call("propose_entities", {{"question", "what?"}})),
      tool_turn(call("segment_entity", {{"entity_name", "lesion"}})),
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "zoom"},
                                      {"mask_id", "m1"}})),
      care::ChatResponse{"happy with the grounded answer", {}},
  };
  care::CoordResult r = h.run({});
  CHECK(r.final_answer == "pneumonia");
  CHECK(r.pre_review_answer == "pneumonia");
  CHECK(r.final_clue == std::optional<care::ClueKind>{care::ClueKind::ZoomIn});
  CHECK(r.transcript.tool_calls == 3);
  CHECK(r.transcript.gvqa_calls == 1);
  CHECK(r.transcript.warnings.empty());
}

TEST_CASE("an overwrite verdict replaces the final answer only") {
  CoordHarness h;
  h.planner_script.turns = {
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "global"}})),
      care::ChatResponse{"done", {}},
  };
  h.review_replies = {care::ChatResponse{
      "{\"consistent\": false, \"action\": \"overwrite\", "
      "\"corrected_answer\": \"tuberculosis\"}",
      {}}};
  care::CoordResult r = h.run({});
  CHECK(r.final_answer == "tuberculosis");
  CHECK(r.pre_review_answer == "pneumonia");  // grounded answer preserved
  CHECK(r.transcript.review_rounds >= 1);
}

TEST_CASE("a rerun verdict repeats the grounded call within budget") {
  CoordHarness h;
  h.planner_script.turns = {
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "global"}})),
      care::ChatResponse{"done", {}},
  };
  h.review_replies = {
      care::ChatResponse{"{\"consistent\": false, \"action\": \"rerun_tool\"}", {}},
      care::ChatResponse{"{\"consistent\": true, \"action\": \"accept\"}", {}},
  };
  care::CoordResult r = h.run({});
  CHECK(r.final_answer == "pneumonia");
  // One planner-issued grounded call plus one review-triggered rerun.
  CHECK(h.gvqa_backend_calls == 2);
  CHECK(r.transcript.gvqa_calls == 2);
  // The rerun also consumed tool budget.
  CHECK(r.transcript.tool_calls == 2);
}

TEST_CASE("two unparseable verdicts degrade to accept with a warning") {
  CoordHarness h;
  h.planner_script.turns = {
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "global"}})),
      care::ChatResponse{"done", {}},
  };
  h.review_replies = {
      care::ChatResponse{"gibberish", {}},
      care::ChatResponse{"more gibberish", {}},
  };
  care::CoordResult r = h.run({});
  CHECK(r.final_answer == "pneumonia");
  REQUIRE_FALSE(r.transcript.warnings.empty());
}

TEST_CASE("a planner that never grounds is reprompted, then rejected") {
  CoordHarness h;
  h.planner_script.turns = {
      care::ChatResponse{"I can answer directly: pneumonia", {}},
      care::ChatResponse{"final answer: pneumonia", {}},
  };
  CHECK_THROWS_AS(h.run({}), care::ProtocolViolation);
  // The reprompt consumed the second scripted turn.
  CHECK(h.planner_script.next == 2);
}

TEST_CASE("budget exhaustion before grounding is a protocol violation") {
  CoordHarness h;
  for (int i = 0; i < 4; ++i) {
    h.planner_script.turns.push_back(
        tool_turn(call("propose_entities", {{"question", "what?"}})));
  }
  care::CoordBudget tight;
  tight.max_tool_calls = 2;
  CHECK_THROWS_AS(h.run(tight), care::ProtocolViolation);
}

TEST_CASE("budget exhaustion after grounding falls back to the last answer") {
  CoordHarness h;
  h.planner_script.turns = {
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "global"}})),
      tool_turn(call("propose_entities", {{"question", "what?"}})),
      tool_turn(call("propose_entities", {{"question", "what?"}})),
      tool_turn(call("propose_entities", {{"question", "what?"}})),
  };
  care::CoordBudget tight;
  tight.max_tool_calls = 2;
  care::CoordResult r = h.run(tight);
  CHECK(r.final_answer == "pneumonia");
  CHECK(r.transcript.tool_calls <= tight.max_tool_calls);
}

TEST_CASE("invalid tool calls surface as error results, not crashes") {
  CoordHarness h;
  h.planner_script.turns = {
      // Unknown mask id: the call errors and the planner sees the error.
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "zoom"},
                                      {"mask_id", "m9"}})),
      tool_turn(call("grounded_vqa", {{"question", "what?"},
                                      {"clue_type", "global"}})),
      care::ChatResponse{"done", {}},
  };
  care::CoordResult r = h.run({});
  CHECK(r.final_answer == "pneumonia");
  bool saw_error = false;
  for (const auto& ev : r.transcript.events) {
    if (const auto* res = std::get_if<care::ToolResultRec>(&ev)) {
      saw_error = saw_error || res->error;
    }
  }
  CHECK(saw_error);
  // The failed call still consumed budget.
  CHECK(r.transcript.tool_calls == 2);
}

TEST_CASE("edit accounting: identity, ratios, and per-dataset split") {
  std::vector<care::EditInput> runs;
  // dataset a: one fix, one break, two untouched.
  runs.push_back({"wrong", "gt", "gt", care::QType::Closed, "a"});
  runs.push_back({"gt", "wrong", "gt", care::QType::Closed, "a"});
  runs.push_back({"gt", "gt", "gt", care::QType::Closed, "a"});
  runs.push_back({"no", "no", "gt", care::QType::Closed, "a"});
  // dataset b: an edit that stays wrong and an edit that stays right (a bare
  // option letter expanded to the full option is still correct).
  runs.push_back({"x", "y", "gt", care::QType::Closed, "b"});
  runs.push_back(
      {"B", "B. Lung opacity", "B. Lung opacity", care::QType::Closed, "b"});

  care::EditTable table = care::edit_accounting(runs);
  REQUIRE(table.per_dataset.size() == 2);
  CHECK(table.per_dataset[0].first == "a");
  const care::EditCell& a = table.per_dataset[0].second;
  CHECK(a.n == 4);
  CHECK(a.fixed == 1);
  CHECK(a.broke == 1);
  CHECK(a.unchanged == 2);
  CHECK(a.fixed_ratio == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(a.delta == 0.0);  // one fix cancels one break, exactly
  CHECK(a.total_overwrite == doctest::Approx(0.5).epsilon(1e-15));

  const care::EditCell& b = table.per_dataset[1].second;
  CHECK(b.n == 2);
  CHECK(b.changed_wrong == 1);
  CHECK(b.changed_right == 1);  // right before and after, text still edited
  CHECK(b.fixed == 0);
  CHECK(b.broke == 0);

  CHECK(table.overall.n == 6);
  CHECK(table.overall.fixed == 1);
  CHECK(table.overall.broke == 1);

  // The identity: delta equals the post-edit minus pre-edit accuracy.
  double pre = 0.0, post = 0.0;
  for (const auto& r : runs) {
    pre += care::reward_accuracy(r.pre, r.gt, r.qtype);
    post += care::reward_accuracy(r.post, r.gt, r.qtype);
  }
  const double acc_delta = (post - pre) / static_cast<double>(runs.size());
  CHECK(table.overall.delta == acc_delta);
}
