// SPDX-License-Identifier: Apache-2.0
//
// Fixture-replay backends, recording wrappers, the hash embedder, fixture
// files, and the constrained yes/no judge.

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "care/codec.hpp"
#include "care/scripted.hpp"
#include "care/trace.hpp"
#include "temp_util.hpp"

namespace {

care::ChatRequest simple_request(const std::string& text) {
  care::ChatRequest req;
  req.turns.push_back({"user", text, {}});
  return req;
}

}  // namespace

TEST_CASE("scripted chat backend replays by digest and names misses") {
  care::ChatRequest req = simple_request("hello");
  const std::string digest = care::chat_request_digest(req);

  care::ScriptedChatBackend scripted;
  care::ChatResponse canned;
  canned.text = "world";
  scripted.add(digest, care::encode_chat_response(canned));
  CHECK(scripted.size() == 1);

  CHECK(scripted.chat_complete(req).text == "world");

  care::ChatRequest other = simple_request("goodbye");
  try {
    scripted.chat_complete(other);
    FAIL("expected MissingFixture");
  } catch (const care::MissingFixture& e) {
    // The miss must name the digest so a fixture can be recorded for it.
    CHECK(std::string(e.what()).find(care::chat_request_digest(other)) !=
          std::string::npos);
  }
}

TEST_CASE("scripted segmentation backend replays by digest") {
  care::Image img;
  img.width = 2;
  img.height = 1;
  img.channels = 1;
  img.pixels = {10, 200};
  care::SegmentationRequest req{care::make_image_ref("x", img), "lesion"};

  care::SegmentationResult res;
  res.mask.width = 2;
  res.mask.height = 1;
  res.mask.values = {0.9f, 0.1f};

  care::ScriptedSegmentBackend scripted;
  scripted.add(care::segmentation_request_digest(req),
               care::encode_segmentation_result(res));
  care::SegmentationResult got = scripted.segment_entity(req);
  CHECK(got.mask.values == res.mask.values);

  care::SegmentationRequest miss{care::make_image_ref("x", img), "nodule"};
  CHECK_THROWS_AS(scripted.segment_entity(miss), care::MissingFixture);
}

TEST_CASE("scripted embed backend replays by digest") {
  care::ScriptedEmbedBackend scripted;
  std::vector<std::string> texts{"a", "b"};
  scripted.add(care::embed_request_digest(texts), {{1.f, 0.f}, {0.f, 1.f}});
  auto got = scripted.embed_texts(texts);
  REQUIRE(got.size() == 2);
  CHECK(got[0][0] == 1.f);
  CHECK_THROWS_AS(scripted.embed_texts({"c"}), care::MissingFixture);
}

TEST_CASE("hash embedder is deterministic, unit-norm, and separates names") {
  care::HashEmbedBackend embed;
  auto a1 = embed.embed_texts({"lesion"});
  auto a2 = embed.embed_texts({"lesion"});
  CHECK(a1 == a2);

  // Normalization happens before hashing: case and padding do not matter.
  auto folded = embed.embed_texts({"  LESION "});
  CHECK(folded == a1);

  auto b = embed.embed_texts({"nodule"});
  double dot = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a1[0].size(); ++i) {
    dot += static_cast<double>(a1[0][i]) * b[0][i];
    norm += static_cast<double>(a1[0][i]) * a1[0][i];
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(dot) < 0.9);  // distinct names land on distinct directions

  // A different seed produces a different embedding space.
  care::HashEmbedBackend other(7);
  CHECK(other.embed_texts({"lesion"}) != a1);
}

TEST_CASE("recording wrappers append replayable trace records") {
  const std::string dir = care_test::temp_dir("recording");
  care::SteppingClock clock(250);
  care::TraceWriter writer(dir, "rec-1");
  care::RunContext ctx{&writer, &clock};

  care::CallbackChatBackend echo([](const care::ChatRequest& req) {
    care::ChatResponse resp;
    resp.text = "echo: " + req.turns.back().text;
    return resp;
  });
  care::RecordingChatBackend recording(echo, ctx, care::Component::Gvqa);

  care::ChatRequest req = simple_request("ping");
  care::ChatResponse live = recording.chat_complete(req);
  CHECK(live.text == "echo: ping");
  writer.close();

  care::TraceStore store(dir);
  std::vector<care::TraceRecord> records = store.replay_cursor("rec-1");
  REQUIRE(records.size() == 1);
  CHECK(records[0].component == care::Component::Gvqa);
  CHECK(records[0].request_digest == care::chat_request_digest(req));
  CHECK(records[0].micros == 250);  // one stepping-clock interval per call

  // The recorded response replays identically through a scripted backend.
  care::TraceFixtures fixtures = care::fixtures_from_trace(records);
  care::ScriptedChatBackend replay(fixtures.chat);
  CHECK(replay.chat_complete(req).text == live.text);
  CHECK(fixtures.segment.empty());
  CHECK(fixtures.embed.empty());
}

TEST_CASE("fixture files round-trip and reject corrupt records") {
  const std::string dir = care_test::temp_dir("fixtures");
  std::map<std::string, nlohmann::json> fixtures{
      {"0123456789abcdef", {{"k", 1}}},
      {"fedcba9876543210", "plain"},
  };
  const std::string path = dir + "/chat.jsonl";
  care::save_fixture_file(path, fixtures);
  CHECK(care::load_fixture_file(path) == fixtures);

  CHECK_THROWS_AS(care::load_fixture_file(dir + "/absent.jsonl"),
                  care::StoreUnavailable);

  std::ofstream bad(dir + "/bad.jsonl");
  bad << "{\"digest\": \"x\"}\n";  // record without a response field
  bad.close();
  CHECK_THROWS_AS(care::load_fixture_file(dir + "/bad.jsonl"), care::CorruptTrace);
}

TEST_CASE("judge short-circuits on normalized equality without a call") {
  bool called = false;
  care::CallbackChatBackend judge([&](const care::ChatRequest&) {
    called = true;
    return care::ChatResponse{"no", {}};
  });
  CHECK(care::judge_answer(judge, "q", "Pneumonia", "  pneumonia. "));
  CHECK_FALSE(called);
}

TEST_CASE("judge accepts a leading yes or no verdict") {
  care::CallbackChatBackend yes([](const care::ChatRequest&) {
    return care::ChatResponse{"Yes, the prediction names the same finding.", {}};
  });
  CHECK(care::judge_answer(yes, "q", "left lung", "the left lung field"));

  care::CallbackChatBackend no([](const care::ChatRequest&) {
    return care::ChatResponse{"No.", {}};
  });
  CHECK_FALSE(care::judge_answer(no, "q", "left lung", "heart"));
}

TEST_CASE("judge reprompts once, then refuses to guess") {
  int calls = 0;
  care::CallbackChatBackend wobbly([&](const care::ChatRequest& req) {
    ++calls;
    if (calls == 1) return care::ChatResponse{"It is hard to say.", {}};
    // The reprompt must carry the earlier exchange plus a reminder turn.
    CHECK(req.turns.size() == 3);
    return care::ChatResponse{"yes", {}};
  });
  CHECK(care::judge_answer(wobbly, "q", "a", "b"));
  CHECK(calls == 2);

  care::CallbackChatBackend mute([](const care::ChatRequest&) {
    return care::ChatResponse{"unsure either way", {}};
  });
  CHECK_THROWS_AS(care::judge_answer(mute, "q", "a", "b"),
                  care::UnparseableVerdict);
}
