// SPDX-License-Identifier: Apache-2.0
//
// Data synthesis: catalog building, deterministic sampling, answer fixing,
// record loading, and serialization.

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "care/raster.hpp"
#include "care/scripted.hpp"
#include "care/synth.hpp"
#include "temp_util.hpp"

namespace fs = std::filesystem;

namespace {

care::BinaryMask tiny_mask(int w = 4, int h = 4) {
  care::BinaryMask m;
  m.width = w;
  m.height = h;
  m.bits.assign(static_cast<std::size_t>(w) * h, 0);
  m.bits[5] = 1;
  return m;
}

care::SegRecord record(std::vector<std::string> entities) {
  care::SegRecord rec;
  rec.image_path = "img.png";
  rec.modality = "CT";
  rec.organ = "chest";
  for (auto& e : entities) rec.masks.push_back({std::move(e), tiny_mask(), "center"});
  return rec;
}

care::CallbackChatBackend phrasing_backend() {
  return care::CallbackChatBackend([](const care::ChatRequest&) {
    return care::ChatResponse{"What   abnormality\nis visible here?", {}};
  });
}

}  // namespace

TEST_CASE("catalog folds case, deduplicates, sorts, and rejects emptiness") {
  std::vector<care::SegRecord> records{record({"Lesion", "nodule"}),
                                       record({"lesion", "Effusion"})};
  care::EntityCatalog catalog = care::build_entity_catalog(records);
  CHECK(catalog.names == std::vector<std::string>{"effusion", "lesion", "nodule"});
  CHECK(catalog.contains("LESION"));
  CHECK(catalog.contains(" nodule "));
  CHECK_FALSE(catalog.contains("mass"));

  care::SegRecord bare;
  bare.image_path = "x.png";
  CHECK_THROWS_AS(care::build_entity_catalog({bare}), care::EmptyCorpus);
  CHECK_THROWS_AS(care::build_entity_catalog({}), care::EmptyCorpus);
}

TEST_CASE("synthesis is deterministic per (seed, record index)") {
  care::SegRecord rec = record({"lesion", "nodule", "effusion", "mass"});
  auto chat = phrasing_backend();

  auto a = care::synthesize_example(rec, 3, chat, 42);
  auto b = care::synthesize_example(rec, 3, chat, 42);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->answer == b->answer);
  CHECK(a->task == b->task);
  CHECK(a->question == b->question);
  // The question text is whitespace-collapsed backend output.
  CHECK(a->question == "What abnormality is visible here?");
  CHECK(a->image_path == "img.png");

  // Between one and three masks are sampled, never more.
  CHECK(a->answer.size() >= 1);
  CHECK(a->answer.size() <= 3);

  // Different record indices decouple the draws: across many indices both
  // the sampled sets and task kinds vary.
  std::set<std::string> first_names;
  std::set<care::TaskKind> tasks;
  for (std::size_t i = 0; i < 40; ++i) {
    auto ex = care::synthesize_example(rec, i, chat, 42);
    REQUIRE(ex.has_value());
    first_names.insert(ex->answer.front());
    tasks.insert(ex->task);
  }
  CHECK(first_names.size() > 1);
  CHECK(tasks.size() > 2);
}

TEST_CASE("the answer comes from the sample, not the backend") {
  // A backend that claims entities in its reply must not leak them into the
  // answer: the answer is fixed to the sampled (normalized) names.
  care::CallbackChatBackend liar([](const care::ChatRequest&) {
    return care::ChatResponse{"Is there a zebra? (zebra, unicorn)", {}};
  });
  care::SegRecord rec = record({"Lesion"});
  auto ex = care::synthesize_example(rec, 0, liar, 1);
  REQUIRE(ex.has_value());
  CHECK(ex->answer == std::vector<std::string>{"lesion"});
}

TEST_CASE("empty phrasing is retried once, then the record is skipped") {
  int calls = 0;
  care::CallbackChatBackend flaky([&](const care::ChatRequest& req) {
    ++calls;
    if (calls == 1) return care::ChatResponse{"   ", {}};
    CHECK(req.turns.size() == 3);  // retry carries the reminder
    return care::ChatResponse{"Name the finding.", {}};
  });
  care::SegRecord rec = record({"lesion"});
  auto ex = care::synthesize_example(rec, 0, flaky, 1);
  REQUIRE(ex.has_value());
  CHECK(ex->question == "Name the finding.");
  CHECK(calls == 2);

  care::CallbackChatBackend mute(
      [](const care::ChatRequest&) { return care::ChatResponse{"", {}}; });
  CHECK_FALSE(care::synthesize_example(rec, 0, mute, 1).has_value());
}

TEST_CASE("validate_example checks answer, catalog membership, and question") {
  care::EntityCatalog catalog = care::build_entity_catalog({record({"lesion"})});
  care::SynthExample ex;
  ex.image_path = "img.png";
  ex.question = "What is shown?";
  ex.answer = {"lesion"};
  ex.task = care::TaskKind::DescribeEntity;
  CHECK(care::validate_example(ex, catalog));

  care::SynthExample no_answer = ex;
  no_answer.answer.clear();
  CHECK_FALSE(care::validate_example(no_answer, catalog));

  care::SynthExample stranger = ex;
  stranger.answer = {"unicorn"};
  CHECK_FALSE(care::validate_example(stranger, catalog));

  care::SynthExample no_question = ex;
  no_question.question.clear();
  CHECK_FALSE(care::validate_example(no_question, catalog));
}

TEST_CASE("task kinds round-trip by name") {
  using care::TaskKind;
  for (TaskKind t : {TaskKind::DescribeEntity, TaskKind::FindAnomaly,
                     TaskKind::LocateEntity, TaskKind::CountEntities,
                     TaskKind::SegmentEntity, TaskKind::CropRegion}) {
    CHECK(care::task_kind_from_string(care::to_string(t)) == t);
  }
  CHECK_THROWS_AS(care::task_kind_from_string("paint_region"),
                  std::invalid_argument);
}

TEST_CASE("seg records load from a directory, sorted, with strict shapes") {
  const std::string dir = care_test::temp_dir("synth-load");

  // A real image and mask PNG for the records to reference.
  care::Image img;
  img.width = 4;
  img.height = 4;
  img.channels = 1;
  img.pixels.assign(16, 128);
  care::save_png(dir + "/scan.png", img);
  care::save_png(dir + "/mask.png", care::mask_to_image(tiny_mask()));

  auto write_record = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir + "/" + name);
    out << body;
  };
  write_record("b.json", R"({"image": "scan.png", "modality": "MRI",
    "organ": "brain", "masks": [{"entity": "tumor", "mask_png": "mask.png",
    "position": "left"}]})");
  write_record("a.json", R"({"image": "scan.png", "modality": "CT",
    "organ": "chest", "masks": [{"entity": "lesion", "mask_png": "mask.png",
    "position": "upper right"}]})");

  std::vector<care::SegRecord> records = care::load_seg_records(dir);
  REQUIRE(records.size() == 2);
  // Sorted by file name: a.json first.
  CHECK(records[0].modality == "CT");
  CHECK(records[1].modality == "MRI");
  CHECK(records[0].masks[0].entity == "lesion");
  CHECK(records[0].masks[0].position == "upper right");
  CHECK(records[0].masks[0].mask.bits == tiny_mask().bits);
  // Image paths resolve relative to the record directory.
  CHECK(fs::path(records[0].image_path).is_absolute());
  CHECK(fs::exists(records[0].image_path));

  write_record("c.json", "{broken");
  try {
    care::load_seg_records(dir);
    FAIL("expected CorruptRecord");
  } catch (const care::CorruptRecord& e) {
    CHECK(std::string(e.what()).find("c.json") != std::string::npos);
  }

  CHECK_THROWS_AS(care::load_seg_records(dir + "/absent"), care::CorruptRecord);
}

TEST_CASE("examples serialize to JSONL and back") {
  care::SynthExample ex;
  ex.image_path = "scan.png";
  ex.question = "How many lesions are present?";
  ex.answer = {"lesion"};
  ex.task = care::TaskKind::CountEntities;

  care::SynthExample back = care::example_from_json(care::example_to_json(ex));
  CHECK(back.image_path == ex.image_path);
  CHECK(back.question == ex.question);
  CHECK(back.answer == ex.answer);
  CHECK(back.task == ex.task);

  const std::string dir = care_test::temp_dir("synth-jsonl");
  const std::string path = dir + "/train.jsonl";
  care::write_examples_jsonl(path, {ex, ex});
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    care::SynthExample parsed =
        care::example_from_json(nlohmann::json::parse(line));
    CHECK(parsed.question == ex.question);
  }
  CHECK(lines == 2);
}
