// SPDX-License-Identifier: Apache-2.0
//
// Scoring: Dice overlap, closed/open accuracy, entity-set accuracy, item
// loading, and the benchmark sweep with per-dataset aggregation.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "care/eval.hpp"
#include "care/raster.hpp"
#include "care/scripted.hpp"
#include "temp_util.hpp"

namespace {

care::BinaryMask mask_of(int w, int h, std::vector<std::size_t> on) {
  care::BinaryMask m;
  m.width = w;
  m.height = h;
  m.bits.assign(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t i : on) m.bits[i] = 1;
  return m;
}

}  // namespace

TEST_CASE("dice: hand value, symmetry, range, and conventions") {
  // |A| = |B| = 4, |A and B| = 2: dice = 2*2 / 8 = 0.5.
  care::BinaryMask a = mask_of(4, 4, {0, 1, 2, 3});
  care::BinaryMask b = mask_of(4, 4, {2, 3, 8, 9});
  CHECK(care::dice(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(care::dice(b, a) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(care::dice(a, a) == 1.0);

  care::BinaryMask empty = mask_of(4, 4, {});
  CHECK(care::dice(a, empty) == 0.0);
  CHECK(care::dice(empty, empty) == 1.0);  // both empty: perfect agreement

  care::BinaryMask other_shape = mask_of(2, 8, {0});
  CHECK_THROWS_AS(care::dice(a, other_shape), care::DimensionMismatch);
}

TEST_CASE("closed evaluation: normalized equality plus the option rule") {
  CHECK(care::eval_closed(" Pneumonia. ", "pneumonia"));
  CHECK(care::eval_closed("B", "B. Lung opacity"));
  CHECK_FALSE(care::eval_closed("A", "B. Lung opacity"));
  CHECK_FALSE(care::eval_closed("lung", "left lung"));
}

TEST_CASE("open evaluation short-circuits, then defers to the judge") {
  int judge_calls = 0;
  care::CallbackChatBackend judge([&](const care::ChatRequest&) {
    ++judge_calls;
    return care::ChatResponse{"yes", {}};
  });
  CHECK(care::eval_open("the lesion", "The lesion.", judge));
  CHECK(judge_calls == 0);  // equality never reaches the judge

  CHECK(care::eval_open("a bright spot", "lesion", judge, "what is it?"));
  CHECK(judge_calls == 1);

  care::CallbackChatBackend nay(
      [](const care::ChatRequest&) { return care::ChatResponse{"no", {}}; });
  CHECK_FALSE(care::eval_open("the heart", "lesion", nay));
}

TEST_CASE("entity-set accuracy counts matched pairs over max(P, Q)") {
  care::HashEmbedBackend embed;
  care::GroundTruthEntities gt{{"lesion", "nodule"}};

  // Exact per-name matches: every pair clears any threshold below 1.
  care::EntityProposal same{{"nodule", "lesion"}, ""};
  CHECK(care::entity_set_accuracy(same, gt, embed, 0.85) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // One match out of max(3, 2): spurious names dilute the score.
  care::EntityProposal padded{{"lesion", "zebra", "unicorn"}, ""};
  CHECK(care::entity_set_accuracy(padded, gt, embed, 0.85) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // One match out of max(1, 2): missing names dilute it too.
  care::EntityProposal partial{{"lesion"}, ""};
  CHECK(care::entity_set_accuracy(partial, gt, embed, 0.85) ==
        doctest::Approx(0.5).epsilon(1e-12));

  care::EntityProposal empty{{}, ""};
  CHECK(care::entity_set_accuracy(empty, gt, embed, 0.85) == 0.0);

  care::GroundTruthEntities no_gt{{}};
  CHECK_THROWS_AS(care::entity_set_accuracy(same, no_gt, embed, 0.85),
                  std::invalid_argument);
}

TEST_CASE("eval items load from JSONL with defaults") {
  const std::string dir = care_test::temp_dir("eval-items");
  const std::string path = dir + "/items.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id": "q1", "image": "a.png", "question": "Q1?", "answer": "yes",)"
        << R"( "qtype": "closed", "dataset": "xray"})" << "\n";
    out << "\n";  // blank lines are skipped
    out << R"({"image": "b.png", "question": "Q2?", "answer": "left lung",)"
        << R"( "qtype": "open"})" << "\n";
  }
  std::vector<care::EvalItem> items = care::load_eval_items(path);
  REQUIRE(items.size() == 2);
  CHECK(items[0].id == "q1");
  CHECK(items[0].dataset == "xray");
  CHECK(items[0].qtype == care::QType::Closed);
  CHECK(items[1].id == "item3");  // defaulted from the physical line number
  CHECK(items[1].dataset == "all");
  CHECK(items[1].qtype == care::QType::Open);

  {
    std::ofstream out(path, std::ios::app);
    out << R"({"image": "c.png", "question": "Q3?", "answer": ""})" << "\n";
  }
  CHECK_THROWS(care::load_eval_items(path));  // empty answers are unusable
  CHECK_THROWS(care::load_eval_items(dir + "/absent.jsonl"));
}

TEST_CASE("benchmark sweep aggregates per dataset and tolerates failures") {
  const std::string dir = care_test::temp_dir("eval-bench");

  // Two answerable items in two datasets, one with a missing image file.
  care::Image img;
  img.width = 8;
  img.height = 8;
  img.channels = 1;
  img.pixels.assign(64, 100);
  care::save_png(dir + "/scan.png", img);

  std::vector<care::EvalItem> items;
  items.push_back({"i1", dir + "/scan.png", "q one", "pneumonia",
                   care::QType::Closed, "xray"});
  items.push_back({"i2", dir + "/scan.png", "q two", "tuberculosis",
                   care::QType::Closed, "ct"});
  items.push_back({"i3", dir + "/missing.png", "q three", "pneumonia",
                   care::QType::Closed, "ct"});

  // Flow personas: no entities survive (degrade to global); the grounded
  // answer is right for q one and wrong for q two.
  care::CallbackChatBackend proposal([](const care::ChatRequest&) {
    return care::ChatResponse{"cannot parse this", {}};
  });
  care::CallbackSegmentBackend segmenter([](const care::SegmentationRequest&) {
    return care::SegmentationResult{};
  });
  care::CallbackChatBackend gvqa([](const care::ChatRequest& req) {
    const bool first = req.turns.front().text.find("q one") != std::string::npos;
    return care::ChatResponse{
        "<think>view</think><answer>" +
            std::string(first ? "pneumonia" : "atelectasis") + "</answer>",
        {}};
  });

  care::BenchBackends backends;
  backends.flow = {&proposal, &segmenter, &gvqa};

  care::SteppingClock clock(500);
  care::BenchOptions opts;
  opts.pipeline = care::PipelineKind::Flow;
  opts.trace_dir = dir + "/traces";
  opts.clock = &clock;

  care::BenchReport report = care::run_benchmark(items, backends, opts);
  CHECK(report.pipeline == care::PipelineKind::Flow);
  CHECK(report.n == 3);
  CHECK(report.correct == 1);
  CHECK(report.overall == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  REQUIRE(report.item_errors.size() == 1);
  CHECK(report.item_errors[0].find("i3") != std::string::npos);

  // Per-dataset rows in first-seen order; the failed item counts as wrong.
  REQUIRE(report.per_dataset.size() == 2);
  CHECK(report.per_dataset[0].dataset == "xray");
  CHECK(report.per_dataset[0].n == 1);
  CHECK(report.per_dataset[0].correct == 1);
  CHECK(report.per_dataset[1].dataset == "ct");
  CHECK(report.per_dataset[1].n == 2);
  CHECK(report.per_dataset[1].correct == 0);

  // The dataset rows must add up to the overall counts.
  std::size_t n_sum = 0, correct_sum = 0;
  for (const auto& row : report.per_dataset) {
    n_sum += row.n;
    correct_sum += row.correct;
  }
  CHECK(n_sum == report.n);
  CHECK(correct_sum == report.correct);

  // Latency is read back from the traces: three grounded calls per good item.
  bool saw_gvqa = false;
  for (const auto& lat : report.latency) {
    if (lat.component == care::Component::Gvqa) {
      saw_gvqa = true;
      CHECK(lat.calls == 6);
      CHECK(lat.mean_micros == doctest::Approx(500.0).epsilon(1e-9));
    }
  }
  CHECK(saw_gvqa);

  // Flow sweeps carry no edit table.
  CHECK_FALSE(report.edits.has_value());

  // The markdown report names the pipeline and every dataset.
  const std::string md = care::render_markdown(report);
  CHECK(md.find("xray") != std::string::npos);
  CHECK(md.find("ct") != std::string::npos);
  CHECK(md.find("i3") != std::string::npos);

  nlohmann::json j = care::report_to_json(report);
  CHECK(j.at("n") == 3);
  CHECK(j.at("correct") == 1);
  CHECK(j.at("errors").size() == 1);
}

TEST_CASE("benchmark validation") {
  care::BenchBackends backends;
  care::BenchOptions opts;  // missing trace_dir
  CHECK_THROWS_AS(care::run_benchmark({}, backends, opts), std::invalid_argument);

  std::vector<care::EvalItem> open_items{
      {"i1", "x.png", "q", "a", care::QType::Open, "all"}};
  opts.trace_dir = care_test::temp_dir("eval-validate");
  // Open items demand a judge backend up front.
  CHECK_THROWS_AS(care::run_benchmark(open_items, backends, opts),
                  std::invalid_argument);
}
