// SPDX-License-Identifier: Apache-2.0
//
// care: one binary exposing the static flow pipeline, the coordinator agent,
// evaluation sweeps, data synthesis, reward self-tests, trace replay, and a
// demo fixture bootstrap. Answers and reports go to standard output; all
// diagnostics and emitted paths go to standard error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "care/assignment.hpp"
#include "care/config.hpp"
#include "care/coordinator.hpp"
#include "care/eval.hpp"
#include "care/evidence.hpp"
#include "care/flow.hpp"
#include "care/prompts.hpp"
#include "care/remote.hpp"
#include "care/rlvr.hpp"
#include "care/scripted.hpp"
#include "care/synth.hpp"

namespace fs = std::filesystem;
using namespace care;

namespace {

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fresh_run_id(const std::string& prefix) {
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  return prefix + "-" + std::to_string(micros);
}

// Scripted backends when fixture files are given, remote otherwise. The one
// chat fixture file serves every chat-style role because fixtures are keyed
// by request digest.
struct CliBackends {
  std::unique_ptr<ChatBackend> chat;
  std::unique_ptr<ChatBackend> judge;
  std::unique_ptr<SegmentBackend> seg;
  std::unique_ptr<Clock> clock;
  bool scripted = false;
};

CliBackends make_backends(const EngineConfig& cfg, const std::string& fixtures,
                          const std::string& seg_fixtures) {
  CliBackends b;
  b.scripted = !fixtures.empty() || !seg_fixtures.empty();
  if (!fixtures.empty()) {
    b.chat = std::make_unique<ScriptedChatBackend>(load_fixture_file(fixtures));
    b.judge = std::make_unique<ScriptedChatBackend>(load_fixture_file(fixtures));
  } else {
    if (cfg.chat_endpoint.empty()) {
      throw ConfigInvalid("no chat_endpoint configured and no --fixtures given");
    }
    b.chat = std::make_unique<RemoteChatBackend>(
        RemoteEndpoint{cfg.chat_endpoint, cfg.api_key, cfg.model, {}});
    const std::string judge_url =
        cfg.judge_endpoint.empty() ? cfg.chat_endpoint : cfg.judge_endpoint;
    b.judge = std::make_unique<RemoteChatBackend>(
        RemoteEndpoint{judge_url, cfg.api_key, cfg.model, {}});
  }
  if (!seg_fixtures.empty()) {
    auto seg = std::make_unique<ScriptedSegmentBackend>();
    for (const auto& [digest, payload] : load_fixture_file(seg_fixtures)) {
      seg->add(digest, payload);
    }
    b.seg = std::move(seg);
  } else {
    if (cfg.segment_endpoint.empty()) {
      throw ConfigInvalid(
          "no segment_endpoint configured and no --seg-fixtures given");
    }
    b.seg = std::make_unique<RemoteSegmentBackend>(
        RemoteEndpoint{cfg.segment_endpoint, cfg.api_key, cfg.model, {}});
  }
  // Deterministic timing for replayable scripted runs.
  if (b.scripted) {
    b.clock = std::make_unique<SteppingClock>();
  } else {
    b.clock = std::make_unique<SystemClock>();
  }
  return b;
}

FlowConfig flow_config(const EngineConfig& cfg) {
  FlowConfig fc;
  fc.tau_c = cfg.tau_c;
  fc.max_entities = cfg.max_entities;
  fc.pad_frac = cfg.pad_frac;
  fc.bin_threshold = static_cast<float>(cfg.bin_threshold);
  fc.evidence_cap = cfg.evidence_cap;
  fc.seed = cfg.seed;
  return fc;
}

// ---------------------------------------------------------------------------
// flow run / coord run

struct RunArgs {
  std::string image;
  std::string question;
  std::string clue = "vote";
  std::string config_path;
  std::string fixtures;
  std::string seg_fixtures;
  std::string trace_dir = "traces";
  std::string run_id;
  double tau_c = -1.0;  // <0 means not set
  int budget = -1;      // coord only; <0 means not set
};

int cmd_flow_run(const RunArgs& args) {
  EngineConfig cfg = load_config(args.config_path);
  if (args.tau_c >= 0.0) apply_config_value(cfg, "tau_c", format_g(args.tau_c));
  CliBackends backends = make_backends(cfg, args.fixtures, args.seg_fixtures);

  const std::string run_id =
      args.run_id.empty() ? fresh_run_id("flow") : args.run_id;
  TraceWriter writer(args.trace_dir, run_id);
  RunContext ctx{&writer, backends.clock.get()};

  const ImageRef image = make_image_ref(args.image, load_image(args.image));
  FlowBackends fb{backends.chat.get(), backends.seg.get(), backends.chat.get()};
  const FlowResult result =
      run_flow(image, args.question, fb, flow_config(cfg), ctx);
  writer.close();

  // Kept masks land beside the run file for inspection.
  for (std::size_t i = 0; i < result.kept_masks.size(); ++i) {
    const auto& kept = result.kept_masks[i];
    const std::string path = args.trace_dir + "/runs/" + run_id + ".mask" +
                             std::to_string(i + 1) + ".png";
    save_png(path, mask_to_image(kept.mask));
    std::cerr << "mask " << kept.entity << " ("
              << confidence_percent(kept.confidence) << "%): " << path << "\n";
  }
  std::cerr << "trace: " << args.trace_dir << "/runs/" << run_id << ".jsonl\n";
  for (const auto& clue : result.per_clue) {
    std::cerr << to_string(clue.clue) << ": " << clue.answer << "\n";
  }

  std::string answer = result.final_answer;
  if (args.clue == "zoom") answer = result.per_clue[0].answer;
  if (args.clue == "mask") answer = result.per_clue[1].answer;
  if (args.clue == "global") answer = result.per_clue[2].answer;
  std::cout << answer << "\n";
  return 0;
}

int cmd_coord_run(const RunArgs& args) {
  EngineConfig cfg = load_config(args.config_path);
  if (args.tau_c >= 0.0) apply_config_value(cfg, "tau_c", format_g(args.tau_c));
  if (args.budget >= 0) {
    apply_config_value(cfg, "max_tool_calls", std::to_string(args.budget));
  }
  CliBackends backends = make_backends(cfg, args.fixtures, args.seg_fixtures);

  const std::string run_id =
      args.run_id.empty() ? fresh_run_id("coord") : args.run_id;
  TraceWriter writer(args.trace_dir, run_id);
  RunContext ctx{&writer, backends.clock.get()};

  const ImageRef image = make_image_ref(args.image, load_image(args.image));
  CoordBackends cb{backends.chat.get(), backends.chat.get(), backends.seg.get(),
                   backends.chat.get()};
  const CoordBudget budget{cfg.max_tool_calls, cfg.max_review_rounds};
  const CoordResult result =
      run_coord(image, args.question, cb, budget, flow_config(cfg), ctx);
  writer.close();

  std::cerr << "trace: " << args.trace_dir << "/runs/" << run_id << ".jsonl\n";
  std::cerr << "tool calls: " << result.transcript.tool_calls
            << ", grounded calls: " << result.transcript.gvqa_calls
            << ", review rounds: " << result.transcript.review_rounds << "\n";
  if (result.pre_review_answer != result.final_answer) {
    std::cerr << "pre-review answer: " << result.pre_review_answer << "\n";
  }
  for (const auto& warning : result.transcript.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  std::cout << result.final_answer << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// coord audit

int cmd_coord_audit(const std::string& traces_dir, const std::string& gt_path) {
  const std::vector<EvalItem> items = load_eval_items(gt_path);
  std::map<std::string, const EvalItem*> by_question;
  for (const auto& item : items) by_question[item.question] = &item;

  const TraceStore store(traces_dir);
  std::vector<EditInput> edits;
  for (const IndexEntry& entry : store.index()) {
    if (!entry.summary.is_object() ||
        entry.summary.value("pipeline", "") != "coord") {
      continue;
    }
    const std::string question = entry.summary.value("question", "");
    const auto it = by_question.find(question);
    if (it == by_question.end()) {
      std::cerr << "no ground truth for run " << entry.run_id << "; skipped\n";
      continue;
    }
    edits.push_back({entry.summary.value("pre_review_answer", ""),
                     entry.summary.value("final_answer", ""), it->second->gt,
                     it->second->qtype, it->second->dataset});
  }
  if (edits.empty()) {
    std::cerr << "no coordinator runs with ground truth under " << traces_dir
              << "\n";
    return 1;
  }

  const EditTable table = edit_accounting(edits);
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
    return std::string(buf);
  };
  std::cout << "| dataset | n | fixed% | broke% | delta% | overwritten% |\n";
  std::cout << "|---|---:|---:|---:|---:|---:|\n";
  auto print_row = [&](const std::string& name, const EditCell& cell) {
    std::cout << "| " << name << " | " << cell.n << " | " << pct(cell.fixed_ratio)
              << " | " << pct(cell.broke_ratio) << " | " << pct(cell.delta)
              << " | " << pct(cell.total_overwrite) << " |\n";
  };
  for (const auto& [name, cell] : table.per_dataset) print_row(name, cell);
  print_row("overall", table.overall);
  return 0;
}

// ---------------------------------------------------------------------------
// eval run

struct EvalArgs {
  std::string items;
  std::string pipeline = "flow";
  std::string out = "report.md";
  std::string json_out;
  std::string config_path;
  std::string fixtures;
  std::string seg_fixtures;
  std::string trace_dir;
  std::string run_prefix = "bench";
};

int cmd_eval_run(const EvalArgs& args) {
  EngineConfig cfg = load_config(args.config_path);
  CliBackends backends = make_backends(cfg, args.fixtures, args.seg_fixtures);
  const std::vector<EvalItem> items = load_eval_items(args.items);

  BenchBackends bb;
  bb.flow = {backends.chat.get(), backends.seg.get(), backends.chat.get()};
  bb.coord = {backends.chat.get(), backends.chat.get(), backends.seg.get(),
              backends.chat.get()};
  bb.judge = backends.judge.get();

  BenchOptions opts;
  opts.pipeline =
      args.pipeline == "coord" ? PipelineKind::Coord : PipelineKind::Flow;
  opts.cfg = flow_config(cfg);
  opts.budget = {cfg.max_tool_calls, cfg.max_review_rounds};
  opts.trace_dir = args.trace_dir.empty() ? args.out + ".traces" : args.trace_dir;
  opts.run_prefix = args.run_prefix;
  opts.clock = backends.clock.get();

  const BenchReport report = run_benchmark(items, bb, opts);
  const std::string md = render_markdown(report);

  std::ofstream out(args.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + args.out);
  out << md;
  out.close();
  if (!args.json_out.empty()) {
    std::ofstream jout(args.json_out, std::ios::trunc);
    if (!jout) throw std::runtime_error("cannot open " + args.json_out);
    jout << report_to_json(report).dump(2) << "\n";
  }

  std::cout << md;
  std::cerr << "report: " << args.out << "\n";
  std::cerr << "traces: " << opts.trace_dir << "\n";
  return report.item_errors.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// synth run

struct SynthArgs {
  std::string records;
  std::string out;
  std::string test_out;
  std::string config_path;
  std::string fixtures;
  std::uint64_t seed = 42;
  std::size_t n = 16;
  std::size_t test_n = 0;
};

int cmd_synth_run(const SynthArgs& args) {
  EngineConfig cfg = load_config(args.config_path);
  if (args.seed != 42) apply_config_value(cfg, "seed", std::to_string(args.seed));

  std::unique_ptr<ChatBackend> chat;
  if (!args.fixtures.empty()) {
    chat = std::make_unique<ScriptedChatBackend>(load_fixture_file(args.fixtures));
  } else {
    if (cfg.chat_endpoint.empty()) {
      throw ConfigInvalid("no chat_endpoint configured and no --fixtures given");
    }
    chat = std::make_unique<RemoteChatBackend>(
        RemoteEndpoint{cfg.chat_endpoint, cfg.api_key, cfg.model, {}});
  }

  const std::vector<SegRecord> records = load_seg_records(args.records);
  if (records.empty()) throw EmptyCorpus("no records under " + args.records);
  const EntityCatalog catalog = build_entity_catalog(records);

  const std::size_t want = args.n + args.test_n;
  std::vector<SynthExample> examples;
  std::size_t skipped = 0;
  // Round-robin over records; the example index doubles as the sampler key,
  // so later passes over a record draw fresh masks and task kinds.
  for (std::size_t i = 0; examples.size() < want && i < want + 4 * records.size();
       ++i) {
    const SegRecord& rec = records[i % records.size()];
    const auto ex = synthesize_example(rec, i, *chat, cfg.seed);
    if (ex && validate_example(*ex, catalog)) {
      examples.push_back(*ex);
    } else {
      ++skipped;
    }
  }
  if (examples.size() < want) {
    std::cerr << "only " << examples.size() << " of " << want
              << " examples synthesized (" << skipped << " skipped)\n";
  }

  const std::size_t train_n = std::min(args.n, examples.size());
  write_examples_jsonl(args.out,
                       {examples.begin(), examples.begin() + train_n});
  std::cerr << "wrote " << train_n << " examples to " << args.out << "\n";
  if (!args.test_out.empty()) {
    write_examples_jsonl(args.test_out, {examples.begin() + train_n, examples.end()});
    std::cerr << "wrote " << examples.size() - train_n << " examples to "
              << args.test_out << "\n";
  }
  if (skipped > 0) std::cerr << "skipped " << skipped << " generations\n";
  return examples.size() == want ? 0 : 1;
}

// ---------------------------------------------------------------------------
// rewards check

struct SelfCheck {
  std::string name;
  std::string expected;
  std::string actual;
  bool pass = false;
};

void check_eq(std::vector<SelfCheck>& checks, const std::string& name,
              double expected, double actual, double tol) {
  SelfCheck c{name, format_g(expected), format_g(actual),
              std::fabs(expected - actual) <= tol};
  checks.push_back(std::move(c));
}

int cmd_rewards_check(const std::string& fixtures_path) {
  std::vector<SelfCheck> checks;

  // Matching: must prefer the assignment with the larger total.
  {
    SimilarityMatrix s{2, 2, {0.9, 0.85, 0.8, 0.1}};
    const Assignment a = km_assign(s);
    using Pair = std::pair<std::size_t, std::size_t>;
    const bool ok = a.pairs.size() == 2 && a.pairs[0] == Pair{0, 1} &&
                    a.pairs[1] == Pair{1, 0};
    checks.push_back({"km_assign prefers total 1.65", "(0,1),(1,0)",
                      ok ? "(0,1),(1,0)" : "other", ok});
    check_eq(checks, "matched similarity mean", (0.85 + 0.8) / 2.0,
             reward_sim(s, a), 1e-12);
  }
  check_eq(checks, "count reward inside budget", 1.0, reward_count(3), 0.0);
  check_eq(checks, "count reward over budget", 0.0, reward_count(6), 0.0);
  check_eq(checks, "repetition reward one duplicate", 0.5,
           reward_repetition(EntityProposal{{"liver", "Liver"}, ""}), 0.0);
  check_eq(checks, "format reward well-formed", 1.0,
           reward_format("<think>t</think><answer>a</answer>"), 0.0);
  check_eq(checks, "format reward missing think", 0.0,
           reward_format("<answer>a</answer>"), 0.0);
  check_eq(checks, "length reward half saturation", 0.125,
           reward_length(100, 200), 1e-15);
  check_eq(checks, "accuracy option letter", 1.0,
           reward_accuracy("B", "B. Lung opacity", QType::Closed), 0.0);
  check_eq(checks, "accuracy open containment", 1.0,
           reward_accuracy("shows pneumonia in the left lobe", "pneumonia",
                           QType::Open),
           0.0);
  {
    ProbMask flat{2, 2, {0.5f, 0.5f, 0.5f, 0.5f}};
    check_eq(checks, "confidence all-uncertain", 0.0,
             mask_confidence(flat).value, 0.0);
    ProbMask sharp{2, 2, {0.0f, 1.0f, 1.0f, 0.0f}};
    check_eq(checks, "confidence deterministic", 1.0,
             mask_confidence(sharp).value, 0.0);
  }
  {
    const GroupAdvantages adv = group_advantages({2.0, 0.0, 1.0});
    check_eq(checks, "advantage of best rollout", std::sqrt(1.5), adv.values[0],
             1e-12);
    // Rewards 2 and 0 give advantages +1/-1; ratio 1.5 clips at the 1.28
    // ceiling on the positive side and stays unclipped on the negative.
    RolloutGroup clip;
    clip.rollouts = {{{std::log(1.5)}, {0.0}, 2.0}, {{std::log(1.5)}, {0.0}, 0.0}};
    check_eq(checks, "clipped objective at ratio 1.5", (1.28 - 1.5) / 2.0,
             dapo_objective(clip), 1e-12);
  }

  bool all_pass = true;
  std::cout << "| check | expected | actual | status |\n|---|---|---|---|\n";
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    std::cout << "| " << c.name << " | " << c.expected << " | " << c.actual
              << " | " << (c.pass ? "pass" : "FAIL") << " |\n";
  }

  if (!fixtures_path.empty()) {
    // Rollout fixtures: one JSON object per line with token log-prob arrays,
    // a scalar reward, and an optional group key.
    std::ifstream in(fixtures_path);
    if (!in) throw std::runtime_error("cannot open " + fixtures_path);
    std::map<std::string, RolloutGroup> groups;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw std::runtime_error("bad rollout record at line " +
                                 std::to_string(lineno));
      }
      Rollout r;
      r.logp_policy = j.at("logp_policy").get<std::vector<double>>();
      r.logp_ref = j.at("logp_ref").get<std::vector<double>>();
      r.reward = j.at("reward").get<double>();
      groups[j.value("group", "0")].rollouts.push_back(std::move(r));
    }
    std::cout << "\n| group | rollouts | objective | degenerate |\n"
                 "|---|---:|---:|---|\n";
    for (const auto& [name, group] : groups) {
      std::vector<double> rewards;
      for (const auto& r : group.rollouts) rewards.push_back(r.reward);
      const GroupAdvantages adv = group_advantages(rewards);
      const double obj = dapo_objective(group);
      std::cout << "| " << name << " | " << group.rollouts.size() << " | "
                << format_g(obj) << " | " << (adv.degenerate ? "yes" : "no")
                << " |\n";
    }
  }
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// replay

int cmd_replay(const std::string& run_id, const std::string& traces_dir) {
  const TraceStore store(traces_dir);
  const std::vector<TraceRecord> records = store.replay_cursor(run_id);

  nlohmann::json summary;
  for (const IndexEntry& entry : store.index()) {
    if (entry.run_id == run_id) summary = entry.summary;
  }
  if (!summary.is_object()) {
    throw UnknownRun("replay: no index summary for " + run_id);
  }
  const std::string pipeline = summary.value("pipeline", "");
  const std::string image_path = summary.value("image", "");
  const std::string question = summary.value("question", "");
  if (pipeline.empty() || image_path.empty()) {
    throw CorruptTrace("replay: summary lacks pipeline/image fields");
  }

  const TraceFixtures fixtures = fixtures_from_trace(records);
  ScriptedChatBackend chat(fixtures.chat);
  ScriptedSegmentBackend seg;
  for (const auto& [digest, payload] : fixtures.segment) seg.add(digest, payload);

  const fs::path replay_dir =
      fs::temp_directory_path() / ("care-replay-" + run_id);
  fs::remove_all(replay_dir);

  SteppingClock clock;
  TraceWriter writer(replay_dir.string(), run_id);
  RunContext ctx{&writer, &clock};
  const ImageRef image = make_image_ref(image_path, load_image(image_path));
  const EngineConfig cfg = load_config("");
  if (pipeline == "flow") {
    FlowBackends fb{&chat, &seg, &chat};
    run_flow(image, question, fb, flow_config(cfg), ctx);
  } else if (pipeline == "coord") {
    CoordBackends cb{&chat, &chat, &seg, &chat};
    run_coord(image, question, cb, {cfg.max_tool_calls, cfg.max_review_rounds},
              flow_config(cfg), ctx);
  } else {
    throw CorruptTrace("replay: unknown pipeline " + pipeline);
  }
  writer.close();

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  const std::string original =
      slurp(fs::path(traces_dir) / "runs" / (run_id + ".jsonl"));
  const std::string replayed =
      slurp(replay_dir / "runs" / (run_id + ".jsonl"));

  std::cerr << "replayed into " << replay_dir.string() << "\n";
  if (original == replayed && !original.empty()) {
    std::cout << "identical\n";
    return 0;
  }
  std::cout << "DIFFERENT\n";
  return 1;
}

// ---------------------------------------------------------------------------
// fixtures demo

Image demo_image() {
  Image img;
  img.width = 64;
  img.height = 64;
  img.channels = 1;
  img.pixels.resize(64 * 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      int v = 40 + x + y;  // gentle gradient background
      const int dx = x - 20;
      const int dy = y - 20;
      if (dx * dx + dy * dy <= 81) v = 230;  // bright focal lesion
      img.pixels[static_cast<std::size_t>(y) * 64 + x] =
          static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

int cmd_fixtures_demo(const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string image_path = (fs::path(out_dir) / "demo.png").string();
  save_png(image_path, demo_image());
  const std::string question = "Which disease is shown in the CT image?";

  // Scripted personas for the bootstrap run. Their replies are recorded and
  // keyed by request digest, so the saved fixtures replay byte-for-byte.
  CallbackChatBackend proposal([](const ChatRequest&) {
    ChatResponse r;
    r.text = "<answer>{\"entities\": [\"lesion\"]}</answer>";
    return r;
  });
  CallbackChatBackend gvqa([](const ChatRequest& req) {
    ChatResponse r;
    const std::string& text = req.turns.front().text;
    if (text.find("Evidence kind: zoom") != std::string::npos) {
      r.text = "<think>The crop shows one round dense region with smooth "
               "margins.</think><answer>Pneumonia</answer>";
    } else if (text.find("Evidence kind: mask") != std::string::npos) {
      r.text = "<think>The mask isolates a single focal region.</think>"
               "<answer>Pneumonia</answer>";
    } else {
      r.text = "<think>The field is clear except one focal density.</think>"
               "<answer>Pneumonia</answer>";
    }
    return r;
  });
  CallbackChatBackend coordinator([](const ChatRequest& req) {
    ChatResponse r;
    if (req.system_prompt == prompts::review_system()) {
      r.text = "{\"consistent\": true, \"action\": \"accept\"}";
      return r;
    }
    int tool_turns = 0;
    for (const auto& turn : req.turns) {
      if (turn.role == "tool") ++tool_turns;
    }
    if (tool_turns == 0) {
      r.text = "Identifying the key finding first.";
      r.tool_calls.push_back(
          {"propose_entities",
           {{"question", "Which disease is shown in the CT image?"}}});
    } else if (tool_turns == 1) {
      r.text = "Segmenting the proposed finding.";
      r.tool_calls.push_back({"segment_entity", {{"entity_name", "lesion"}}});
    } else if (tool_turns == 2) {
      r.text = "Zooming into the segmented region.";
      r.tool_calls.push_back(
          {"grounded_vqa",
           {{"question", "Which disease is shown in the CT image?"},
            {"clue_type", "zoom"},
            {"mask_id", "m1"}}});
    } else {
      r.text = "The grounded evidence supports pneumonia.";
    }
    return r;
  });
  CallbackSegmentBackend segmenter([](const SegmentationRequest& req) {
    const Image& img = *req.image.image;
    ProbMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.values.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int dx = x - 20;
        const int dy = y - 20;
        mask.values[static_cast<std::size_t>(y) * img.width + x] =
            (dx * dx + dy * dy <= 81) ? 0.98f : 0.02f;
      }
    }
    return SegmentationResult{mask, std::nullopt};
  });

  const ImageRef image = make_image_ref(image_path, load_image(image_path));
  const fs::path boot_dir = fs::temp_directory_path() / "care-demo-bootstrap";
  fs::remove_all(boot_dir);

  const EngineConfig cfg = load_config("");
  SteppingClock clock;
  std::map<std::string, nlohmann::json> chat_fixtures;
  std::map<std::string, nlohmann::json> seg_fixtures;

  {
    TraceWriter writer(boot_dir.string(), "boot-flow");
    RunContext ctx{&writer, &clock};
    FlowBackends fb{&proposal, &segmenter, &gvqa};
    run_flow(image, question, fb, flow_config(cfg), ctx);
    writer.close();
  }
  {
    TraceWriter writer(boot_dir.string(), "boot-coord");
    RunContext ctx{&writer, &clock};
    CoordBackends cb{&coordinator, &proposal, &segmenter, &gvqa};
    run_coord(image, question, cb, {cfg.max_tool_calls, cfg.max_review_rounds},
              flow_config(cfg), ctx);
    writer.close();
  }
  const TraceStore boot(boot_dir.string());
  for (const std::string run : {"boot-flow", "boot-coord"}) {
    const TraceFixtures fixtures = fixtures_from_trace(boot.replay_cursor(run));
    chat_fixtures.insert(fixtures.chat.begin(), fixtures.chat.end());
    seg_fixtures.insert(fixtures.segment.begin(), fixtures.segment.end());
  }

  const std::string chat_path = (fs::path(out_dir) / "chat.jsonl").string();
  const std::string seg_path = (fs::path(out_dir) / "seg.jsonl").string();
  save_fixture_file(chat_path, chat_fixtures);
  save_fixture_file(seg_path, seg_fixtures);

  const std::string items_path = (fs::path(out_dir) / "items.jsonl").string();
  {
    std::ofstream out(items_path, std::ios::trunc);
    out << nlohmann::json{{"id", "demo-0001"},
                          {"image", image_path},
                          {"question", question},
                          {"answer", "Pneumonia"},
                          {"qtype", "closed"},
                          {"dataset", "demo"}}
               .dump()
        << "\n";
  }

  std::cerr << "demo image: " << image_path << "\n";
  std::cerr << "chat fixtures: " << chat_path << "\n";
  std::cerr << "segmentation fixtures: " << seg_path << "\n";
  std::cerr << "eval items: " << items_path << "\n";
  std::cout << "care flow run --image " << image_path << " --question \""
            << question << "\" --fixtures " << chat_path << " --seg-fixtures "
            << seg_path << " --trace-dir " << out_dir << "/traces\n";
  std::cout << "care coord run --image " << image_path << " --question \""
            << question << "\" --fixtures " << chat_path << " --seg-fixtures "
            << seg_path << " --trace-dir " << out_dir << "/traces\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evidence-grounded medical VQA engine"};
  app.name("care");  // stable usage line regardless of the invocation path
  app.require_subcommand(1);

  RunArgs run_args;
  EvalArgs eval_args;
  SynthArgs synth_args;
  std::string audit_traces;
  std::string audit_gt;
  std::string rewards_fixtures;
  std::string replay_run;
  std::string replay_traces = "traces";
  std::string demo_out = "demo";

  CLI::App* flow = app.add_subcommand("flow", "static majority-vote pipeline");
  CLI::App* flow_run = flow->add_subcommand("run", "answer one question");
  flow_run->add_option("--image", run_args.image, "input image (PNG or JPEG)")
      ->required();
  flow_run->add_option("--question", run_args.question, "question text")
      ->required();
  flow_run->add_option("--clue", run_args.clue, "answer to print")
      ->check(CLI::IsMember({"zoom", "mask", "global", "vote"}));
  flow_run->add_option("--tau-c", run_args.tau_c, "confidence threshold override");
  flow_run->add_option("--config", run_args.config_path, "config file");
  flow_run->add_option("--fixtures", run_args.fixtures, "chat fixture file");
  flow_run->add_option("--seg-fixtures", run_args.seg_fixtures,
                       "segmentation fixture file");
  flow_run->add_option("--trace-dir", run_args.trace_dir, "trace directory");
  flow_run->add_option("--run-id", run_args.run_id, "run id (default: timestamped)");

  CLI::App* coord = app.add_subcommand("coord", "coordinator agent pipeline");
  CLI::App* coord_run = coord->add_subcommand("run", "answer one question");
  coord_run->add_option("--image", run_args.image, "input image (PNG or JPEG)")
      ->required();
  coord_run->add_option("--question", run_args.question, "question text")
      ->required();
  coord_run->add_option("--budget", run_args.budget, "tool call budget override");
  coord_run->add_option("--tau-c", run_args.tau_c, "confidence threshold override");
  coord_run->add_option("--config", run_args.config_path, "config file");
  coord_run->add_option("--fixtures", run_args.fixtures, "chat fixture file");
  coord_run->add_option("--seg-fixtures", run_args.seg_fixtures,
                        "segmentation fixture file");
  coord_run->add_option("--trace-dir", run_args.trace_dir, "trace directory");
  coord_run->add_option("--run-id", run_args.run_id,
                        "run id (default: timestamped)");
  CLI::App* coord_audit =
      coord->add_subcommand("audit", "review edit table from coordinator traces");
  coord_audit->add_option("--traces", audit_traces, "trace directory")->required();
  coord_audit->add_option("--gt", audit_gt, "eval items file with ground truth")
      ->required();

  CLI::App* eval = app.add_subcommand("eval", "benchmark sweeps");
  CLI::App* eval_run = eval->add_subcommand("run", "run a benchmark");
  eval_run->add_option("--items", eval_args.items, "eval items file (JSONL)")
      ->required();
  eval_run->add_option("--pipeline", eval_args.pipeline, "pipeline to drive")
      ->check(CLI::IsMember({"flow", "coord"}));
  eval_run->add_option("--out", eval_args.out, "markdown report path");
  eval_run->add_option("--json", eval_args.json_out, "JSON report path");
  eval_run->add_option("--config", eval_args.config_path, "config file");
  eval_run->add_option("--fixtures", eval_args.fixtures, "chat fixture file");
  eval_run->add_option("--seg-fixtures", eval_args.seg_fixtures,
                       "segmentation fixture file");
  eval_run->add_option("--trace-dir", eval_args.trace_dir,
                       "trace directory (default: <out>.traces)");
  eval_run->add_option("--run-prefix", eval_args.run_prefix, "trace run prefix");

  CLI::App* synth = app.add_subcommand("synth", "proposal training data synthesis");
  CLI::App* synth_run = synth->add_subcommand("run", "synthesize examples");
  synth_run->add_option("--records", synth_args.records, "segmentation record dir")
      ->required();
  synth_run->add_option("--out", synth_args.out, "output JSONL")->required();
  synth_run->add_option("--seed", synth_args.seed, "sampler seed");
  synth_run->add_option("--n", synth_args.n, "training examples to emit");
  synth_run->add_option("--test-out", synth_args.test_out, "held-out JSONL");
  synth_run->add_option("--test-n", synth_args.test_n, "held-out examples");
  synth_run->add_option("--config", synth_args.config_path, "config file");
  synth_run->add_option("--fixtures", synth_args.fixtures, "chat fixture file");

  CLI::App* rewards = app.add_subcommand("rewards", "reward and objective checks");
  CLI::App* rewards_check =
      rewards->add_subcommand("check", "oracle self-test table");
  rewards_check->add_option("--fixtures", rewards_fixtures,
                            "rollout fixture file (JSONL)");

  CLI::App* replay =
      app.add_subcommand("replay", "re-run a recorded trace and verify bytes");
  replay->add_option("--run", replay_run, "run id")->required();
  replay->add_option("--traces", replay_traces, "trace directory");

  CLI::App* fixtures = app.add_subcommand("fixtures", "fixture tooling");
  CLI::App* fixtures_demo =
      fixtures->add_subcommand("demo", "bootstrap a scripted demo corpus");
  fixtures_demo->add_option("--out", demo_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the diagnosis
    return 2;
  }

  try {
    if (flow_run->parsed()) return cmd_flow_run(run_args);
    if (coord_run->parsed()) return cmd_coord_run(run_args);
    if (coord_audit->parsed()) return cmd_coord_audit(audit_traces, audit_gt);
    if (eval_run->parsed()) return cmd_eval_run(eval_args);
    if (synth_run->parsed()) return cmd_synth_run(synth_args);
    if (rewards_check->parsed()) return cmd_rewards_check(rewards_fixtures);
    if (replay->parsed()) return cmd_replay(replay_run, replay_traces);
    if (fixtures_demo->parsed()) return cmd_fixtures_demo(demo_out);
    std::cerr << "missing subcommand; see --help\n";
    return 2;
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
