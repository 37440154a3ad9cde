// SPDX-License-Identifier: Apache-2.0

#include "care/coordinator.hpp"

#include <algorithm>

#include "care/codec.hpp"
#include "care/prompts.hpp"
#include "care/scripted.hpp"
#include "care/text.hpp"

namespace care {

namespace {

std::optional<ReviewVerdict> parse_verdict(const std::string& text) {
  const auto span = extract_single_span(text, "answer");
  const std::string body = span ? *span : text;
  const nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (!j.contains("consistent") || !j.at("consistent").is_boolean()) return std::nullopt;
  if (!j.contains("action") || !j.at("action").is_string()) return std::nullopt;

  ReviewVerdict v;
  v.consistent = j.at("consistent").get<bool>();
  const std::string action = j.at("action").get<std::string>();
  if (action == "accept") {
    v.action = ReviewAction::Accept;
  } else if (action == "rerun_tool") {
    v.action = ReviewAction::RerunTool;
  } else if (action == "overwrite") {
    v.action = ReviewAction::Overwrite;
  } else {
    return std::nullopt;
  }

  const bool has_correction = j.contains("corrected_answer") &&
                              j.at("corrected_answer").is_string() &&
                              !trim(j.at("corrected_answer").get<std::string>()).empty();
  if (v.action == ReviewAction::Overwrite) {
    // A corrected answer accompanies exactly the overwrite action.
    if (!has_correction) return std::nullopt;
    v.corrected_answer = trim(j.at("corrected_answer").get<std::string>());
  } else if (j.contains("corrected_answer") && !j.at("corrected_answer").is_null() &&
             has_correction) {
    return std::nullopt;
  }
  return v;
}

// Evidence views for one grounded_vqa tool call.
struct MaskEntry {
  std::string entity;
  BinaryMask mask;
  Confidence conf;
  BBox box;
};

}  // namespace

ReviewVerdict review_step(const std::string& cot, const std::string& answer,
                          ChatBackend& reviewer) {
  ChatRequest req;
  req.system_prompt = prompts::review_system();
  req.turns.push_back({"user", prompts::review_user(cot, answer), {}});
  ChatResponse resp = reviewer.chat_complete(req);
  if (const auto v = parse_verdict(resp.text)) return *v;

  req.turns.push_back({"assistant", resp.text, {}});
  req.turns.push_back({"user", prompts::review_retry_reminder(), {}});
  resp = reviewer.chat_complete(req);
  if (const auto v = parse_verdict(resp.text)) return *v;
  throw UnparseableVerdict("review_step: no well-formed verdict after reprompt");
}

CoordResult run_coord(const ImageRef& image, const std::string& question,
                      const CoordBackends& backends, const CoordBudget& budget,
                      const FlowConfig& cfg, RunContext& ctx) {
  if (!backends.coordinator || !backends.proposal || !backends.segmenter ||
      !backends.gvqa) {
    throw std::invalid_argument("run_coord: missing backend");
  }
  if (!image.image || !image.image->valid()) {
    throw RasterError("run_coord: invalid input image");
  }
  RecordingChatBackend coord_chat(*backends.coordinator, ctx, Component::Coordinator);
  RecordingChatBackend proposal_chat(*backends.proposal, ctx, Component::EntityProp);
  RecordingSegmentBackend segmenter(*backends.segmenter, ctx);
  RecordingChatBackend gvqa(*backends.gvqa, ctx, Component::Gvqa);

  const std::vector<ToolSchema> tools = builtin_toolset();
  ChatRequest conversation;
  conversation.system_prompt =
      prompts::coordinator_system(budget.max_tool_calls, budget.max_review_rounds);
  conversation.tools = tools;
  conversation.turns.push_back({"user", prompts::coordinator_user(question), {image}});

  CoordResult result;
  AgentTranscript& tr = result.transcript;

  std::vector<MaskEntry> masks;
  struct Grounded {
    std::string pre;
    std::string post;
    ClueKind clue;
  };
  std::optional<Grounded> last_grounded;

  // Builds the evidence for one grounded_vqa call; throws on bad arguments.
  auto build_views = [&](const nlohmann::json& args,
                         ClueKind clue) -> std::vector<EvidenceView> {
    if (clue == ClueKind::Global) {
      return {make_global_view(image.image->width, image.image->height)};
    }
    const std::string mask_id = args.value("mask_id", std::string());
    if (mask_id.size() < 2 || mask_id[0] != 'm') {
      throw std::invalid_argument(std::string(to_string(clue)) +
                                  " evidence requires a mask_id from segment_entity");
    }
    std::size_t index = 0;
    for (std::size_t i = 1; i < mask_id.size(); ++i) {
      if (mask_id[i] < '0' || mask_id[i] > '9') {
        throw std::invalid_argument("unknown mask_id " + mask_id);
      }
      index = index * 10 + static_cast<std::size_t>(mask_id[i] - '0');
    }
    if (index == 0 || index > masks.size()) {
      throw std::invalid_argument("unknown mask_id " + mask_id);
    }
    const MaskEntry& entry = masks[index - 1];
    if (clue == ClueKind::ZoomIn) {
      return {make_zoom_view(*image.image, entry.box, cfg.pad_frac, entry.entity,
                             entry.conf)};
    }
    return {make_mask_view(entry.mask, entry.entity, entry.conf)};
  };

  // One grounded call plus its review loop; returns the tool result JSON.
  auto exec_grounded = [&](const ToolCall& call) -> nlohmann::json {
    const std::string q = call.args.at("question").get<std::string>();
    const ClueKind clue =
        clue_kind_from_string(call.args.at("clue_type").get<std::string>());
    const std::vector<EvidenceView> views = build_views(call.args, clue);

    ClueAnswer ans = grounded_answer(gvqa, image, q, clue, views);
    ++tr.gvqa_calls;
    std::string pre = ans.answer;
    std::string post = ans.answer;
    std::string think = ans.think;

    int rounds_left = budget.max_review_rounds;
    while (rounds_left > 0) {
      --rounds_left;
      ++tr.review_rounds;
      ReviewVerdict verdict;
      try {
        verdict = review_step(think, post, coord_chat);
      } catch (const UnparseableVerdict&) {
        verdict.defaulted = true;
        tr.warnings.push_back("review verdict unparseable twice; accepted as-is");
      }
      tr.events.push_back(ReviewRec{verdict, think, post});
      if (verdict.action == ReviewAction::Overwrite) {
        post = *verdict.corrected_answer;
        break;
      }
      if (verdict.action == ReviewAction::Accept) break;
      // Rerun: identical arguments, once per review round, budget allowing.
      if (tr.tool_calls >= budget.max_tool_calls) {
        tr.warnings.push_back("rerun requested after tool budget exhausted");
        break;
      }
      ++tr.tool_calls;
      tr.events.push_back(ToolCallRec{"grounded_vqa", call.args});
      ans = grounded_answer(gvqa, image, q, clue, views);
      ++tr.gvqa_calls;
      tr.events.push_back(
          ToolResultRec{"grounded_vqa", {{"answer", ans.answer}}, false});
      pre = ans.answer;
      post = ans.answer;
      think = ans.think;
    }
    last_grounded = Grounded{pre, post, clue};
    return {{"clue", std::string(to_string(clue))}, {"answer", post}};
  };

  bool reprompted_for_grounding = false;
  bool out_of_budget = false;
  const int max_iterations = budget.max_tool_calls + 4;
  for (int iter = 0; iter < max_iterations && !out_of_budget; ++iter) {
    const ChatResponse resp = coord_chat.chat_complete(conversation);
    tr.events.push_back(CoordMessage{resp.text});

    if (resp.tool_calls.empty()) {
      if (tr.gvqa_calls == 0) {
        if (!reprompted_for_grounding) {
          reprompted_for_grounding = true;
          conversation.turns.push_back({"assistant", resp.text, {}});
          conversation.turns.push_back(
              {"user", prompts::coordinator_must_ground_reminder(), {}});
          continue;
        }
        throw ProtocolViolation(
            "run_coord: planner finished without any grounded call");
      }
      break;  // grounded at least once; finish
    }

    conversation.turns.push_back({"assistant", resp.text, {}});
    for (const auto& raw : resp.tool_calls) {
      if (tr.tool_calls >= budget.max_tool_calls) {
        out_of_budget = true;
        break;
      }
      ++tr.tool_calls;
      tr.events.push_back(ToolCallRec{raw.name, raw.args});
      nlohmann::json outcome;
      bool error = false;
      try {
        ChatResponse single;
        single.tool_calls = {raw};
        const ToolCall call = parse_tool_calls(single, tools).front();
        if (call.name == "propose_entities") {
          const EntityProposal proposal = propose_entities(
              image, call.args.at("question").get<std::string>(), proposal_chat,
              cfg.max_entities);
          outcome = {{"entities", proposal.entities}};
        } else if (call.name == "segment_entity") {
          const std::string entity = call.args.at("entity_name").get<std::string>();
          const SegmentationResult seg = segmenter.segment_entity({image, entity});
          seg.mask.validate();
          if (seg.mask.width != image.image->width ||
              seg.mask.height != image.image->height) {
            throw MalformedResponse("segment_entity: mask shape mismatch");
          }
          const Confidence conf =
              seg.confidence ? *seg.confidence : mask_confidence(seg.mask);
          auto [mask, box] = binarize_and_bbox(seg.mask, cfg.bin_threshold);
          masks.push_back({entity, std::move(mask), conf, box});
          outcome = {{"mask_id", "m" + std::to_string(masks.size())},
                     {"confidence", conf.value},
                     {"confidence_percent", confidence_percent(conf)},
                     {"bbox", {box.x_min, box.y_min, box.x_max, box.y_max}},
                     {"below_threshold", conf.value < cfg.tau_c}};
        } else {
          outcome = exec_grounded(call);
        }
      } catch (const MissingFixture&) {
        throw;  // harness misconfiguration, not a tool failure
      } catch (const nlohmann::json::exception& e) {
        error = true;
        outcome = {{"error", std::string("bad arguments: ") + e.what()}};
      } catch (const ProtocolViolation&) {
        throw;
      } catch (const std::exception& e) {
        // Surfaced to the planner for replanning.
        error = true;
        outcome = {{"error", e.what()}};
      }
      tr.events.push_back(ToolResultRec{raw.name, outcome, error});
      conversation.turns.push_back(
          {"tool",
           nlohmann::json{
               {"tool", raw.name}, {"args", raw.args}, {"result", outcome}, {"error", error}}
               .dump(),
           {}});
    }
  }

  if (!last_grounded) {
    throw ProtocolViolation("run_coord: budget exhausted before any grounded call");
  }
  // Budget exhaustion falls back to the most recent grounded answer; so does
  // a planner that keeps requesting tools at the iteration guard.
  result.final_answer = last_grounded->post;
  result.pre_review_answer = last_grounded->pre;
  result.final_clue = last_grounded->clue;
  if (ctx.writer) {
    result.trace_id = ctx.writer->run_id();
    ctx.writer->set_summary({{"pipeline", "coord"},
                             {"image", image.id},
                             {"question", question},
                             {"final_answer", result.final_answer},
                             {"pre_review_answer", result.pre_review_answer},
                             {"tool_calls", tr.tool_calls},
                             {"gvqa_calls", tr.gvqa_calls},
                             {"warnings", tr.warnings}});
  }
  return result;
}

EditTable edit_accounting(const std::vector<EditInput>& runs) {
  auto classify = [](EditCell& cell, const EditInput& run) {
    const bool pre_ok = reward_accuracy(run.pre, run.gt, run.qtype) == 1.0;
    const bool post_ok = reward_accuracy(run.post, run.gt, run.qtype) == 1.0;
    const bool changed = normalize_answer(run.pre) != normalize_answer(run.post);
    ++cell.n;
    if (!changed) {
      ++cell.unchanged;
    } else if (!pre_ok && post_ok) {
      ++cell.fixed;
    } else if (pre_ok && !post_ok) {
      ++cell.broke;
    } else if (pre_ok) {
      ++cell.changed_right;
    } else {
      ++cell.changed_wrong;
    }
  };
  auto finish = [](EditCell& cell) {
    if (cell.n == 0) return;
    const double n = static_cast<double>(cell.n);
    cell.fixed_ratio = static_cast<double>(cell.fixed) / n;
    cell.broke_ratio = static_cast<double>(cell.broke) / n;
    // Integer difference first: the identity with accuracy deltas is exact.
    cell.delta = static_cast<double>(static_cast<std::int64_t>(cell.fixed) -
                                     static_cast<std::int64_t>(cell.broke)) /
                 n;
    cell.total_overwrite = static_cast<double>(cell.fixed + cell.broke) / n;
  };

  EditTable table;
  for (const auto& run : runs) {
    classify(table.overall, run);
    auto it = std::find_if(table.per_dataset.begin(), table.per_dataset.end(),
                           [&](const auto& p) { return p.first == run.dataset; });
    if (it == table.per_dataset.end()) {
      table.per_dataset.emplace_back(run.dataset, EditCell{});
      it = std::prev(table.per_dataset.end());
    }
    classify(it->second, run);
  }
  finish(table.overall);
  for (auto& [name, cell] : table.per_dataset) finish(cell);
  return table;
}

}  // namespace care
