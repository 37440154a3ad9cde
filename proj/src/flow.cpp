// SPDX-License-Identifier: Apache-2.0

#include "care/flow.hpp"

#include <algorithm>
#include <set>

#include "care/codec.hpp"
#include "care/prompts.hpp"
#include "care/scripted.hpp"
#include "care/text.hpp"

namespace care {

ClueAnswer grounded_answer(ChatBackend& gvqa, const ImageRef& image,
                           const std::string& question, ClueKind clue,
                           const std::vector<EvidenceView>& views) {
  std::string note;
  for (const auto& view : views) {
    if (view.metadata.empty()) continue;
    if (note.empty()) {
      note = "Evidence: " + view.metadata;
    } else {
      note += "; " + view.metadata;
    }
  }
  ChatRequest req;
  req.system_prompt = prompts::gvqa_system();
  ChatTurn turn;
  turn.role = "user";
  turn.text = prompts::gvqa_user(question, clue, note);
  turn.images.push_back(image);
  for (std::size_t i = 0; i < views.size(); ++i) {
    std::string id = std::string(to_string(clue)) + ":" + std::to_string(i);
    if (views[i].entity_name) id += ":" + *views[i].entity_name;
    turn.images.push_back(
        {std::move(id), std::make_shared<Image>(views[i].payload)});
  }
  req.turns.push_back(std::move(turn));

  const ChatResponse resp = gvqa.chat_complete(req);
  ClueAnswer out;
  out.clue = clue;
  if (const auto parsed = parse_think_answer(resp.text)) {
    out.think = parsed->think;
    out.answer = trim(parsed->answer);
    out.format_valid = true;
  } else {
    // Malformed grounding reply: the raw text still has to vote.
    out.answer = trim(resp.text);
    out.format_valid = false;
  }
  return out;
}

std::vector<std::string> parse_entity_answer(const std::string& raw) {
  const auto span = extract_single_span(raw, "answer");
  if (!span) throw ParseFailure("entity answer: missing <answer> span");
  const nlohmann::json j = nlohmann::json::parse(*span, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("entities") ||
      !j.at("entities").is_array()) {
    throw ParseFailure("entity answer: expected {\"entities\": [...]}");
  }
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& item : j.at("entities")) {
    std::string name;
    if (item.is_string()) {
      name = item.get<std::string>();
    } else if (item.is_object() && item.contains("name") && item.at("name").is_string()) {
      // Size/position hints ride along here; only the name is used.
      name = item.at("name").get<std::string>();
    } else {
      throw ParseFailure("entity answer: entry is neither name nor object");
    }
    name = collapse_whitespace(name);
    if (name.empty()) throw ParseFailure("entity answer: empty name");
    if (seen.insert(normalize_entity(name)).second) names.push_back(std::move(name));
  }
  if (names.empty()) throw ParseFailure("entity answer: empty entity list");
  return names;
}

EntityProposal propose_entities(const ImageRef& image, const std::string& question,
                                ChatBackend& chat, int max_entities) {
  ChatRequest req;
  req.system_prompt = prompts::proposal_system();
  req.turns.push_back({"user", prompts::proposal_user(question), {image}});

  ChatResponse resp = chat.chat_complete(req);
  EntityProposal proposal;
  proposal.raw_text = resp.text;
  try {
    proposal.entities = parse_entity_answer(resp.text);
  } catch (const ParseFailure&) {
    req.turns.push_back({"assistant", resp.text, {}});
    req.turns.push_back({"user", prompts::malformed_retry_reminder(), {}});
    resp = chat.chat_complete(req);
    proposal.raw_text = resp.text;
    try {
      proposal.entities = parse_entity_answer(resp.text);
    } catch (const ParseFailure&) {
      proposal.entities.clear();  // degrade to global-only evidence
    }
  }
  if (proposal.entities.size() > static_cast<std::size_t>(max_entities)) {
    proposal.entities.resize(max_entities);
  }
  return proposal;
}

std::string majority_vote(const std::array<ClueAnswer, 3>& answers) {
  // Clue priority for picking the representative and the fallback.
  const std::array<ClueKind, 3> priority{ClueKind::ZoomIn, ClueKind::MaskView,
                                         ClueKind::Global};
  auto by_kind = [&](ClueKind kind) -> const ClueAnswer& {
    for (const auto& a : answers) {
      if (a.clue == kind) return a;
    }
    throw std::invalid_argument("majority_vote: missing clue answer");
  };

  for (ClueKind kind : priority) {
    const std::string norm = normalize_answer(by_kind(kind).answer);
    int votes = 0;
    for (const auto& a : answers) {
      if (normalize_answer(a.answer) == norm) ++votes;
    }
    if (votes >= 2) return by_kind(kind).answer;
  }
  return by_kind(ClueKind::ZoomIn).answer;
}

FlowResult run_flow(const ImageRef& image, const std::string& question,
                    const FlowBackends& backends, const FlowConfig& cfg,
                    RunContext& ctx) {
  if (!backends.proposal || !backends.segmenter || !backends.gvqa) {
    throw std::invalid_argument("run_flow: missing backend");
  }
  if (!image.image || !image.image->valid()) {
    throw RasterError("run_flow: invalid input image");
  }
  RecordingChatBackend proposal_chat(*backends.proposal, ctx, Component::EntityProp);
  RecordingSegmentBackend segmenter(*backends.segmenter, ctx);
  RecordingChatBackend gvqa(*backends.gvqa, ctx, Component::Gvqa);

  FlowResult result;
  result.proposal =
      propose_entities(image, question, proposal_chat, cfg.max_entities);

  for (const auto& entity : result.proposal.entities) {
    const SegmentationResult seg = segmenter.segment_entity({image, entity});
    seg.mask.validate();
    if (seg.mask.width != image.image->width ||
        seg.mask.height != image.image->height) {
      throw MalformedResponse("run_flow: mask shape does not match image");
    }
    const Confidence conf =
        seg.confidence ? *seg.confidence : mask_confidence(seg.mask);
    if (conf.value < cfg.tau_c) continue;  // confidence gate
    try {
      auto [mask, box] = binarize_and_bbox(seg.mask, cfg.bin_threshold);
      result.kept_masks.push_back({entity, std::move(mask), conf, box});
    } catch (const NoForeground&) {
      // A confident but empty mask grounds nothing; drop the entity.
    }
    if (result.kept_masks.size() >= static_cast<std::size_t>(cfg.evidence_cap)) break;
  }

  const int width = image.image->width;
  const int height = image.image->height;
  std::vector<EvidenceView> zoom_views, mask_views;
  for (const auto& kept : result.kept_masks) {
    zoom_views.push_back(make_zoom_view(*image.image, kept.bbox, cfg.pad_frac,
                                        kept.entity, kept.confidence));
    mask_views.push_back(make_mask_view(kept.mask, kept.entity, kept.confidence));
  }
  const std::vector<EvidenceView> global_views{make_global_view(width, height)};
  // With nothing past the gate, every clue degrades to global evidence.
  const auto& zoom_or_global = zoom_views.empty() ? global_views : zoom_views;
  const auto& mask_or_global = mask_views.empty() ? global_views : mask_views;

  result.per_clue[0] =
      grounded_answer(gvqa, image, question, ClueKind::ZoomIn, zoom_or_global);
  result.per_clue[1] =
      grounded_answer(gvqa, image, question, ClueKind::MaskView, mask_or_global);
  result.per_clue[2] =
      grounded_answer(gvqa, image, question, ClueKind::Global, global_views);

  result.final_answer = majority_vote(result.per_clue);
  if (ctx.writer) {
    result.trace_id = ctx.writer->run_id();
    ctx.writer->set_summary({{"pipeline", "flow"},
                             {"image", image.id},
                             {"question", question},
                             {"final_answer", result.final_answer}});
  }
  return result;
}

}  // namespace care
