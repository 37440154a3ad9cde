// SPDX-License-Identifier: Apache-2.0

#include "care/scripted.hpp"

#include <cmath>
#include <fstream>

#include "care/prompts.hpp"
#include "care/text.hpp"

namespace care {

ImageRef make_image_ref(std::string id, Image img) {
  return ImageRef{std::move(id), std::make_shared<Image>(std::move(img))};
}

void ScriptedChatBackend::add(const std::string& digest, nlohmann::json response_payload) {
  fixtures_[digest] = std::move(response_payload);
}

ChatResponse ScriptedChatBackend::chat_complete(const ChatRequest& req) {
  const std::string digest = chat_request_digest(req);
  const auto it = fixtures_.find(digest);
  if (it == fixtures_.end()) {
    throw MissingFixture("scripted chat: no fixture for digest " + digest);
  }
  return decode_chat_response(it->second);
}

void ScriptedSegmentBackend::add(const std::string& digest, nlohmann::json result_payload) {
  fixtures_[digest] = std::move(result_payload);
}

SegmentationResult ScriptedSegmentBackend::segment_entity(const SegmentationRequest& req) {
  const std::string digest = segmentation_request_digest(req);
  const auto it = fixtures_.find(digest);
  if (it == fixtures_.end()) {
    throw MissingFixture("scripted segmenter: no fixture for digest " + digest);
  }
  return decode_segmentation_result(it->second);
}

void ScriptedEmbedBackend::add(const std::string& digest,
                               std::vector<std::vector<float>> vectors) {
  fixtures_[digest] = std::move(vectors);
}

std::vector<std::vector<float>> ScriptedEmbedBackend::embed_texts(
    const std::vector<std::string>& texts) {
  const std::string digest = embed_request_digest(texts);
  const auto it = fixtures_.find(digest);
  if (it == fixtures_.end()) {
    throw MissingFixture("scripted embedder: no fixture for digest " + digest);
  }
  return it->second;
}

ChatResponse RecordingChatBackend::chat_complete(const ChatRequest& req) {
  const std::string digest = chat_request_digest(req);
  const std::int64_t t0 = ctx_.now();
  ChatResponse resp = inner_.chat_complete(req);
  const std::int64_t t1 = ctx_.now();
  ctx_.record(component_, digest, encode_chat_response(resp), t1 - t0);
  return resp;
}

SegmentationResult RecordingSegmentBackend::segment_entity(const SegmentationRequest& req) {
  const std::string digest = segmentation_request_digest(req);
  const std::int64_t t0 = ctx_.now();
  SegmentationResult res = inner_.segment_entity(req);
  const std::int64_t t1 = ctx_.now();
  ctx_.record(Component::Segmentation, digest, encode_segmentation_result(res), t1 - t0);
  return res;
}

std::vector<std::vector<float>> RecordingEmbedBackend::embed_texts(
    const std::vector<std::string>& texts) {
  const std::string digest = embed_request_digest(texts);
  const std::int64_t t0 = ctx_.now();
  std::vector<std::vector<float>> vectors = inner_.embed_texts(texts);
  const std::int64_t t1 = ctx_.now();
  nlohmann::json payload = nlohmann::json::array();
  for (const auto& v : vectors) payload.push_back(v);
  ctx_.record(Component::Embed, digest, {{"embeddings", payload}}, t1 - t0);
  return vectors;
}

namespace {

// splitmix64: tiny, fully portable PRNG for the test embedder.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<std::vector<float>> HashEmbedBackend::embed_texts(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const std::string norm = normalize_entity(text);
    std::uint64_t state = seed_ ^ fnv1a64(norm.data(), norm.size());
    std::vector<float> v(dim_);
    double norm_sq = 0.0;
    do {
      norm_sq = 0.0;
      for (int i = 0; i < dim_; ++i) {
        // Uniform in [-1, 1); direction quality is all that matters here.
        const double u =
            static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        v[i] = static_cast<float>(2.0 * u - 1.0);
        norm_sq += static_cast<double>(v[i]) * v[i];
      }
    } while (!(norm_sq > 0.0));
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (int i = 0; i < dim_; ++i) v[i] = static_cast<float>(v[i] * inv);
    out.push_back(std::move(v));
  }
  return out;
}

std::map<std::string, nlohmann::json> load_fixture_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StoreUnavailable("cannot open fixture file: " + path);
  std::map<std::string, nlohmann::json> fixtures;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("digest") || !j.contains("response")) {
      throw CorruptTrace("fixture file " + path + ": bad record at line " +
                         std::to_string(line_no));
    }
    fixtures[j.at("digest").get<std::string>()] = j.at("response");
  }
  return fixtures;
}

void save_fixture_file(const std::string& path,
                       const std::map<std::string, nlohmann::json>& fixtures) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StoreUnavailable("cannot write fixture file: " + path);
  for (const auto& [digest, response] : fixtures) {
    out << nlohmann::json{{"digest", digest}, {"response", response}}.dump() << "\n";
  }
}

TraceFixtures fixtures_from_trace(const std::vector<TraceRecord>& records) {
  TraceFixtures out;
  for (const auto& rec : records) {
    switch (rec.component) {
      case Component::Segmentation:
        out.segment[rec.request_digest] = rec.response;
        break;
      case Component::Embed:
        out.embed[rec.request_digest] = rec.response;
        break;
      default:
        out.chat[rec.request_digest] = rec.response;
        break;
    }
  }
  return out;
}

namespace {

// First yes/no token of the folded response, or nullopt.
std::optional<bool> parse_yes_no(const std::string& text) {
  const std::string folded = normalize_answer(text);
  if (folded == "yes" || folded.rfind("yes ", 0) == 0 ||
      folded.rfind("yes.", 0) == 0 || folded.rfind("yes,", 0) == 0) {
    return true;
  }
  if (folded == "no" || folded.rfind("no ", 0) == 0 ||
      folded.rfind("no.", 0) == 0 || folded.rfind("no,", 0) == 0) {
    return false;
  }
  return std::nullopt;
}

}  // namespace

bool judge_answer(ChatBackend& judge, const std::string& question,
                  const std::string& gt, const std::string& pred) {
  if (normalize_answer(pred) == normalize_answer(gt)) return true;

  ChatRequest req;
  req.system_prompt = prompts::judge_system();
  req.turns.push_back({"user", prompts::judge_user(question, gt, pred), {}});
  ChatResponse resp = judge.chat_complete(req);
  if (const auto verdict = parse_yes_no(resp.text)) return *verdict;

  req.turns.push_back({"assistant", resp.text, {}});
  req.turns.push_back({"user", prompts::judge_retry_reminder(), {}});
  resp = judge.chat_complete(req);
  if (const auto verdict = parse_yes_no(resp.text)) return *verdict;
  throw UnparseableVerdict("judge_answer: no yes/no verdict after reprompt");
}

}  // namespace care
