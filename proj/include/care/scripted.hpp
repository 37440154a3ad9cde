// SPDX-License-Identifier: Apache-2.0
//
// Fixture-replay backends, recording wrappers, the deterministic test
// embedder, and the constrained yes/no judge. Fixtures are keyed by the
// canonical request digest, so a recorded trace doubles as a fixture set.

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "care/backends.hpp"
#include "care/codec.hpp"
#include "care/trace.hpp"

namespace care {

// Replays canned chat responses keyed by request digest. Unknown digests
// throw MissingFixture naming the digest.
class ScriptedChatBackend : public ChatBackend {
 public:
  ScriptedChatBackend() = default;
  explicit ScriptedChatBackend(std::map<std::string, nlohmann::json> fixtures)
      : fixtures_(std::move(fixtures)) {}

  void add(const std::string& digest, nlohmann::json response_payload);
  ChatResponse chat_complete(const ChatRequest& req) override;

  std::size_t size() const { return fixtures_.size(); }

 private:
  std::map<std::string, nlohmann::json> fixtures_;
};

class ScriptedSegmentBackend : public SegmentBackend {
 public:
  ScriptedSegmentBackend() = default;
  explicit ScriptedSegmentBackend(std::map<std::string, nlohmann::json> fixtures)
      : fixtures_(std::move(fixtures)) {}

  void add(const std::string& digest, nlohmann::json result_payload);
  SegmentationResult segment_entity(const SegmentationRequest& req) override;

  std::size_t size() const { return fixtures_.size(); }

 private:
  std::map<std::string, nlohmann::json> fixtures_;
};

class ScriptedEmbedBackend : public EmbedBackend {
 public:
  void add(const std::string& digest, std::vector<std::vector<float>> vectors);
  std::vector<std::vector<float>> embed_texts(
      const std::vector<std::string>& texts) override;

 private:
  std::map<std::string, std::vector<std::vector<float>>> fixtures_;
};

// Adapter for tests and bootstrap tooling: answers with a callback.
class CallbackChatBackend : public ChatBackend {
 public:
  using Fn = std::function<ChatResponse(const ChatRequest&)>;
  explicit CallbackChatBackend(Fn fn) : fn_(std::move(fn)) {}
  ChatResponse chat_complete(const ChatRequest& req) override { return fn_(req); }

 private:
  Fn fn_;
};

class CallbackSegmentBackend : public SegmentBackend {
 public:
  using Fn = std::function<SegmentationResult(const SegmentationRequest&)>;
  explicit CallbackSegmentBackend(Fn fn) : fn_(std::move(fn)) {}
  SegmentationResult segment_entity(const SegmentationRequest& req) override {
    return fn_(req);
  }

 private:
  Fn fn_;
};

// Wraps a backend and appends one trace record per call, tagged with the
// pipeline component the call served.
class RecordingChatBackend : public ChatBackend {
 public:
  RecordingChatBackend(ChatBackend& inner, RunContext& ctx, Component component)
      : inner_(inner), ctx_(ctx), component_(component) {}
  ChatResponse chat_complete(const ChatRequest& req) override;

 private:
  ChatBackend& inner_;
  RunContext& ctx_;
  Component component_;
};

class RecordingSegmentBackend : public SegmentBackend {
 public:
  RecordingSegmentBackend(SegmentBackend& inner, RunContext& ctx)
      : inner_(inner), ctx_(ctx) {}
  SegmentationResult segment_entity(const SegmentationRequest& req) override;

 private:
  SegmentBackend& inner_;
  RunContext& ctx_;
};

class RecordingEmbedBackend : public EmbedBackend {
 public:
  RecordingEmbedBackend(EmbedBackend& inner, RunContext& ctx)
      : inner_(inner), ctx_(ctx) {}
  std::vector<std::vector<float>> embed_texts(
      const std::vector<std::string>& texts) override;

 private:
  EmbedBackend& inner_;
  RunContext& ctx_;
};

// Deterministic test embedder: hashes the normalized text into a seeded
// pseudo-random unit vector, so equal strings embed identically and
// different strings land on distinct directions.
class HashEmbedBackend : public EmbedBackend {
 public:
  explicit HashEmbedBackend(std::uint64_t seed = 42, int dim = 64)
      : seed_(seed), dim_(dim) {}
  std::vector<std::vector<float>> embed_texts(
      const std::vector<std::string>& texts) override;

 private:
  std::uint64_t seed_;
  int dim_;
};

// Fixture files: one JSON object per line with "digest" and "response".
std::map<std::string, nlohmann::json> load_fixture_file(const std::string& path);
void save_fixture_file(const std::string& path,
                       const std::map<std::string, nlohmann::json>& fixtures);

// Builds fixture maps from a recorded run, split into chat-style components
// and segmentation (embed records are returned separately).
struct TraceFixtures {
  std::map<std::string, nlohmann::json> chat;
  std::map<std::string, nlohmann::json> segment;
  std::map<std::string, nlohmann::json> embed;
};
TraceFixtures fixtures_from_trace(const std::vector<TraceRecord>& records);

// Constrained open-answer judge. Verbatim (normalized) equality
// short-circuits without a model call; otherwise the judge is asked for a
// strict yes/no, reprompted once, then UnparseableVerdict is thrown.
bool judge_answer(ChatBackend& judge, const std::string& question,
                  const std::string& gt, const std::string& pred);

}  // namespace care
