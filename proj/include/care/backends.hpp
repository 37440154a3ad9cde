// SPDX-License-Identifier: Apache-2.0
//
// Model backend contracts. Images travel by reference inside the engine and
// are serialized only at the wire boundary. Every backend is swappable
// between a remote HTTP client and a scripted fixture-replay double.

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "care/evidence.hpp"
#include "care/raster.hpp"

namespace care {

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TimeoutError : BackendError {
  using BackendError::BackendError;
};
struct MalformedResponse : BackendError {
  using BackendError::BackendError;
};
struct MissingFixture : BackendError {
  using BackendError::BackendError;
};
struct UnknownTool : BackendError {
  using BackendError::BackendError;
};
struct MissingRequiredParam : BackendError {
  using BackendError::BackendError;
};
struct DuplicateToolName : BackendError {
  using BackendError::BackendError;
};
struct UnparseableVerdict : BackendError {
  using BackendError::BackendError;
};

// Shared, immutable raster plus a stable identifier (path or synthetic name).
struct ImageRef {
  std::string id;
  std::shared_ptr<const Image> image;
};

ImageRef make_image_ref(std::string id, Image img);

struct ChatTurn {
  std::string role;  // "user", "assistant", "tool"
  std::string text;
  std::vector<ImageRef> images;
};

struct ParamSpec {
  std::string name;
  std::string type;  // JSON schema scalar type name
  bool required = false;
  std::string description;
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
};

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct ChatRequest {
  std::string system_prompt;
  std::vector<ChatTurn> turns;
  std::vector<ToolSchema> tools;
  Decoding decoding;
};

struct RawToolCall {
  std::string name;
  nlohmann::json args;
};

struct ChatResponse {
  std::string text;
  std::vector<RawToolCall> tool_calls;
};

// A validated tool call; unknown parameters are kept and flagged, never
// silently dropped.
struct ToolCall {
  std::string name;
  nlohmann::json args;
  std::vector<std::string> unknown_params;
};

struct SegmentationRequest {
  ImageRef image;
  std::string entity;
};

struct SegmentationResult {
  ProbMask mask;
  // Backend-supplied confidence when present; otherwise the engine scores
  // the mask itself.
  std::optional<Confidence> confidence;
};

struct BackendPolicy {
  double timeout_s = 30.0;
  int max_retries = 2;
  double backoff_s = 0.05;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse chat_complete(const ChatRequest& req) = 0;
};

class SegmentBackend {
 public:
  virtual ~SegmentBackend() = default;
  virtual SegmentationResult segment_entity(const SegmentationRequest& req) = 0;
};

class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  virtual std::vector<std::vector<float>> embed_texts(
      const std::vector<std::string>& texts) = 0;
};

}  // namespace care
