// SPDX-License-Identifier: Apache-2.0
//
// Wire codec and request canonicalization. Chat payloads mirror a
// chat-completions-style JSON schema (messages with typed content parts,
// function tools, temperature). Image parts carry raw base64 pixel data so
// encodings stay byte-stable across codec library versions. Request digests
// are FNV-1a over the canonical serialization (sorted keys, collapsed
// whitespace) and key the fixture-replay backends.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "care/backends.hpp"

namespace care {

std::string base64_encode(const void* data, std::size_t n);
std::vector<std::uint8_t> base64_decode(const std::string& text);

nlohmann::json encode_image(const Image& img);
Image decode_image(const nlohmann::json& j);

nlohmann::json encode_prob_mask(const ProbMask& mask);
ProbMask decode_prob_mask(const nlohmann::json& j);

// Throws DuplicateToolName when two schemas share a name.
nlohmann::json encode_tool_schemas(const std::vector<ToolSchema>& tools);

nlohmann::json encode_chat_request(const ChatRequest& req, const std::string& model);
ChatRequest decode_chat_request(const nlohmann::json& j);

nlohmann::json encode_chat_response(const ChatResponse& resp);
// Throws MalformedResponse when the payload lacks the expected shape.
ChatResponse decode_chat_response(const nlohmann::json& j);

nlohmann::json encode_segmentation_request(const SegmentationRequest& req);
nlohmann::json encode_segmentation_result(const SegmentationResult& res);
SegmentationResult decode_segmentation_result(const nlohmann::json& j);

// Stable digests (16 hex chars) over canonicalized requests.
std::string chat_request_digest(const ChatRequest& req);
std::string segmentation_request_digest(const SegmentationRequest& req);
std::string embed_request_digest(const std::vector<std::string>& texts);

// Validates tool calls against the registered schemas: unknown tool names
// and missing required parameters throw; unknown parameters are flagged.
std::vector<ToolCall> parse_tool_calls(const ChatResponse& resp,
                                       const std::vector<ToolSchema>& tools);

// The engine's built-in tool surface: propose_entities, segment_entity and
// grounded_vqa (which requires question and clue_type; the conversation's
// image is implicit).
std::vector<ToolSchema> builtin_toolset();

}  // namespace care
