// SPDX-License-Identifier: Apache-2.0

#include "care/remote.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

#include "care/codec.hpp"

namespace care {

namespace {

// POSTs JSON with the endpoint's retry policy; throws TimeoutError after
// the retry budget and MalformedResponse on non-JSON or 4xx replies.
nlohmann::json post_json(const RemoteEndpoint& endpoint, const std::string& path,
                         const nlohmann::json& body) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(std::chrono::duration<double>(endpoint.policy.timeout_s));
  client.set_read_timeout(std::chrono::duration<double>(endpoint.policy.timeout_s));
  client.set_write_timeout(std::chrono::duration<double>(endpoint.policy.timeout_s));
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  const std::string payload = body.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= endpoint.policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(
          endpoint.policy.backoff_s * attempt));
    }
    httplib::Result result = client.Post(path, headers, payload, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;  // retryable
    }
    if (result->status >= 500) {
      last_error = "server error: status " + std::to_string(result->status);
      continue;  // retryable
    }
    if (result->status != 200) {
      throw MalformedResponse("remote: status " + std::to_string(result->status) +
                              " from " + path);
    }
    nlohmann::json parsed = nlohmann::json::parse(result->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw MalformedResponse("remote: non-JSON body from " + path);
    }
    return parsed;
  }
  throw TimeoutError("remote: " + path + " failed after " +
                     std::to_string(endpoint.policy.max_retries + 1) +
                     " attempts (" + last_error + ")");
}

}  // namespace

ChatResponse RemoteChatBackend::chat_complete(const ChatRequest& req) {
  const nlohmann::json reply =
      post_json(endpoint_, "/v1/chat/completions",
                encode_chat_request(req, endpoint_.model));
  return decode_chat_response(reply);
}

SegmentationResult RemoteSegmentBackend::segment_entity(const SegmentationRequest& req) {
  const nlohmann::json reply =
      post_json(endpoint_, "/v1/segment", encode_segmentation_request(req));
  return decode_segmentation_result(reply);
}

std::vector<std::vector<float>> RemoteEmbedBackend::embed_texts(
    const std::vector<std::string>& texts) {
  nlohmann::json body = {{"input", texts}, {"model", endpoint_.model}};
  const nlohmann::json reply = post_json(endpoint_, "/v1/embeddings", body);
  std::vector<std::vector<float>> out;
  try {
    for (const auto& item : reply.at("data")) {
      out.push_back(item.at("embedding").get<std::vector<float>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("remote embeddings: ") + e.what());
  }
  if (out.size() != texts.size()) {
    throw MalformedResponse("remote embeddings: count mismatch");
  }
  return out;
}

}  // namespace care
