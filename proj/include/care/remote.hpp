// SPDX-License-Identifier: Apache-2.0
//
// HTTP backends speaking the wire codec. Plain HTTP; the credential rides
// as a bearer header. Retries cover transport errors and 5xx responses
// with linear backoff, then TimeoutError.

#pragma once

#include <string>

#include "care/backends.hpp"

namespace care {

struct RemoteEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string api_key;
  std::string model;
  BackendPolicy policy;
};

class RemoteChatBackend : public ChatBackend {
 public:
  explicit RemoteChatBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  // POST {base}/v1/chat/completions
  ChatResponse chat_complete(const ChatRequest& req) override;

 private:
  RemoteEndpoint endpoint_;
};

class RemoteSegmentBackend : public SegmentBackend {
 public:
  explicit RemoteSegmentBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  // POST {base}/v1/segment
  SegmentationResult segment_entity(const SegmentationRequest& req) override;

 private:
  RemoteEndpoint endpoint_;
};

class RemoteEmbedBackend : public EmbedBackend {
 public:
  explicit RemoteEmbedBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  // POST {base}/v1/embeddings
  std::vector<std::vector<float>> embed_texts(
      const std::vector<std::string>& texts) override;

 private:
  RemoteEndpoint endpoint_;
};

}  // namespace care
