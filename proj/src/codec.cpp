// SPDX-License-Identifier: Apache-2.0

#include "care/codec.hpp"

#include <algorithm>
#include <cstring>

#include "care/text.hpp"

namespace care {

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    const std::uint32_t b0 = bytes[i];
    const std::uint32_t b1 = i + 1 < n ? bytes[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < n ? bytes[i + 2] : 0;
    const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
    out.push_back(kB64Alphabet[(triple >> 18) & 0x3F]);
    out.push_back(kB64Alphabet[(triple >> 12) & 0x3F]);
    out.push_back(i + 1 < n ? kB64Alphabet[(triple >> 6) & 0x3F] : '=');
    out.push_back(i + 2 < n ? kB64Alphabet[triple & 0x3F] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = b64_value(c);
    if (v < 0) throw MalformedResponse("base64: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

nlohmann::json encode_image(const Image& img) {
  return {{"width", img.width},
          {"height", img.height},
          {"channels", img.channels},
          {"pixels_b64", base64_encode(img.pixels.data(), img.pixels.size())}};
}

Image decode_image(const nlohmann::json& j) {
  Image img;
  try {
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    img.channels = j.at("channels").get<int>();
    img.pixels = base64_decode(j.at("pixels_b64").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("decode_image: ") + e.what());
  }
  if (!img.valid()) throw MalformedResponse("decode_image: inconsistent raster");
  return img;
}

nlohmann::json encode_prob_mask(const ProbMask& mask) {
  static_assert(sizeof(float) == 4);
  return {{"width", mask.width},
          {"height", mask.height},
          {"values_b64",
           base64_encode(mask.values.data(), mask.values.size() * sizeof(float))}};
}

ProbMask decode_prob_mask(const nlohmann::json& j) {
  ProbMask mask;
  try {
    mask.width = j.at("width").get<int>();
    mask.height = j.at("height").get<int>();
    const std::vector<std::uint8_t> raw =
        base64_decode(j.at("values_b64").get<std::string>());
    if (raw.size() % sizeof(float) != 0) {
      throw MalformedResponse("decode_prob_mask: truncated float payload");
    }
    mask.values.resize(raw.size() / sizeof(float));
    std::memcpy(mask.values.data(), raw.data(), raw.size());
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("decode_prob_mask: ") + e.what());
  }
  mask.validate();
  return mask;
}

nlohmann::json encode_tool_schemas(const std::vector<ToolSchema>& tools) {
  nlohmann::json out = nlohmann::json::array();
  std::vector<std::string> seen;
  for (const auto& tool : tools) {
    for (const auto& name : seen) {
      if (name == tool.name) {
        throw DuplicateToolName("encode_tool_schemas: duplicate tool " + tool.name);
      }
    }
    seen.push_back(tool.name);
    nlohmann::json properties = nlohmann::json::object();
    nlohmann::json required = nlohmann::json::array();
    for (const auto& p : tool.params) {
      properties[p.name] = {{"type", p.type}, {"description", p.description}};
      if (p.required) required.push_back(p.name);
    }
    out.push_back({{"type", "function"},
                   {"function",
                    {{"name", tool.name},
                     {"description", tool.description},
                     {"parameters",
                      {{"type", "object"},
                       {"properties", properties},
                       {"required", required}}}}}});
  }
  return out;
}

nlohmann::json encode_chat_request(const ChatRequest& req, const std::string& model) {
  nlohmann::json messages = nlohmann::json::array();
  if (!req.system_prompt.empty()) {
    messages.push_back(
        {{"role", "system"},
         {"content", nlohmann::json::array({{{"type", "text"}, {"text", req.system_prompt}}})}});
  }
  for (const auto& turn : req.turns) {
    nlohmann::json content = nlohmann::json::array();
    if (!turn.text.empty()) {
      content.push_back({{"type", "text"}, {"text", turn.text}});
    }
    for (const auto& ref : turn.images) {
      content.push_back({{"type", "image"},
                         {"image_id", ref.id},
                         {"image", encode_image(*ref.image)}});
    }
    messages.push_back({{"role", turn.role}, {"content", content}});
  }
  nlohmann::json out = {{"model", model},
                        {"messages", messages},
                        {"temperature", req.decoding.temperature},
                        {"max_tokens", req.decoding.max_tokens}};
  if (!req.tools.empty()) out["tools"] = encode_tool_schemas(req.tools);
  return out;
}

ChatRequest decode_chat_request(const nlohmann::json& j) {
  ChatRequest req;
  try {
    for (const auto& msg : j.at("messages")) {
      const std::string role = msg.at("role").get<std::string>();
      std::string text;
      std::vector<ImageRef> images;
      for (const auto& part : msg.at("content")) {
        const std::string type = part.at("type").get<std::string>();
        if (type == "text") {
          if (!text.empty()) text += "\n";
          text += part.at("text").get<std::string>();
        } else if (type == "image") {
          ImageRef ref;
          ref.id = part.value("image_id", std::string("image"));
          ref.image = std::make_shared<Image>(decode_image(part.at("image")));
          images.push_back(std::move(ref));
        }
      }
      if (role == "system") {
        req.system_prompt = text;
      } else {
        req.turns.push_back({role, std::move(text), std::move(images)});
      }
    }
    req.decoding.temperature = j.value("temperature", 0.0);
    req.decoding.max_tokens = j.value("max_tokens", 1024);
    if (j.contains("tools")) {
      for (const auto& t : j.at("tools")) {
        ToolSchema schema;
        const auto& fn = t.at("function");
        schema.name = fn.at("name").get<std::string>();
        schema.description = fn.value("description", std::string());
        const auto& params = fn.at("parameters");
        std::vector<std::string> required;
        for (const auto& r : params.value("required", nlohmann::json::array())) {
          required.push_back(r.get<std::string>());
        }
        // Bound to a named value: items() on a temporary would dangle.
        const nlohmann::json properties =
            params.value("properties", nlohmann::json::object());
        for (const auto& [pname, pspec] : properties.items()) {
          ParamSpec p;
          p.name = pname;
          p.type = pspec.value("type", std::string("string"));
          p.description = pspec.value("description", std::string());
          p.required = std::find(required.begin(), required.end(), pname) !=
                       required.end();
          schema.params.push_back(std::move(p));
        }
        req.tools.push_back(std::move(schema));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("decode_chat_request: ") + e.what());
  }
  return req;
}

nlohmann::json encode_chat_response(const ChatResponse& resp) {
  nlohmann::json tool_calls = nlohmann::json::array();
  for (const auto& call : resp.tool_calls) {
    tool_calls.push_back(
        {{"type", "function"},
         {"function", {{"name", call.name}, {"arguments", call.args.dump()}}}});
  }
  nlohmann::json message = {{"role", "assistant"}, {"content", resp.text}};
  if (!tool_calls.empty()) message["tool_calls"] = tool_calls;
  return {{"choices", nlohmann::json::array({{{"message", message}}})}};
}

ChatResponse decode_chat_response(const nlohmann::json& j) {
  ChatResponse resp;
  try {
    const auto& choices = j.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw MalformedResponse("decode_chat_response: empty choices");
    }
    const auto& message = choices.at(0).at("message");
    if (message.contains("content") && !message.at("content").is_null()) {
      const auto& content = message.at("content");
      if (content.is_string()) {
        resp.text = content.get<std::string>();
      } else if (content.is_array()) {
        for (const auto& part : content) {
          if (part.value("type", std::string()) == "text") {
            resp.text += part.at("text").get<std::string>();
          }
        }
      }
    }
    if (message.contains("tool_calls")) {
      for (const auto& call : message.at("tool_calls")) {
        RawToolCall raw;
        const auto& fn = call.at("function");
        raw.name = fn.at("name").get<std::string>();
        const auto& args = fn.at("arguments");
        if (args.is_string()) {
          raw.args = nlohmann::json::parse(args.get<std::string>(), nullptr, false);
          if (raw.args.is_discarded()) {
            throw MalformedResponse("decode_chat_response: bad tool arguments");
          }
        } else {
          raw.args = args;
        }
        resp.tool_calls.push_back(std::move(raw));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("decode_chat_response: ") + e.what());
  }
  return resp;
}

nlohmann::json encode_segmentation_request(const SegmentationRequest& req) {
  return {{"entity", req.entity},
          {"image_id", req.image.id},
          {"image", encode_image(*req.image.image)}};
}

nlohmann::json encode_segmentation_result(const SegmentationResult& res) {
  nlohmann::json out = {{"mask", encode_prob_mask(res.mask)}};
  if (res.confidence) out["confidence"] = res.confidence->value;
  return out;
}

SegmentationResult decode_segmentation_result(const nlohmann::json& j) {
  SegmentationResult res;
  try {
    res.mask = decode_prob_mask(j.at("mask"));
    if (j.contains("confidence") && !j.at("confidence").is_null()) {
      res.confidence = Confidence{j.at("confidence").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("decode_segmentation_result: ") + e.what());
  }
  return res;
}

std::string chat_request_digest(const ChatRequest& req) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& turn : req.turns) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& ref : turn.images) {
      images.push_back(hash_hex(content_hash(*ref.image)));
    }
    turns.push_back({{"role", turn.role},
                     {"text", collapse_whitespace(turn.text)},
                     {"images", images}});
  }
  nlohmann::json tools = nlohmann::json::array();
  for (const auto& t : req.tools) tools.push_back(t.name);
  const nlohmann::json canon = {{"system", collapse_whitespace(req.system_prompt)},
                                {"turns", turns},
                                {"tools", tools},
                                {"temperature", req.decoding.temperature},
                                {"max_tokens", req.decoding.max_tokens}};
  const std::string dump = canon.dump();
  return hash_hex(fnv1a64(dump.data(), dump.size()));
}

std::string segmentation_request_digest(const SegmentationRequest& req) {
  const nlohmann::json canon = {{"entity", collapse_whitespace(req.entity)},
                                {"image", hash_hex(content_hash(*req.image.image))}};
  const std::string dump = canon.dump();
  return hash_hex(fnv1a64(dump.data(), dump.size()));
}

std::string embed_request_digest(const std::vector<std::string>& texts) {
  nlohmann::json canon = nlohmann::json::array();
  for (const auto& t : texts) canon.push_back(collapse_whitespace(t));
  const std::string dump = canon.dump();
  return hash_hex(fnv1a64(dump.data(), dump.size()));
}

std::vector<ToolCall> parse_tool_calls(const ChatResponse& resp,
                                       const std::vector<ToolSchema>& tools) {
  std::vector<ToolCall> out;
  for (const auto& raw : resp.tool_calls) {
    const ToolSchema* schema = nullptr;
    for (const auto& t : tools) {
      if (t.name == raw.name) {
        schema = &t;
        break;
      }
    }
    if (!schema) throw UnknownTool("parse_tool_calls: unknown tool " + raw.name);
    if (!raw.args.is_object()) {
      throw MissingRequiredParam("parse_tool_calls: arguments must be an object");
    }
    for (const auto& p : schema->params) {
      if (p.required && !raw.args.contains(p.name)) {
        throw MissingRequiredParam("parse_tool_calls: " + raw.name +
                                   " missing required parameter " + p.name);
      }
    }
    ToolCall call;
    call.name = raw.name;
    call.args = raw.args;
    for (const auto& [key, value] : raw.args.items()) {
      (void)value;
      bool known = false;
      for (const auto& p : schema->params) {
        if (p.name == key) {
          known = true;
          break;
        }
      }
      if (!known) call.unknown_params.push_back(key);
    }
    out.push_back(std::move(call));
  }
  return out;
}

std::vector<ToolSchema> builtin_toolset() {
  // The conversation's image is implicit and authoritative; "image" is an
  // optional cross-check id so planners need not echo it back.
  std::vector<ToolSchema> tools;
  tools.push_back(
      {"propose_entities",
       "Name the entities in the image most relevant to the question.",
       {{"image", "string", false, "Identifier of the image to inspect."},
        {"question", "string", true, "The question being answered."}}});
  tools.push_back(
      {"segment_entity",
       "Segment one named entity; returns mask id, confidence percent, and "
       "bounding box.",
       {{"image", "string", false, "Identifier of the image to segment."},
        {"entity_name", "string", true, "Name of the entity to segment."}}});
  tools.push_back(
      {"grounded_vqa",
       "Answer the question grounded in one evidence view of the image.",
       {{"image", "string", false, "Identifier of the image."},
        {"question", "string", true, "The question to answer."},
        {"clue_type", "string", true, "Evidence kind: zoom, mask, or global."},
        {"entity_name", "string", false, "Entity the evidence refers to."},
        {"mask_id", "string", false, "Mask id from a segment_entity call."},
        {"confidence", "number", false, "Confidence percent of the mask."}}});
  return tools;
}

}  // namespace care
