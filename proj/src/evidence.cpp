// SPDX-License-Identifier: Apache-2.0

#include "care/evidence.hpp"

#include <algorithm>
#include <cmath>

#include "care/kernels.hpp"

namespace care {

Confidence mask_confidence(const ProbMask& mask) {
  if (mask.values.empty()) throw EmptyMask("mask_confidence: mask has no pixels");
  mask.validate();
  const double sum = kernels::entropy_bits_sum(mask.values.data(), mask.values.size());
  const double mean = sum / static_cast<double>(mask.values.size());
  return Confidence{std::clamp(1.0 - mean, 0.0, 1.0)};
}

std::vector<std::pair<BinaryMask, Confidence>> filter_by_confidence(
    const std::vector<std::pair<BinaryMask, Confidence>>& masks, double tau) {
  std::vector<std::pair<BinaryMask, Confidence>> kept;
  for (const auto& entry : masks) {
    if (entry.second.value >= tau) kept.push_back(entry);
  }
  return kept;
}

std::pair<BinaryMask, BBox> binarize_and_bbox(const ProbMask& mask, float threshold) {
  mask.validate();
  BinaryMask bin;
  bin.width = mask.width;
  bin.height = mask.height;
  bin.bits.resize(mask.values.size());
  kernels::binarize_f32(mask.values.data(), mask.values.size(), threshold,
                        bin.bits.data());
  if (kernels::count_nonzero_u8(bin.bits.data(), bin.bits.size()) == 0) {
    throw NoForeground("binarize_and_bbox: no pixel reaches the threshold");
  }
  BBox box{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y) {
    const std::uint8_t* row = bin.bits.data() + static_cast<std::size_t>(y) * mask.width;
    if (kernels::count_nonzero_u8(row, mask.width) == 0) continue;
    box.y_min = std::min(box.y_min, y);
    box.y_max = std::max(box.y_max, y);
    for (int x = 0; x < mask.width; ++x) {
      if (!row[x]) continue;
      box.x_min = std::min(box.x_min, x);
      box.x_max = std::max(box.x_max, x);
    }
  }
  return {std::move(bin), box};
}

EvidenceView make_zoom_view(const Image& img, const BBox& box, double pad_frac,
                            const std::string& entity, Confidence conf) {
  if (!img.valid()) throw RasterError("make_zoom_view: invalid image");
  const long pad_x = std::lround(pad_frac * (box.x_max - box.x_min));
  const long pad_y = std::lround(pad_frac * (box.y_max - box.y_min));
  const int x0 = std::clamp<long>(box.x_min - pad_x, 0, img.width - 1);
  const int y0 = std::clamp<long>(box.y_min - pad_y, 0, img.height - 1);
  const int x1 = std::clamp<long>(box.x_max + pad_x, 0, img.width - 1);
  const int y1 = std::clamp<long>(box.y_max + pad_y, 0, img.height - 1);

  Image crop;
  crop.width = x1 - x0 + 1;
  crop.height = y1 - y0 + 1;
  crop.channels = img.channels;
  crop.pixels.resize(static_cast<std::size_t>(crop.width) * crop.height * crop.channels);
  const std::size_t src_stride = static_cast<std::size_t>(img.width) * img.channels;
  const std::size_t dst_stride = static_cast<std::size_t>(crop.width) * crop.channels;
  for (int y = 0; y < crop.height; ++y) {
    const std::uint8_t* src =
        img.pixels.data() + (y0 + y) * src_stride + static_cast<std::size_t>(x0) * img.channels;
    std::copy_n(src, dst_stride, crop.pixels.data() + y * dst_stride);
  }

  EvidenceView view;
  view.kind = ClueKind::ZoomIn;
  view.payload = std::move(crop);
  view.metadata = view_metadata_line(entity, conf);
  view.entity_name = entity;
  view.confidence = conf;
  return view;
}

EvidenceView make_mask_view(const BinaryMask& mask, const std::string& entity,
                            Confidence conf) {
  EvidenceView view;
  view.kind = ClueKind::MaskView;
  view.payload = mask_to_image(mask);
  view.metadata = view_metadata_line(entity, conf);
  view.entity_name = entity;
  view.confidence = conf;
  return view;
}

EvidenceView make_global_view(int width, int height) {
  if (width <= 0 || height <= 0) throw RasterError("make_global_view: bad size");
  EvidenceView view;
  view.kind = ClueKind::Global;
  view.payload.width = width;
  view.payload.height = height;
  view.payload.channels = 1;
  view.payload.pixels.assign(static_cast<std::size_t>(width) * height, 255);
  return view;
}

int confidence_percent(Confidence conf) {
  return static_cast<int>(std::lround(conf.value * 100.0));
}

std::string view_metadata_line(const std::string& entity, Confidence conf) {
  return "(instance: " + entity + ", confidence: " +
         std::to_string(confidence_percent(conf)) + "%)";
}

std::optional<ParsedViewMetadata> parse_view_metadata(std::string_view line) {
  constexpr std::string_view prefix = "(instance: ";
  constexpr std::string_view mid = ", confidence: ";
  constexpr std::string_view suffix = "%)";
  if (line.substr(0, prefix.size()) != prefix) return std::nullopt;
  if (line.size() < suffix.size() ||
      line.substr(line.size() - suffix.size()) != suffix) {
    return std::nullopt;
  }
  const std::size_t mid_pos = line.rfind(mid, line.size() - suffix.size());
  if (mid_pos == std::string_view::npos || mid_pos < prefix.size()) return std::nullopt;
  ParsedViewMetadata parsed;
  parsed.entity = std::string(line.substr(prefix.size(), mid_pos - prefix.size()));
  const std::string_view num = line.substr(
      mid_pos + mid.size(), line.size() - suffix.size() - mid_pos - mid.size());
  if (num.empty()) return std::nullopt;
  int value = 0;
  for (char c : num) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  parsed.percent = value;
  return parsed;
}

}  // namespace care
