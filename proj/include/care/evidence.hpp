// SPDX-License-Identifier: Apache-2.0
//
// Evidence construction: mask confidence scoring, confidence filtering,
// binarization with tight bounding boxes, and the three evidence views
// (zoom-in crop, binary mask view, global view) fed to the grounded
// answering model.

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "care/raster.hpp"
#include "care/types.hpp"

namespace care {

struct EmptyMask : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoForeground : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scalar in [0, 1]; 1 means a fully deterministic mask.
struct Confidence {
  double value = 0.0;
};

// Inclusive pixel bounds.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  bool operator==(const BBox&) const = default;
};

struct EvidenceView {
  ClueKind kind = ClueKind::Global;
  Image payload;
  std::string metadata;  // empty for Global
  std::optional<std::string> entity_name;
  std::optional<Confidence> confidence;
};

// 1 - mean per-pixel binary entropy (normalized to bits), clamped to [0, 1].
// An all-0.5 mask scores exactly 0; a {0,1}-valued mask scores exactly 1.
// Throws EmptyMask when the mask has no pixels.
Confidence mask_confidence(const ProbMask& mask);

// Keeps entries with confidence >= tau, preserving order. Idempotent.
std::vector<std::pair<BinaryMask, Confidence>> filter_by_confidence(
    const std::vector<std::pair<BinaryMask, Confidence>>& masks, double tau);

// Thresholds the mask (p >= threshold is foreground) and returns the tight
// bounding box of the foreground. Throws NoForeground when nothing survives.
std::pair<BinaryMask, BBox> binarize_and_bbox(const ProbMask& mask, float threshold);

// Crop of `img` around `box`, each side expanded by pad_frac of its length
// and clamped to the image. Carries the entity tag line as metadata.
EvidenceView make_zoom_view(const Image& img, const BBox& box, double pad_frac,
                            const std::string& entity, Confidence conf);

// Binary mask rendered as a raster (foreground 255), never alpha-blended
// onto the source image. Carries the entity tag line as metadata.
EvidenceView make_mask_view(const BinaryMask& mask, const std::string& entity,
                            Confidence conf);

// All-foreground view covering the whole image; no entity metadata.
EvidenceView make_global_view(int width, int height);

// The exact metadata line attached to mask and zoom views:
//   (instance: {NAME}, confidence: {P}%)
// with P the confidence as nearest-integer percent.
std::string view_metadata_line(const std::string& entity, Confidence conf);

struct ParsedViewMetadata {
  std::string entity;
  int percent = 0;
};

// Inverse of view_metadata_line; nullopt when the line does not match.
std::optional<ParsedViewMetadata> parse_view_metadata(std::string_view line);

// Nearest-integer percent (half away from zero) used in metadata rendering.
int confidence_percent(Confidence conf);

}  // namespace care
