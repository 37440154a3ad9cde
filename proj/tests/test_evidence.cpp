// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "care/evidence.hpp"

using namespace care;

namespace {

ProbMask uniform_mask(int w, int h, float v) {
  ProbMask m;
  m.width = w;
  m.height = h;
  m.values.assign(static_cast<std::size_t>(w) * h, v);
  return m;
}

Image gradient_image(int w, int h) {
  Image img;
  img.width = w;
  img.height = h;
  img.channels = 1;
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.pixels[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint8_t>((x + y) & 0xff);
    }
  }
  return img;
}

}  // namespace

TEST_CASE("evidence: confidence endpoints are exact") {
  CHECK(mask_confidence(uniform_mask(16, 16, 0.5f)).value == 0.0);
  CHECK(mask_confidence(uniform_mask(16, 16, 0.0f)).value == 1.0);
  CHECK(mask_confidence(uniform_mask(16, 16, 1.0f)).value == 1.0);
  ProbMask empty;
  CHECK_THROWS_AS(mask_confidence(empty), EmptyMask);
}

TEST_CASE("evidence: confidence of p=0.9 mask matches the hand oracle") {
  // 1 - H2(0.9), H2 in bits: 1 + 0.9*log2(0.9) + 0.1*log2(0.1) = 0.5310...
  const double h2 = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  const double expected = 1.0 - h2;
  CHECK(mask_confidence(uniform_mask(8, 8, 0.9f)).value ==
        doctest::Approx(expected).epsilon(1e-6));
  CHECK(expected == doctest::Approx(0.5310).epsilon(1e-3));
}

TEST_CASE("evidence: confidence filter keeps order and applies tau inclusively") {
  BinaryMask m;
  m.width = 1;
  m.height = 1;
  m.bits = {1};
  const std::vector<std::pair<BinaryMask, Confidence>> in = {
      {m, {0.69}}, {m, {0.70}}, {m, {0.95}}, {m, {0.10}}};
  const auto kept = filter_by_confidence(in, 0.70);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].second.value == 0.70);
  CHECK(kept[1].second.value == 0.95);
  // Idempotent: filtering the survivors changes nothing.
  CHECK(filter_by_confidence(kept, 0.70).size() == 2);
}

TEST_CASE("evidence: binarize_and_bbox finds the tight box") {
  ProbMask m = uniform_mask(10, 10, 0.1f);
  for (int y = 3; y <= 5; ++y) {
    for (int x = 2; x <= 7; ++x) {
      m.values[static_cast<std::size_t>(y) * 10 + x] = 0.9f;
    }
  }
  const auto [mask, box] = binarize_and_bbox(m, 0.5f);
  CHECK(box == BBox{2, 3, 7, 5});
  CHECK(mask.bits[3 * 10 + 2] == 1);
  CHECK(mask.bits[0] == 0);

  CHECK_THROWS_AS(binarize_and_bbox(uniform_mask(4, 4, 0.2f), 0.5f), NoForeground);
}

TEST_CASE("evidence: zoom crop pads by a fraction of the box side") {
  const Image img = gradient_image(100, 100);
  // Box (40,40)-(60,60), pad 0.1 -> 2px each side -> (38,38)-(62,62).
  const EvidenceView view =
      make_zoom_view(img, BBox{40, 40, 60, 60}, 0.10, "lesion", Confidence{0.9});
  CHECK(view.kind == ClueKind::ZoomIn);
  CHECK(view.payload.width == 25);
  CHECK(view.payload.height == 25);
  CHECK(view.payload.pixels[0] == img.pixels[38 * 100 + 38]);

  // Corner boxes clamp the pad to the image frame.
  const EvidenceView corner =
      make_zoom_view(img, BBox{0, 0, 10, 10}, 0.10, "edge", Confidence{0.8});
  CHECK(corner.payload.width == 12);
  CHECK(corner.payload.height == 12);
}

TEST_CASE("evidence: view metadata renders and parses the percent form") {
  CHECK(view_metadata_line("lesion", Confidence{0.857}) ==
        "(instance: lesion, confidence: 86%)");
  // 0.125 is exact in binary: 12.5 rounds half away from zero to 13.
  CHECK(confidence_percent(Confidence{0.125}) == 13);
  CHECK(confidence_percent(Confidence{0.0}) == 0);
  CHECK(confidence_percent(Confidence{1.0}) == 100);

  const auto parsed = parse_view_metadata("(instance: left lung, confidence: 7%)");
  REQUIRE(parsed.has_value());
  CHECK(parsed->entity == "left lung");
  CHECK(parsed->percent == 7);
  CHECK_FALSE(parse_view_metadata("(instance: x, confidence: 7pct)").has_value());
  CHECK_FALSE(parse_view_metadata("instance: x, confidence: 7%").has_value());
}

TEST_CASE("evidence: mask view is the raw binary image, global view all-ones") {
  BinaryMask mask;
  mask.width = 2;
  mask.height = 2;
  mask.bits = {1, 0, 0, 1};
  const EvidenceView mv = make_mask_view(mask, "lesion", Confidence{0.8});
  CHECK(mv.kind == ClueKind::MaskView);
  CHECK(mv.payload.pixels == std::vector<std::uint8_t>{255, 0, 0, 255});

  const EvidenceView gv = make_global_view(3, 2);
  CHECK(gv.kind == ClueKind::Global);
  CHECK(gv.payload.width == 3);
  CHECK(gv.payload.height == 2);
  for (const auto px : gv.payload.pixels) CHECK(px == 255);
  CHECK(gv.metadata.empty());
}

TEST_CASE("evidence: random masks stay in range and sharpening never lowers C") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    ProbMask m = uniform_mask(6, 6, 0.0f);
    for (auto& v : m.values) v = dist(rng);
    const double c = mask_confidence(m).value;
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);

    // Pushing every probability toward its nearest endpoint sharpens it.
    ProbMask sharper = m;
    for (auto& v : sharper.values) {
      v = v >= 0.5f ? v + 0.5f * (1.0f - v) : 0.5f * v;
    }
    CHECK(mask_confidence(sharper).value >= c - 1e-12);
  }
}
