// SPDX-License-Identifier: Apache-2.0
//
// 8-bit raster types and disk I/O. Images are row-major, interleaved, 1
// (gray) or 3 (RGB) channels. PNG is read and written; JPEG is read only.
// Binary masks serialize as 8-bit gray PNG with foreground = 255.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace care {

struct RasterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<std::uint8_t> pixels;

  std::size_t size() const { return pixels.size(); }
  bool valid() const {
    return width > 0 && height > 0 && (channels == 1 || channels == 3) &&
           pixels.size() == static_cast<std::size_t>(width) * height * channels;
  }
};

// Per-pixel foreground probabilities in [0, 1], row-major.
struct ProbMask {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  std::size_t size() const { return values.size(); }
  // Enforces the shape/range invariant; throws RasterError on violation.
  void validate() const;
};

// Row-major bitmap; bits hold 0 or 1.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  bool valid() const {
    return width > 0 && height > 0 &&
           bits.size() == static_cast<std::size_t>(width) * height;
  }
};

// Reads a PNG or JPEG file (sniffed by signature) as 8-bit gray or RGB.
Image load_image(const std::string& path);

// Writes an 8-bit PNG (gray or RGB).
void save_png(const std::string& path, const Image& img);

// Foreground (bit = 1) renders as 255, background as 0.
Image mask_to_image(const BinaryMask& mask);

// Gray image to mask; pixels >= 128 count as foreground.
BinaryMask image_to_mask(const Image& img);

// FNV-1a over dimensions and pixel bytes; stable across runs and platforms.
std::uint64_t content_hash(const Image& img);

// Same hash over arbitrary bytes; used for fixture digests.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Lower-case hex rendering of a 64-bit hash (16 chars).
std::string hash_hex(std::uint64_t h);

}  // namespace care
