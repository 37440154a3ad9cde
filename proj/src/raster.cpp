// SPDX-License-Identifier: Apache-2.0

#include "care/raster.hpp"

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace care {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(std::FILE* fp, const std::string& path) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw RasterError("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw RasterError("png: allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RasterError("png: failed to decode " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RasterError("png: unsupported channel count in " + path);
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  std::vector<png_bytep> rows(img.height);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

Image load_jpeg(std::FILE* fp, const std::string& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw RasterError("jpeg: failed to decode " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  Image img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.channels = static_cast<int>(cinfo.output_components);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

void ProbMask::validate() const {
  if (width <= 0 || height <= 0 ||
      values.size() != static_cast<std::size_t>(width) * height) {
    throw RasterError("prob mask: shape does not match value count");
  }
  for (float v : values) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw RasterError("prob mask: value outside [0, 1]");
    }
  }
}

Image load_image(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw RasterError("cannot open image: " + path);
  unsigned char sig[8] = {0};
  const std::size_t got = std::fread(sig, 1, sizeof(sig), fp.get());
  std::rewind(fp.get());
  if (got >= 8 && !png_sig_cmp(sig, 0, 8)) return load_png(fp.get(), path);
  if (got >= 2 && sig[0] == 0xFF && sig[1] == 0xD8) return load_jpeg(fp.get(), path);
  throw RasterError("unrecognized image format: " + path);
}

void save_png(const std::string& path, const Image& img) {
  if (!img.valid()) throw RasterError("save_png: invalid image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw RasterError("cannot open for write: " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw RasterError("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw RasterError("png: allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RasterError("png: failed to encode " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image mask_to_image(const BinaryMask& mask) {
  if (!mask.valid()) throw RasterError("mask_to_image: invalid mask");
  Image img;
  img.width = mask.width;
  img.height = mask.height;
  img.channels = 1;
  img.pixels.resize(mask.bits.size());
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    img.pixels[i] = mask.bits[i] ? 255 : 0;
  }
  return img;
}

BinaryMask image_to_mask(const Image& img) {
  if (!img.valid() || img.channels != 1) {
    throw RasterError("image_to_mask: expected valid gray image");
  }
  BinaryMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.bits.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    mask.bits[i] = img.pixels[i] >= 128 ? 1 : 0;
  }
  return mask;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t content_hash(const Image& img) {
  const std::int32_t dims[3] = {img.width, img.height, img.channels};
  std::uint64_t h = fnv1a64(dims, sizeof(dims));
  return fnv1a64(img.pixels.data(), img.pixels.size(), h);
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace care
