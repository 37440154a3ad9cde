// SPDX-License-Identifier: Apache-2.0

#include "care/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace care::kernels {

namespace scalar {

double entropy_bits_sum(const float* p, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(p[i]);
    if (x <= 0.0 || x >= 1.0) continue;  // p*log(p) := 0 at the endpoints
    const double q = 1.0 - x;
    sum -= x * std::log2(x) + q * std::log2(q);
  }
  return sum;
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

void binarize_f32(const float* p, std::size_t n, float threshold, std::uint8_t* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] >= threshold ? 1 : 0;
}

std::uint64_t count_nonzero_u8(const std::uint8_t* a, std::size_t n) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += a[i] != 0;
  return c;
}

std::uint64_t count_and_u8(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (a[i] != 0) && (b[i] != 0);
  return c;
}

double clipped_term_sum(const double* r, std::size_t n, double adv, double clip_lo,
                        double clip_hi) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double clipped = std::fmin(std::fmax(r[i], clip_lo), clip_hi);
    sum += std::fmin(r[i] * adv, clipped * adv);
  }
  return sum;
}

}  // namespace scalar

double (*entropy_bits_sum)(const float*, std::size_t) = scalar::entropy_bits_sum;
double (*dot_f32)(const float*, const float*, std::size_t) = scalar::dot_f32;
void (*binarize_f32)(const float*, std::size_t, float, std::uint8_t*) = scalar::binarize_f32;
std::uint64_t (*count_nonzero_u8)(const std::uint8_t*, std::size_t) = scalar::count_nonzero_u8;
std::uint64_t (*count_and_u8)(const std::uint8_t*, const std::uint8_t*, std::size_t) =
    scalar::count_and_u8;
double (*clipped_term_sum)(const double*, std::size_t, double, double, double) =
    scalar::clipped_term_sum;

namespace {

const char* g_active = "scalar";

void bind_scalar() {
  entropy_bits_sum = scalar::entropy_bits_sum;
  dot_f32 = scalar::dot_f32;
  binarize_f32 = scalar::binarize_f32;
  count_nonzero_u8 = scalar::count_nonzero_u8;
  count_and_u8 = scalar::count_and_u8;
  clipped_term_sum = scalar::clipped_term_sum;
  g_active = "scalar";
}

#if CARE_BUILD_AVX2
void bind_avx2() {
  entropy_bits_sum = avx2::entropy_bits_sum;
  dot_f32 = avx2::dot_f32;
  binarize_f32 = avx2::binarize_f32;
  count_nonzero_u8 = avx2::count_nonzero_u8;
  count_and_u8 = avx2::count_and_u8;
  clipped_term_sum = avx2::clipped_term_sum;
  g_active = "avx2";
}
#endif

struct DispatchInit {
  DispatchInit() {
    const char* env = std::getenv("CARE_SIMD");
    select_isa(env ? std::string_view(env) : std::string_view("auto"));
  }
};

DispatchInit g_init;

}  // namespace

bool cpu_supports_avx2() {
#if CARE_BUILD_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const char* active_isa() { return g_active; }

void select_isa(std::string_view name) {
  if (name == "scalar") {
    bind_scalar();
    return;
  }
  if (name == "avx2") {
#if CARE_BUILD_AVX2
    if (cpu_supports_avx2()) {
      bind_avx2();
      return;
    }
#endif
    throw std::runtime_error("kernels: avx2 requested but not available");
  }
  if (name == "auto" || name.empty()) {
#if CARE_BUILD_AVX2
    if (cpu_supports_avx2()) {
      bind_avx2();
      return;
    }
#endif
    bind_scalar();
    return;
  }
  throw std::runtime_error("kernels: unknown isa '" + std::string(name) + "'");
}

}  // namespace care::kernels
