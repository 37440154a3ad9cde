// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops shared by the mask, reward, and objective code.
// Scalar reference implementations always exist; an AVX2 variant is compiled
// when the target supports it and bound at startup through function pointers
// (override with CARE_SIMD=scalar or select_isa()). Integer kernels are
// bit-exact across variants; floating reductions agree within documented
// tolerances and are exact at the degenerate points the engine relies on
// (p in {0, 0.5, 1} for the entropy kernel).

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace care::kernels {

namespace scalar {
// Sum over i of binary entropy of p[i] in bits; p outside (0,1) contributes 0.
double entropy_bits_sum(const float* p, std::size_t n);
// Dot product accumulated in double.
double dot_f32(const float* a, const float* b, std::size_t n);
// out[i] = p[i] >= threshold ? 1 : 0.
void binarize_f32(const float* p, std::size_t n, float threshold, std::uint8_t* out);
// Count of nonzero bytes.
std::uint64_t count_nonzero_u8(const std::uint8_t* a, std::size_t n);
// Count of positions where both bytes are nonzero.
std::uint64_t count_and_u8(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
// Sum over i of min(r[i]*adv, clamp(r[i], clip_lo, clip_hi)*adv).
double clipped_term_sum(const double* r, std::size_t n, double adv, double clip_lo,
                        double clip_hi);
}  // namespace scalar

#if CARE_BUILD_AVX2
namespace avx2 {
double entropy_bits_sum(const float* p, std::size_t n);
double dot_f32(const float* a, const float* b, std::size_t n);
void binarize_f32(const float* p, std::size_t n, float threshold, std::uint8_t* out);
std::uint64_t count_nonzero_u8(const std::uint8_t* a, std::size_t n);
std::uint64_t count_and_u8(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
double clipped_term_sum(const double* r, std::size_t n, double adv, double clip_lo,
                        double clip_hi);
}  // namespace avx2
#endif

// Dispatched entry points. Bound to the best supported variant at startup.
extern double (*entropy_bits_sum)(const float*, std::size_t);
extern double (*dot_f32)(const float*, const float*, std::size_t);
extern void (*binarize_f32)(const float*, std::size_t, float, std::uint8_t*);
extern std::uint64_t (*count_nonzero_u8)(const std::uint8_t*, std::size_t);
extern std::uint64_t (*count_and_u8)(const std::uint8_t*, const std::uint8_t*, std::size_t);
extern double (*clipped_term_sum)(const double*, std::size_t, double, double, double);

// Name of the variant currently bound: "scalar" or "avx2".
const char* active_isa();

// Rebind the dispatch table. "auto" picks the best variant the CPU supports;
// "scalar" forces the reference path; "avx2" throws if unavailable.
void select_isa(std::string_view name);

// True when the running CPU can execute the AVX2 variant.
bool cpu_supports_avx2();

}  // namespace care::kernels
