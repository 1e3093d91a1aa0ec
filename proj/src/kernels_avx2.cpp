// Copyright 2026 The cake Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// AVX2+FMA float kernels. This translation unit is compiled with
// -mavx2 -mfma; callers must gate on avx2::supported() before using the
// table. exp/tanh/sigmoid use a polynomial exp, so results differ from the
// scalar reference by a few ulp (covered by the equivalence tolerances).

#include "cake/kernels.hpp"

#if defined(CAKE_WITH_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace cake::kern::avx2 {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_movehdup_ps(lo));
  return _mm_cvtss_f32(lo);
}

inline float hmax(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_max_ps(lo, hi);
  lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_max_ss(lo, _mm_movehdup_ps(lo));
  return _mm_cvtss_f32(lo);
}

// exp via 2^(x*log2e): range reduction plus a degree-5 polynomial for the
// fractional part. |rel err| < 3e-7 over the non-saturated range.
inline __m256 exp256(__m256 x) {
  const __m256 kLo = _mm256_set1_ps(-87.33654f);
  const __m256 kHi = _mm256_set1_ps(88.72283f);
  x = _mm256_min_ps(_mm256_max_ps(x, kLo), kHi);

  const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
  const __m256 c1 = _mm256_set1_ps(0.693359375f);
  const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);

  __m256 fx = _mm256_mul_ps(x, log2e);
  fx = _mm256_round_ps(fx, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);

  __m256 z = _mm256_fnmadd_ps(fx, c1, x);
  z = _mm256_fnmadd_ps(fx, c2, z);

  __m256 p = _mm256_set1_ps(1.9875691500e-4f);
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(1.3981999507e-3f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(8.3334519073e-3f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(4.1665795894e-2f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(1.6666665459e-1f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(5.0000001201e-1f));
  p = _mm256_fmadd_ps(p, _mm256_mul_ps(z, z), z);
  p = _mm256_add_ps(p, _mm256_set1_ps(1.0f));

  __m256i e = _mm256_add_epi32(_mm256_cvtps_epi32(fx), _mm256_set1_epi32(127));
  __m256 pow2 = _mm256_castsi256_ps(_mm256_slli_epi32(e, 23));
  return _mm256_mul_ps(p, pow2);
}

void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
  const int n8 = n & ~7;
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const __m256 av = _mm256_set1_ps(arow[p]);
      const float* brow = b + static_cast<std::size_t>(p) * n;
      int j = 0;
      for (; j < n8; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      const float af = arow[p];
      for (; j < n; ++j) crow[j] += af * brow[j];
    }
  }
}

void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
  const int n8 = n & ~7;
  for (int p = 0; p < k; ++p) {
    const float* arow = a + static_cast<std::size_t>(p) * m;
    const float* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const __m256 av = _mm256_set1_ps(arow[i]);
      float* crow = c + static_cast<std::size_t>(i) * n;
      int j = 0;
      for (; j < n8; j += 8) {
        __m256 cv = _mm256_loadu_ps(crow + j);
        cv = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), cv);
        _mm256_storeu_ps(crow + j, cv);
      }
      const float af = arow[i];
      for (; j < n; ++j) crow[j] += af * brow[j];
    }
  }
}

float dot(const float* x, const float* y, std::size_t n);

void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const float s = dot(arow, b + static_cast<std::size_t>(j) * k, static_cast<std::size_t>(k));
      crow[j] = acc ? crow[j] + s : s;
    }
  }
}

void add(const float* x, const float* y, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(const float* x, const float* y, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void madd(const float* x, const float* y, float* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 a = _mm256_loadu_ps(acc + i);
    a = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), a);
    _mm256_storeu_ps(acc + i, a);
  }
  for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), yv);
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void affine(float alpha, float beta, const float* x, float* out, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  const __m256 bv = _mm256_set1_ps(beta);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), bv));
  for (; i < n; ++i) out[i] = alpha * x[i] + beta;
}

void exp_v(const float* x, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, exp256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    float tmp_in[8], tmp_out[8];
    std::size_t r = n - i;
    std::memcpy(tmp_in, x + i, r * sizeof(float));
    std::memset(tmp_in + r, 0, (8 - r) * sizeof(float));
    _mm256_storeu_ps(tmp_out, exp256(_mm256_loadu_ps(tmp_in)));
    std::memcpy(out + i, tmp_out, r * sizeof(float));
  }
}

// tanh(x) = 1 - 2 / (exp(2x) + 1), clamped so exp stays in range.
inline __m256 tanh256(__m256 x) {
  const __m256 bound = _mm256_set1_ps(9.0f);
  x = _mm256_min_ps(_mm256_max_ps(x, _mm256_sub_ps(_mm256_setzero_ps(), bound)), bound);
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 two = _mm256_set1_ps(2.0f);
  __m256 e = exp256(_mm256_mul_ps(two, x));
  return _mm256_sub_ps(one, _mm256_div_ps(two, _mm256_add_ps(e, one)));
}

inline __m256 sigmoid256(__m256 x) {
  const __m256 one = _mm256_set1_ps(1.0f);
  __m256 e = exp256(_mm256_sub_ps(_mm256_setzero_ps(), x));
  return _mm256_div_ps(one, _mm256_add_ps(one, e));
}

void tanh_v(const float* x, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, tanh256(_mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = std::tanh(x[i]);
}

void sigmoid_v(const float* x, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, sigmoid256(_mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

float dot(const float* x, const float* y, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

float sum(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

float vmax(const float* x, std::size_t n) {
  std::size_t i = 0;
  float m;
  if (n >= 8) {
    __m256 acc = _mm256_loadu_ps(x);
    for (i = 8; i + 8 <= n; i += 8) acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
    m = hmax(acc);
  } else {
    m = x[0];
    i = 1;
  }
  for (; i < n; ++i) m = m < x[i] ? x[i] : m;
  return m;
}

}  // namespace

bool supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

Table<float> make_table() {
  Table<float> t;
  t.gemm_nn = &gemm_nn;
  t.gemm_tn = &gemm_tn;
  t.gemm_nt = &gemm_nt;
  t.add = &add;
  t.mul = &mul;
  t.madd = &madd;
  t.axpy = &axpy;
  t.affine = &affine;
  t.tanh_v = &tanh_v;
  t.sigmoid_v = &sigmoid_v;
  t.exp_v = &exp_v;
  t.dot = &dot;
  t.sum = &sum;
  t.vmax = &vmax;
  return t;
}

}  // namespace cake::kern::avx2

#else  // !CAKE_WITH_AVX2

namespace cake::kern::avx2 {

bool supported() { return false; }

Table<float> make_table() { return scalar::make_table<float>(); }

}  // namespace cake::kern::avx2

#endif
