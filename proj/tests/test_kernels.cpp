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

// Scalar-vs-AVX2 equivalence for every kernel table entry, plus basic
// sanity of the scalar reference itself.

#include <cmath>
#include <vector>

#include "cake/kernels.hpp"
#include "cake/rng.hpp"
#include "doctest.h"

using cake::Rng;
namespace kern = cake::kern;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n, double lo = -3.0, double hi = 3.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

// |a-b| <= atol + rtol*|b|
void check_close(const std::vector<float>& a, const std::vector<float>& b, double atol,
                 double rtol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(static_cast<double>(a[i]) - b[i]);
    CHECK(diff <= atol + rtol * std::abs(static_cast<double>(b[i])));
  }
}

}  // namespace

TEST_CASE("scalar gemm_nn multiplies correctly") {
  const auto t = kern::scalar::make_table<float>();
  // [[1,2],[3,4]] * [[5],[6]] = [[17],[39]]
  const float a[] = {1, 2, 3, 4};
  const float b[] = {5, 6};
  float c[2] = {100, 100};
  t.gemm_nn(a, b, c, 2, 2, 1, false);
  CHECK(c[0] == doctest::Approx(17));
  CHECK(c[1] == doctest::Approx(39));
  t.gemm_nn(a, b, c, 2, 2, 1, true);  // accumulate doubles the result
  CHECK(c[0] == doctest::Approx(34));
  CHECK(c[1] == doctest::Approx(78));
}

TEST_CASE("scalar gemm transposed variants agree with explicit transposition") {
  Rng rng(11);
  const auto t = kern::scalar::make_table<float>();
  const int m = 5, k = 7, n = 3;
  auto a = random_vec(rng, m * k);
  auto b = random_vec(rng, k * n);
  std::vector<float> c_ref(m * n);
  t.gemm_nn(a.data(), b.data(), c_ref.data(), m, k, n, false);

  // a^T stored as (k x m) -> gemm_tn reproduces a*b
  std::vector<float> at(k * m);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
  std::vector<float> c1(m * n);
  t.gemm_tn(at.data(), b.data(), c1.data(), m, k, n, false);
  check_close(c1, c_ref, 1e-5, 1e-5);

  // b^T stored as (n x k) -> gemm_nt reproduces a*b
  std::vector<float> bt(n * k);
  for (int p = 0; p < k; ++p)
    for (int j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  std::vector<float> c2(m * n);
  t.gemm_nt(a.data(), bt.data(), c2.data(), m, k, n, false);
  check_close(c2, c_ref, 1e-5, 1e-5);
}

TEST_CASE("avx2 kernels match the scalar reference") {
  if (!kern::avx2::supported()) {
    MESSAGE("AVX2 not available; equivalence suite skipped");
    return;
  }
  const auto s = kern::scalar::make_table<float>();
  const auto v = kern::avx2::make_table();
  Rng rng(42);

  // Sizes straddle the 8-lane width to exercise tails.
  for (const int n : {1, 3, 7, 8, 9, 16, 31, 100, 257}) {
    auto x = random_vec(rng, n);
    auto y = random_vec(rng, n);
    std::vector<float> out_s(n), out_v(n);

    s.add(x.data(), y.data(), out_s.data(), n);
    v.add(x.data(), y.data(), out_v.data(), n);
    check_close(out_v, out_s, 0, 0);  // identical operation order

    s.mul(x.data(), y.data(), out_s.data(), n);
    v.mul(x.data(), y.data(), out_v.data(), n);
    check_close(out_v, out_s, 0, 0);

    s.affine(1.5f, -0.25f, x.data(), out_s.data(), n);
    v.affine(1.5f, -0.25f, x.data(), out_v.data(), n);
    check_close(out_v, out_s, 1e-7, 1e-6);

    auto acc_s = y, acc_v = y;
    s.madd(x.data(), y.data(), acc_s.data(), n);
    v.madd(x.data(), y.data(), acc_v.data(), n);
    check_close(acc_v, acc_s, 1e-6, 1e-6);

    acc_s = y;
    acc_v = y;
    s.axpy(0.7f, x.data(), acc_s.data(), n);
    v.axpy(0.7f, x.data(), acc_v.data(), n);
    check_close(acc_v, acc_s, 1e-6, 1e-6);

    s.tanh_v(x.data(), out_s.data(), n);
    v.tanh_v(x.data(), out_v.data(), n);
    check_close(out_v, out_s, 2e-6, 2e-6);

    s.sigmoid_v(x.data(), out_s.data(), n);
    v.sigmoid_v(x.data(), out_v.data(), n);
    check_close(out_v, out_s, 2e-6, 2e-6);

    s.exp_v(x.data(), out_s.data(), n);
    v.exp_v(x.data(), out_v.data(), n);
    check_close(out_v, out_s, 1e-6, 2e-6);

    CHECK(v.dot(x.data(), y.data(), n) ==
          doctest::Approx(s.dot(x.data(), y.data(), n)).epsilon(1e-4));
    CHECK(v.sum(x.data(), n) == doctest::Approx(s.sum(x.data(), n)).epsilon(1e-4));
    CHECK(v.vmax(x.data(), n) == s.vmax(x.data(), n));  // max is exact
  }
}

TEST_CASE("avx2 gemm matches scalar gemm") {
  if (!kern::avx2::supported()) return;
  const auto s = kern::scalar::make_table<float>();
  const auto v = kern::avx2::make_table();
  Rng rng(7);
  const int shapes[][3] = {{1, 1, 1}, {2, 3, 4}, {5, 8, 13}, {17, 9, 33}, {64, 96, 1}, {3, 160, 20}};
  for (const auto& sh : shapes) {
    const int m = sh[0], k = sh[1], n = sh[2];
    auto a = random_vec(rng, m * k);
    auto b_nn = random_vec(rng, k * n);
    auto b_tn = random_vec(rng, k * m);  // gemm_tn wants (k x m)
    auto b_nt = random_vec(rng, n * k);  // gemm_nt wants (n x k)
    std::vector<float> cs(m * n), cv(m * n);

    s.gemm_nn(a.data(), b_nn.data(), cs.data(), m, k, n, false);
    v.gemm_nn(a.data(), b_nn.data(), cv.data(), m, k, n, false);
    check_close(cv, cs, 1e-5, 1e-4);

    s.gemm_tn(b_tn.data(), b_nn.data(), cs.data(), m, k, n, false);
    v.gemm_tn(b_tn.data(), b_nn.data(), cv.data(), m, k, n, false);
    check_close(cv, cs, 1e-5, 1e-4);

    s.gemm_nt(a.data(), b_nt.data(), cs.data(), m, k, n, false);
    v.gemm_nt(a.data(), b_nt.data(), cv.data(), m, k, n, false);
    check_close(cv, cs, 1e-5, 1e-4);
  }
}

TEST_CASE("exp kernel stays accurate across the clamped range") {
  if (!kern::avx2::supported()) return;
  const auto v = kern::avx2::make_table();
  std::vector<float> xs;
  for (float x = -80.0f; x <= 80.0f; x += 0.37f) xs.push_back(x);
  std::vector<float> out(xs.size());
  v.exp_v(xs.data(), out.data(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double ref = std::exp(static_cast<double>(xs[i]));
    CHECK(std::abs(out[i] - ref) <= 1e-6 + 1e-5 * ref);
  }
}
