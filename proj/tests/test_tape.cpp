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

#include <cmath>
#include <vector>

#include "cake/gradcheck.hpp"
#include "cake/tape.hpp"
#include "doctest.h"
#include "op_checks.hpp"

using namespace cake;

TEST_CASE("softmax of a tied pair is uniform") {
  Tape<double> t;
  const int x = t.constant(Array<double>::of(2, 1, {0, 0}));
  const int y = t.softmax_vec(x);
  CHECK(t.value(y)[0] == doctest::Approx(0.5));
  CHECK(t.value(y)[1] == doctest::Approx(0.5));
}

TEST_CASE("matmul against the identity is a no-op") {
  Tape<double> t;
  const int eye = t.constant(Array<double>::of(2, 2, {1, 0, 0, 1}));
  const int v = t.constant(Array<double>::of(2, 1, {3, 4}));
  const int out = t.matmul(eye, v);
  CHECK(t.value(out)[0] == doctest::Approx(3));
  CHECK(t.value(out)[1] == doctest::Approx(4));
}

TEST_CASE("softmax matches independent scalar evaluation") {
  // exp(1)/Z, exp(2)/Z, exp(3)/Z with Z = exp(1)+exp(2)+exp(3)
  Tape<double> t;
  const int x = t.constant(Array<double>::of(3, 1, {1, 2, 3}));
  const int y = t.softmax_vec(x);
  CHECK(t.value(y)[0] == doctest::Approx(0.09003057).epsilon(1e-6));
  CHECK(t.value(y)[1] == doctest::Approx(0.24472847).epsilon(1e-6));
  CHECK(t.value(y)[2] == doctest::Approx(0.66524096).epsilon(1e-6));
}

TEST_CASE("softmax is stable and normalized for large inputs") {
  Rng rng(3);
  Tape<double> t;
  for (int trial = 0; trial < 50; ++trial) {
    t.reset();
    Array<double> a(1 + static_cast<int>(rng.below(8)), 1);
    for (auto& v : a.data) v = rng.uniform(-50.0, 50.0);
    const int y = t.softmax_vec(t.constant(a));
    const double* p = t.value(y);
    double sum = 0;
    for (std::size_t i = 0; i < t.numel_of(y); ++i) {
      CHECK(p[i] >= 0.0);
      sum += p[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(t.value_finite(y));
  }
}

TEST_CASE("backward of sum(x .* x) doubles the input") {
  Tape<double> t;
  const int x = t.leaf(Array<double>::of(2, 1, {1, 2}));
  const int loss = t.sum_all(t.mul(x, x));
  t.backward(loss);
  CHECK(t.gradient(x)[0] == doctest::Approx(2));
  CHECK(t.gradient(x)[1] == doctest::Approx(4));
}

TEST_CASE("unused parameters receive zero gradient") {
  Tape<double> t;
  const int w = t.leaf(Array<double>::of(2, 2, {1, 2, 3, 4}));
  const int c = t.constant(Array<double>::of(3, 1, {1, 1, 1}));
  const int loss = t.sum_all(c);
  t.backward(loss);
  REQUIRE(t.gradient(w) != nullptr);
  for (int i = 0; i < 4; ++i) CHECK(t.gradient(w)[i] == 0.0);
}

TEST_CASE("cross-entropy gradient is softmax minus onehot") {
  Tape<double> t;
  const int z = t.leaf(Array<double>::of(4, 1, {0.3, -1.2, 2.0, 0.5}));
  const int p = t.softmax_vec(z);
  const int k = 2;
  const int loss = t.affine(t.log_(t.pick(p, k)), -1.0, 0.0);
  t.backward(loss);
  const double* soft = t.value(p);
  const double* g = t.gradient(z);
  for (int i = 0; i < 4; ++i) {
    const double expect = soft[i] - (i == k ? 1.0 : 0.0);
    CHECK(g[i] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("grad_check: affine + tanh chain on random 3x3 params") {
  Rng rng(17);
  std::vector<Array<double>> params = {Array<double>::uniform(3, 3, rng, 1.0),
                                       Array<double>::uniform(3, 1, rng, 1.0),
                                       Array<double>::uniform(3, 1, rng, 1.0)};
  const double err = grad_check(params, [](Tape<double>& t, const std::vector<int>& l) {
    return t.sum_all(t.tanh_(t.add(t.matmul(l[0], l[2]), l[1])));
  });
  CHECK(err <= 1e-4);
}

TEST_CASE("grad_check: constant loss has zero error") {
  Rng rng(5);
  std::vector<Array<double>> params = {Array<double>::uniform(2, 2, rng)};
  const double err = grad_check(params, [](Tape<double>& t, const std::vector<int>&) {
    return t.sum_all(t.constant(Array<double>::of(2, 1, {1.0, 2.0})));
  });
  CHECK(err == 0.0);
}

TEST_CASE("every primitive op passes a finite-difference smoke check") {
  for (const auto& c : cake::testing::op_grad_cases()) {
    for (std::uint64_t seed : {1ull, 2ull}) {
      const double err = c.run(seed);
      INFO(c.name, " seed ", seed);
      CHECK(err <= 1e-4);
    }
  }
}

TEST_CASE("scatter-add followed by gather recovers contributions") {
  Rng rng(23);
  Tape<double> t;
  for (int trial = 0; trial < 20; ++trial) {
    t.reset();
    // Disjoint indices into a length-12 vector.
    std::vector<int> all(12);
    for (int i = 0; i < 12; ++i) all[i] = i;
    rng.shuffle(all);
    const int n = 1 + static_cast<int>(rng.below(10));
    std::vector<int> idx(all.begin(), all.begin() + n);
    Array<double> vals(n, 1);
    for (auto& v : vals.data) v = rng.uniform(-5, 5);
    const int scattered = t.scatter_add_vec(t.constant(vals), idx, 12);
    for (int i = 0; i < n; ++i)
      CHECK(t.value(scattered)[idx[i]] == doctest::Approx(vals.data[i]));
  }
}

TEST_CASE("tape replay is bit-identical within one process") {
  Rng rng(99);
  Array<float> w = Array<float>::uniform(4, 4, rng);
  Array<float> x = Array<float>::uniform(4, 1, rng);
  auto run = [&]() {
    Tape<float> t;
    const int out = t.softmax_vec(t.tanh_(t.matmul(t.leaf(w), t.constant(x))));
    return t.value_copy(out);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("shape mismatches raise structured errors") {
  Tape<double> t;
  const int a = t.constant(Array<double>::of(2, 2, {1, 2, 3, 4}));
  const int b = t.constant(Array<double>::of(3, 1, {1, 2, 3}));
  CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("matmul"), CakeError);
  CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("shape mismatch"), CakeError);
}

TEST_CASE("backward misuse raises errors") {
  Tape<double> t;
  const int x = t.leaf(Array<double>::of(2, 1, {1, 2}));
  const int v = t.mul(x, x);
  CHECK_THROWS_AS(t.backward(v), CakeError);  // non-scalar loss
  const int loss = t.sum_all(v);
  t.backward(loss);
  CHECK_THROWS_WITH_AS(t.backward(loss), doctest::Contains("twice"), CakeError);
  t.reset();
  const int y = t.leaf(Array<double>::of(1, 1, {3}));
  t.backward(t.mul(y, y));  // fine after re-recording
}

TEST_CASE("log clamps tiny probabilities instead of overflowing") {
  Tape<double> t;
  const int x = t.constant(Array<double>::of(2, 1, {0.0, 1e-30}));
  const int y = t.log_(x);
  CHECK(t.value(y)[0] == doctest::Approx(std::log(1e-10)));
  CHECK(t.value(y)[1] == doctest::Approx(std::log(1e-10)));
  CHECK(t.value_finite(y));
}

TEST_CASE("gru cell fixed points: zero weights halve the carry") {
  // All weights and pre-activations zero: z = r = 0.5, candidate = 0,
  // so h' = 0.5 * h.
  Tape<double> t;
  const int d = 3;
  const int pre = t.constant_zeros(3 * d, 1);
  const int h = t.constant(Array<double>::of(d, 1, {0.4, -0.6, 1.0}));
  const int uz = t.constant_zeros(d, d);
  const int ur = t.constant_zeros(d, d);
  const int uh = t.constant_zeros(d, d);
  const int out = t.gru_cell(pre, h, uz, ur, uh);
  CHECK(t.value(out)[0] == doctest::Approx(0.2));
  CHECK(t.value(out)[1] == doctest::Approx(-0.3));
  CHECK(t.value(out)[2] == doctest::Approx(0.5));

  // Zero state stays zero.
  const int h0 = t.constant_zeros(d, 1);
  const int out0 = t.gru_cell(pre, h0, uz, ur, uh);
  for (int i = 0; i < d; ++i) CHECK(t.value(out0)[i] == 0.0);
}
