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

#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "cake/common.hpp"
#include "cake/rng.hpp"

namespace cake {

// Everything in the model is rank <= 2: a column vector is (n x 1), a
// scalar is (1 x 1). Storage is row-major.
struct Shape {
  int rows = 0;
  int cols = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  bool operator==(const Shape&) const = default;
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool is_vector() const { return cols == 1; }
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) {
  return os << s.rows << "x" << s.cols;
}

// Owning dense buffer for parameters and host-side data. Tape intermediates
// live in the tape's arenas, not in Arrays.
template <typename T>
struct Array {
  Shape shape;
  std::vector<T> data;

  Array() = default;
  Array(int rows, int cols) : shape{rows, cols}, data(shape.numel(), T(0)) {
    check(rows > 0 && cols > 0, "Array: dimensions must be positive, got ", shape);
  }
  Array(Shape s, std::vector<T> d) : shape(s), data(std::move(d)) {
    check(shape.numel() == data.size(), "Array: shape ", shape, " does not match buffer size ",
          data.size());
  }

  static Array zeros(int rows, int cols) { return Array(rows, cols); }

  static Array of(int rows, int cols, std::initializer_list<T> vals) {
    Array a(rows, cols);
    check(vals.size() == a.data.size(), "Array::of: expected ", a.data.size(), " values, got ",
          vals.size());
    std::copy(vals.begin(), vals.end(), a.data.begin());
    return a;
  }

  // Uniform(-scale, scale) init, the small-RNN recipe used for all weights.
  static Array uniform(int rows, int cols, Rng& rng, double scale = 0.08) {
    Array a(rows, cols);
    for (auto& v : a.data) v = static_cast<T>(rng.uniform(-scale, scale));
    return a;
  }

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape.cols + c]; }
  const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape.cols + c]; }

  bool all_finite() const {
    for (const T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

}  // namespace cake
