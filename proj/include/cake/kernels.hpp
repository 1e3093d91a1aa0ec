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

#include <cstddef>

// Dense kernels behind the autodiff tape. Scalar reference implementations
// exist for float and double; an AVX2 variant exists for float and is
// selected at runtime (CPUID + the CAKE_KERNELS env var). All matrices are
// row-major. The two variants must agree within floating-point reassociation
// error; tests/test_kernels.cpp holds the equivalence suite.
namespace cake::kern {

enum class Backend { kScalar, kAvx2 };

template <typename T>
struct Table {
  // c(m x n) = a(m x k) * b(k x n); accumulates into c when acc is set.
  void (*gemm_nn)(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
  // c(m x n) = a^T * b with a(k x m), b(k x n).
  void (*gemm_tn)(const T* a, const T* b, T* c, int m, int k, int n, bool acc);
  // c(m x n) = a * b^T with a(m x k), b(n x k).
  void (*gemm_nt)(const T* a, const T* b, T* c, int m, int k, int n, bool acc);

  void (*add)(const T* x, const T* y, T* out, std::size_t n);
  void (*mul)(const T* x, const T* y, T* out, std::size_t n);
  // acc += x * y, elementwise.
  void (*madd)(const T* x, const T* y, T* acc, std::size_t n);
  // y += alpha * x.
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // out = alpha * x + beta.
  void (*affine)(T alpha, T beta, const T* x, T* out, std::size_t n);

  void (*tanh_v)(const T* x, T* out, std::size_t n);
  void (*sigmoid_v)(const T* x, T* out, std::size_t n);
  void (*exp_v)(const T* x, T* out, std::size_t n);

  T (*dot)(const T* x, const T* y, std::size_t n);
  T (*sum)(const T* x, std::size_t n);
  T (*vmax)(const T* x, std::size_t n);  // n >= 1
};

// Active kernel table. float resolves to scalar or AVX2 once per process;
// double is always scalar (it only serves the gradient-check path).
template <typename T>
const Table<T>& table();

Backend active_backend();
const char* backend_name(Backend b);

// Test hook: force a backend for float kernels. Throws if unsupported.
void force_backend(Backend b);

namespace scalar {
template <typename T>
Table<T> make_table();
}

namespace avx2 {
bool supported();
Table<float> make_table();
}

}  // namespace cake::kern
