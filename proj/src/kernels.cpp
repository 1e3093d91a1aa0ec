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

#include "cake/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace cake::kern {
namespace {

Backend resolve_backend() {
  const char* env = std::getenv("CAKE_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Backend::kScalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2::supported())
        throw std::runtime_error("CAKE_KERNELS=avx2 but this CPU/build lacks AVX2+FMA");
      return Backend::kAvx2;
    }
    if (std::strcmp(env, "auto") != 0)
      throw std::runtime_error(std::string("CAKE_KERNELS: unknown value '") + env +
                               "' (expected scalar|avx2|auto)");
  }
  return avx2::supported() ? Backend::kAvx2 : Backend::kScalar;
}

struct State {
  Backend backend;
  Table<float> f32;
  Table<double> f64;
  State() : backend(resolve_backend()), f64(scalar::make_table<double>()) { apply(); }
  void apply() {
    f32 = backend == Backend::kAvx2 ? avx2::make_table() : scalar::make_table<float>();
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

template <>
const Table<float>& table<float>() {
  return state().f32;
}

template <>
const Table<double>& table<double>() {
  return state().f64;
}

Backend active_backend() { return state().backend; }

const char* backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
  if (b == Backend::kAvx2 && !avx2::supported())
    throw std::runtime_error("force_backend: AVX2 not supported on this CPU/build");
  state().backend = b;
  state().apply();
}

}  // namespace cake::kern
