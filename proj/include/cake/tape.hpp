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

#include <array>
#include <cstring>
#include <span>
#include <vector>

#include "cake/array.hpp"
#include "cake/common.hpp"
#include "cake/kernels.hpp"

namespace cake {

// Define-by-run reverse-mode tape. Creating an op evaluates it immediately
// and records it; backward() replays the record in exact reverse order.
// Values and gradients live in flat arenas so reset() keeps capacity across
// training steps. Tapes are rebuilt per step because sequence lengths vary
// per example; a tape is confined to one thread.
//
// T is float for training/inference and double for gradient checks.

enum class Op : std::uint8_t {
  kLeaf,
  kConst,
  kMatmulNN,
  kMatmulTN,  // A^T B
  kMatmulNT,  // A B^T
  kAdd,
  kMul,
  kAffine,  // alpha * x + beta
  kTanh,
  kSigmoid,
  kLog,  // ln(max(x, 1e-10))
  kSoftmaxVec,
  kSoftmaxRows,
  kRowMax,
  kTileCols,
  kTileRows,
  kConcat0,
  kConcat1,
  kSliceRows,
  kSliceCols,
  kPick,
  kSumAll,
  kMeanAll,
  kDot,
  kScaleBy,
  kEmbedCols,
  kScatterAddVec,
  kGruCell,
  kOpCount_,
};

inline const char* op_name(Op op) {
  static const char* names[] = {
      "leaf",     "const",     "matmul",     "matmul_tn",  "matmul_nt", "add",
      "mul",      "affine",    "tanh",       "sigmoid",    "log",       "softmax_vec",
      "softmax",  "rowmax",    "tile_cols",  "tile_rows",  "concat0",   "concat1",
      "slice_rows", "slice_cols", "pick",    "sum",        "mean",      "dot",
      "scale_by", "embed",     "scatter_add", "gru_cell"};
  return names[static_cast<int>(op)];
}

template <typename T>
class Tape {
 public:
  static constexpr double kLogClamp = 1e-10;

  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- graph construction -------------------------------------------------

  int leaf(const Array<T>& a) {
    const int id = alloc(Op::kLeaf, a.shape.rows, a.shape.cols, /*rg=*/true);
    std::memcpy(val_ptr(id), a.data.data(), a.data.size() * sizeof(T));
    return id;
  }

  int constant(const Array<T>& a) {
    const int id = alloc(Op::kConst, a.shape.rows, a.shape.cols, false);
    std::memcpy(val_ptr(id), a.data.data(), a.data.size() * sizeof(T));
    return id;
  }

  int constant_zeros(int rows, int cols) {
    return alloc(Op::kConst, rows, cols, false);  // arena is zero-initialized
  }

  int constant_scalar(T v) {
    const int id = alloc(Op::kConst, 1, 1, false);
    *val_ptr(id) = v;
    return id;
  }

  int matmul(int a, int b) {
    const Shape sa = shape(a), sb = shape(b);
    check(sa.cols == sb.rows, "matmul: inner dimensions differ, ", sa, " * ", sb);
    const int id = alloc2(Op::kMatmulNN, sa.rows, sb.cols, a, b);
    kern::table<T>().gemm_nn(val_ptr(a), val_ptr(b), val_ptr(id), sa.rows, sa.cols, sb.cols, false);
    return id;
  }

  // a^T * b with a (k x m), b (k x n) -> (m x n)
  int matmul_tn(int a, int b) {
    const Shape sa = shape(a), sb = shape(b);
    check(sa.rows == sb.rows, "matmul_tn: leading dimensions differ, ", sa, " vs ", sb);
    const int id = alloc2(Op::kMatmulTN, sa.cols, sb.cols, a, b);
    kern::table<T>().gemm_tn(val_ptr(a), val_ptr(b), val_ptr(id), sa.cols, sa.rows, sb.cols, false);
    return id;
  }

  // a * b^T with a (m x k), b (n x k) -> (m x n)
  int matmul_nt(int a, int b) {
    const Shape sa = shape(a), sb = shape(b);
    check(sa.cols == sb.cols, "matmul_nt: trailing dimensions differ, ", sa, " vs ", sb);
    const int id = alloc2(Op::kMatmulNT, sa.rows, sb.rows, a, b);
    kern::table<T>().gemm_nt(val_ptr(a), val_ptr(b), val_ptr(id), sa.rows, sa.cols, sb.rows, false);
    return id;
  }

  int add(int a, int b) {
    check(shape(a) == shape(b), "add: shape mismatch ", shape(a), " vs ", shape(b));
    const int id = alloc2(Op::kAdd, shape(a).rows, shape(a).cols, a, b);
    kern::table<T>().add(val_ptr(a), val_ptr(b), val_ptr(id), numel(id));
    return id;
  }

  int mul(int a, int b) {
    check(shape(a) == shape(b), "mul: shape mismatch ", shape(a), " vs ", shape(b));
    const int id = alloc2(Op::kMul, shape(a).rows, shape(a).cols, a, b);
    kern::table<T>().mul(val_ptr(a), val_ptr(b), val_ptr(id), numel(id));
    return id;
  }

  int affine(int a, T alpha, T beta) {
    const int id = alloc1(Op::kAffine, shape(a).rows, shape(a).cols, a);
    nodes_[id].fa = alpha;
    nodes_[id].fb = beta;
    kern::table<T>().affine(alpha, beta, val_ptr(a), val_ptr(id), numel(id));
    return id;
  }

  int tanh_(int a) {
    const int id = alloc1(Op::kTanh, shape(a).rows, shape(a).cols, a);
    kern::table<T>().tanh_v(val_ptr(a), val_ptr(id), numel(id));
    return id;
  }

  int sigmoid_(int a) {
    const int id = alloc1(Op::kSigmoid, shape(a).rows, shape(a).cols, a);
    kern::table<T>().sigmoid_v(val_ptr(a), val_ptr(id), numel(id));
    return id;
  }

  int log_(int a) {
    const int id = alloc1(Op::kLog, shape(a).rows, shape(a).cols, a);
    const T* x = val_ptr(a);
    T* y = val_ptr(id);
    const T clamp = static_cast<T>(kLogClamp);
    for (std::size_t i = 0; i < numel(id); ++i) y[i] = std::log(x[i] > clamp ? x[i] : clamp);
    return id;
  }

  // Softmax over the whole buffer (used for column-vector distributions).
  int softmax_vec(int a) {
    check(numel_of(a) >= 1, "softmax_vec: empty input");
    const int id = alloc1(Op::kSoftmaxVec, shape(a).rows, shape(a).cols, a);
    softmax_group(val_ptr(a), val_ptr(id), numel(id));
    return id;
  }

  // Row-wise softmax of a matrix (also covers a single 1 x n row).
  int softmax_rows(int a) {
    const Shape s = shape(a);
    check(s.cols >= 1, "softmax: rows must be non-empty, got ", s);
    const int id = alloc1(Op::kSoftmaxRows, s.rows, s.cols, a);
    for (int r = 0; r < s.rows; ++r)
      softmax_group(val_ptr(a) + static_cast<std::size_t>(r) * s.cols,
                    val_ptr(id) + static_cast<std::size_t>(r) * s.cols,
                    static_cast<std::size_t>(s.cols));
    return id;
  }

  // Per-row max of a matrix -> column vector. Gradient goes to the first
  // attaining position of each row.
  int rowmax(int a) {
    const Shape s = shape(a);
    const int id = alloc1(Op::kRowMax, s.rows, 1, a);
    nodes_[id].a0 = static_cast<int>(ints_.size());
    const T* x = val_ptr(a);
    T* y = val_ptr(id);
    for (int r = 0; r < s.rows; ++r) {
      const T* row = x + static_cast<std::size_t>(r) * s.cols;
      int arg = 0;
      T m = row[0];
      for (int c = 1; c < s.cols; ++c)
        if (row[c] > m) {
          m = row[c];
          arg = c;
        }
      y[r] = m;
      ints_.push_back(arg);
    }
    return id;
  }

  // (r x 1) column vector tiled across n columns -> (r x n).
  int tile_cols(int v, int n) {
    const Shape s = shape(v);
    check(s.cols == 1, "tile_cols: input must be a column vector, got ", s);
    check(n >= 1, "tile_cols: n must be >= 1, got ", n);
    const int id = alloc1(Op::kTileCols, s.rows, n, v);
    const T* x = val_ptr(v);
    T* y = val_ptr(id);
    for (int r = 0; r < s.rows; ++r)
      for (int c = 0; c < n; ++c) y[static_cast<std::size_t>(r) * n + c] = x[r];
    return id;
  }

  // (1 x c) row vector tiled across m rows -> (m x c).
  int tile_rows(int v, int m) {
    const Shape s = shape(v);
    check(s.rows == 1, "tile_rows: input must be a row vector, got ", s);
    check(m >= 1, "tile_rows: m must be >= 1, got ", m);
    const int id = alloc1(Op::kTileRows, m, s.cols, v);
    const T* x = val_ptr(v);
    T* y = val_ptr(id);
    for (int r = 0; r < m; ++r) std::memcpy(y + static_cast<std::size_t>(r) * s.cols, x, sizeof(T) * s.cols);
    return id;
  }

  // Stack vertically (inputs share the column count).
  int concat0(std::span<const int> parts) {
    check(!parts.empty(), "concat0: no inputs");
    int rows = 0;
    const int cols = shape(parts[0]).cols;
    for (int p : parts) {
      check(shape(p).cols == cols, "concat0: column mismatch, ", shape(p), " vs ", cols, " cols");
      rows += shape(p).rows;
    }
    const int id = allocN(Op::kConcat0, rows, cols, parts);
    T* y = val_ptr(id);
    for (int p : parts) {
      const std::size_t n = numel_of(p);
      std::memcpy(y, val_ptr(p), n * sizeof(T));
      y += n;
    }
    return id;
  }

  // Stack horizontally (inputs share the row count).
  int concat1(std::span<const int> parts) {
    check(!parts.empty(), "concat1: no inputs");
    int cols = 0;
    const int rows = shape(parts[0]).rows;
    for (int p : parts) {
      check(shape(p).rows == rows, "concat1: row mismatch, ", shape(p), " vs ", rows, " rows");
      cols += shape(p).cols;
    }
    const int id = allocN(Op::kConcat1, rows, cols, parts);
    T* y = val_ptr(id);
    int co = 0;
    for (int p : parts) {
      const Shape sp = shape(p);
      const T* x = val_ptr(p);
      for (int r = 0; r < rows; ++r)
        std::memcpy(y + static_cast<std::size_t>(r) * cols + co,
                    x + static_cast<std::size_t>(r) * sp.cols, sizeof(T) * sp.cols);
      co += sp.cols;
    }
    return id;
  }

  int slice_rows(int a, int r0, int r1) {
    const Shape s = shape(a);
    check(0 <= r0 && r0 < r1 && r1 <= s.rows, "slice_rows: range [", r0, ",", r1,
          ") out of bounds for ", s);
    const int id = alloc1(Op::kSliceRows, r1 - r0, s.cols, a);
    nodes_[id].a0 = r0;
    nodes_[id].a1 = r1;
    std::memcpy(val_ptr(id), val_ptr(a) + static_cast<std::size_t>(r0) * s.cols,
                numel(id) * sizeof(T));
    return id;
  }

  int slice_cols(int a, int c0, int c1) {
    const Shape s = shape(a);
    check(0 <= c0 && c0 < c1 && c1 <= s.cols, "slice_cols: range [", c0, ",", c1,
          ") out of bounds for ", s);
    const int id = alloc1(Op::kSliceCols, s.rows, c1 - c0, a);
    nodes_[id].a0 = c0;
    nodes_[id].a1 = c1;
    const T* x = val_ptr(a);
    T* y = val_ptr(id);
    for (int r = 0; r < s.rows; ++r)
      std::memcpy(y + static_cast<std::size_t>(r) * (c1 - c0),
                  x + static_cast<std::size_t>(r) * s.cols + c0, sizeof(T) * (c1 - c0));
    return id;
  }

  int slice_col(int a, int c) { return slice_cols(a, c, c + 1); }

  // Single element of a flat buffer -> scalar.
  int pick(int a, int index) {
    check(index >= 0 && static_cast<std::size_t>(index) < numel_of(a), "pick: index ", index,
          " out of range for ", shape(a));
    const int id = alloc1(Op::kPick, 1, 1, a);
    nodes_[id].a0 = index;
    *val_ptr(id) = val_ptr(a)[index];
    return id;
  }

  int sum_all(int a) {
    const int id = alloc1(Op::kSumAll, 1, 1, a);
    *val_ptr(id) = kern::table<T>().sum(val_ptr(a), numel_of(a));
    return id;
  }

  int mean_all(int a) {
    const int id = alloc1(Op::kMeanAll, 1, 1, a);
    *val_ptr(id) = kern::table<T>().sum(val_ptr(a), numel_of(a)) / static_cast<T>(numel_of(a));
    return id;
  }

  int dot(int a, int b) {
    check(numel_of(a) == numel_of(b), "dot: length mismatch, ", shape(a), " vs ", shape(b));
    const int id = alloc2(Op::kDot, 1, 1, a, b);
    *val_ptr(id) = kern::table<T>().dot(val_ptr(a), val_ptr(b), numel_of(a));
    return id;
  }

  // x * s with s a scalar node.
  int scale_by(int x, int s) {
    check(shape(s).is_scalar(), "scale_by: scale must be a scalar node, got ", shape(s));
    const int id = alloc2(Op::kScaleBy, shape(x).rows, shape(x).cols, x, s);
    kern::table<T>().affine(*val_ptr(s), T(0), val_ptr(x), val_ptr(id), numel(id));
    return id;
  }

  // Gather rows of an embedding table (vocab_rows x e) as columns -> (e x L).
  // Ids at or beyond vocab_rows (the per-example extended ids) resolve to
  // the UNK row. unk_row < vocab_rows.
  int embed_cols(int table_node, std::span<const int> ids, int unk_row, int max_valid_id) {
    const Shape s = shape(table_node);
    check(!ids.empty(), "embed: empty id list");
    for (int tid : ids)
      check(tid >= 0 && tid < max_valid_id, "embed: id ", tid, " out of extended range [0,",
            max_valid_id, ")");
    const int id = alloc1(Op::kEmbedCols, s.cols, static_cast<int>(ids.size()), table_node);
    nodes_[id].a0 = static_cast<int>(ints_.size());
    nodes_[id].a1 = static_cast<int>(ids.size());
    nodes_[id].a2 = unk_row;
    for (int tid : ids) ints_.push_back(tid < s.rows ? tid : unk_row);
    const T* tab = val_ptr(table_node);
    T* y = val_ptr(id);
    const int e = s.cols;
    const int L = static_cast<int>(ids.size());
    const int* stored = ints_.data() + nodes_[id].a0;
    for (int l = 0; l < L; ++l) {
      const T* row = tab + static_cast<std::size_t>(stored[l]) * e;
      for (int r = 0; r < e; ++r) y[static_cast<std::size_t>(r) * L + l] = row[r];
    }
    return id;
  }

  // out[ids[i]] += vals[i]; repeated ids accumulate. out is (out_len x 1).
  int scatter_add_vec(int vals, std::span<const int> ids, int out_len) {
    check(numel_of(vals) == ids.size(), "scatter_add: ", numel_of(vals), " values vs ",
          ids.size(), " indices");
    for (int ix : ids)
      check(ix >= 0 && ix < out_len, "scatter_add: index ", ix, " out of range [0,", out_len, ")");
    const int id = alloc1(Op::kScatterAddVec, out_len, 1, vals);
    nodes_[id].a0 = static_cast<int>(ints_.size());
    nodes_[id].a1 = static_cast<int>(ids.size());
    for (int ix : ids) ints_.push_back(ix);
    const T* x = val_ptr(vals);
    T* y = val_ptr(id);  // zero-initialized
    const int* stored = ints_.data() + nodes_[id].a0;
    for (std::size_t i = 0; i < ids.size(); ++i) y[stored[i]] += x[i];
    return id;
  }

  // Fused GRU cell. pre = W*x + b stacked as [z; r; h] gates (3d x 1),
  // h_prev (d x 1), U* (d x d). Returns h_t:
  //   z = sigmoid(pre_z + Uz h),  r = sigmoid(pre_r + Ur h)
  //   hc = tanh(pre_h + Uh (r .* h)),  h_t = (1-z) .* h + z .* hc
  int gru_cell(int pre, int h_prev, int Uz, int Ur, int Uh) {
    const int d = shape(h_prev).rows;
    check(shape(h_prev).cols == 1, "gru_cell: state must be a column vector, got ", shape(h_prev));
    check(shape(pre).rows == 3 * d && shape(pre).cols == 1, "gru_cell: pre must be ", 3 * d,
          "x1, got ", shape(pre));
    for (int u : {Uz, Ur, Uh})
      check(shape(u).rows == d && shape(u).cols == d, "gru_cell: recurrent weight must be ", d,
            "x", d, ", got ", shape(u));
    const std::array<int, 5> in = {pre, h_prev, Uz, Ur, Uh};
    // Output region: h_t followed by scratch [z, r, hc] for backward.
    const int id = allocN(Op::kGruCell, d, 1, std::span<const int>(in), /*scratch=*/3 * d);
    const auto& k = kern::table<T>();
    const T* pv = val_ptr(pre);
    const T* hv = val_ptr(h_prev);
    T* out = val_ptr(id);
    T* z = out + d;
    T* r = out + 2 * d;
    T* hc = out + 3 * d;
    std::vector<T>& tmp = fwd_tmp_;
    tmp.resize(2 * d);
    T* lin = tmp.data();
    T* rh = tmp.data() + d;
    // z gate
    k.gemm_nn(val_ptr(Uz), hv, lin, d, d, 1, false);
    k.add(lin, pv, lin, d);
    k.sigmoid_v(lin, z, d);
    // r gate
    k.gemm_nn(val_ptr(Ur), hv, lin, d, d, 1, false);
    k.add(lin, pv + d, lin, d);
    k.sigmoid_v(lin, r, d);
    // candidate
    k.mul(r, hv, rh, d);
    k.gemm_nn(val_ptr(Uh), rh, lin, d, d, 1, false);
    k.add(lin, pv + 2 * d, lin, d);
    k.tanh_v(lin, hc, d);
    for (int i = 0; i < d; ++i) out[i] = (T(1) - z[i]) * hv[i] + z[i] * hc[i];
    return id;
  }

  // ---- execution ------------------------------------------------------------

  // Reverse sweep from a scalar loss. Every grad-requiring node receives a
  // gradient of its own shape; leaves not on the loss path keep zeros.
  void backward(int loss) {
    check(loss >= 0 && loss < static_cast<int>(nodes_.size()), "backward: invalid node id");
    check(shape(loss).is_scalar(), "backward: loss must be scalar, got ", shape(loss));
    check(!backward_done_, "backward: called twice without re-recording the tape");
    backward_done_ = true;
    std::memset(grads_.data(), 0, grads_.size() * sizeof(T));
    if (nodes_[loss].grad >= 0) grads_[nodes_[loss].grad] = T(1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) backward_node(i);
  }

  void reset() {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
    ints_.clear();
    backward_done_ = false;
    counts_.fill(0);
  }

  Shape shape(int id) const { return {nodes_[id].rows, nodes_[id].cols}; }
  std::size_t numel_of(int id) const { return shape(id).numel(); }

  const T* value(int id) const { return vals_.data() + nodes_[id].val; }
  T scalar_value(int id) const { return vals_[nodes_[id].val]; }

  // Null when the node does not require grad.
  const T* gradient(int id) const {
    return nodes_[id].grad < 0 ? nullptr : grads_.data() + nodes_[id].grad;
  }

  bool requires_grad(int id) const { return nodes_[id].rg; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t op_count(Op op) const { return counts_[static_cast<int>(op)]; }

  bool value_finite(int id) const {
    const T* v = value(id);
    for (std::size_t i = 0; i < numel_of(id); ++i)
      if (!std::isfinite(static_cast<double>(v[i]))) return false;
    return true;
  }

  std::vector<T> value_copy(int id) const {
    const T* v = value(id);
    return std::vector<T>(v, v + numel_of(id));
  }

 private:
  struct Node {
    Op op;
    bool rg;
    int rows, cols;
    std::size_t val;
    std::ptrdiff_t grad;
    int in_off = 0, in_cnt = 0;
    int a0 = 0, a1 = 0, a2 = 0;
    T fa = 0, fb = 0;
  };

  int alloc(Op op, int rows, int cols, bool rg, int scratch = 0) {
    check(rows > 0 && cols > 0, op_name(op), ": result dimensions must be positive, got ", rows,
          "x", cols);
    Node n;
    n.op = op;
    n.rg = rg;
    n.rows = rows;
    n.cols = cols;
    const std::size_t sz = static_cast<std::size_t>(rows) * cols + scratch;
    n.val = vals_.size();
    vals_.resize(vals_.size() + sz, T(0));
    if (rg) {
      n.grad = static_cast<std::ptrdiff_t>(grads_.size());
      grads_.resize(grads_.size() + static_cast<std::size_t>(rows) * cols, T(0));
    } else {
      n.grad = -1;
    }
    counts_[static_cast<int>(op)]++;
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int alloc1(Op op, int rows, int cols, int a) {
    const std::array<int, 1> in = {a};
    return allocN(op, rows, cols, std::span<const int>(in));
  }

  int alloc2(Op op, int rows, int cols, int a, int b) {
    const std::array<int, 2> in = {a, b};
    return allocN(op, rows, cols, std::span<const int>(in));
  }

  int allocN(Op op, int rows, int cols, std::span<const int> in, int scratch = 0) {
    bool rg = false;
    for (int p : in) {
      check(p >= 0 && p < static_cast<int>(nodes_.size()), op_name(op), ": invalid input node");
      rg = rg || nodes_[p].rg;
    }
    const int in_off = static_cast<int>(ints_.size());
    for (int p : in) ints_.push_back(p);
    const int id = alloc(op, rows, cols, rg, scratch);
    nodes_[id].in_off = in_off;
    nodes_[id].in_cnt = static_cast<int>(in.size());
    return id;
  }

  T* val_ptr(int id) { return vals_.data() + nodes_[id].val; }
  T* grad_ptr(int id) { return nodes_[id].grad < 0 ? nullptr : grads_.data() + nodes_[id].grad; }
  std::size_t numel(int id) const { return static_cast<std::size_t>(nodes_[id].rows) * nodes_[id].cols; }
  int input(const Node& n, int i) const { return ints_[n.in_off + i]; }

  void softmax_group(const T* x, T* y, std::size_t n) {
    // Stabilized by max subtraction; safe for inputs up to +-50 and beyond.
    const auto& k = kern::table<T>();
    const T m = k.vmax(x, n);
    k.affine(T(1), -m, x, y, n);
    k.exp_v(y, y, n);
    const T s = k.sum(y, n);
    k.affine(T(1) / s, T(0), y, y, n);
  }

  void backward_node(int id) {
    Node& n = nodes_[id];
    if (!n.rg || n.op == Op::kLeaf || n.op == Op::kConst) return;
    const T* g = grad_ptr(id);
    const auto& k = kern::table<T>();
    const std::size_t ne = numel(id);
    switch (n.op) {
      case Op::kMatmulNN: {
        const int a = input(n, 0), b = input(n, 1);
        const int m = n.rows, kk = nodes_[a].cols, nn = n.cols;
        if (T* da = grad_ptr(a)) k.gemm_nt(g, val_ptr(b), da, m, nn, kk, true);
        if (T* db = grad_ptr(b)) k.gemm_tn(val_ptr(a), g, db, kk, m, nn, true);
        break;
      }
      case Op::kMatmulTN: {
        const int a = input(n, 0), b = input(n, 1);
        const int m = n.rows, nn = n.cols, kk = nodes_[a].rows;
        if (T* da = grad_ptr(a)) k.gemm_nt(val_ptr(b), g, da, kk, nn, m, true);
        if (T* db = grad_ptr(b)) k.gemm_nn(val_ptr(a), g, db, kk, m, nn, true);
        break;
      }
      case Op::kMatmulNT: {
        const int a = input(n, 0), b = input(n, 1);
        const int m = n.rows, nn = n.cols, kk = nodes_[a].cols;
        if (T* da = grad_ptr(a)) k.gemm_nn(g, val_ptr(b), da, m, nn, kk, true);
        if (T* db = grad_ptr(b)) k.gemm_tn(g, val_ptr(a), db, nn, m, kk, true);
        break;
      }
      case Op::kAdd: {
        if (T* da = grad_ptr(input(n, 0))) k.axpy(T(1), g, da, ne);
        if (T* db = grad_ptr(input(n, 1))) k.axpy(T(1), g, db, ne);
        break;
      }
      case Op::kMul: {
        const int a = input(n, 0), b = input(n, 1);
        if (T* da = grad_ptr(a)) k.madd(g, val_ptr(b), da, ne);
        if (T* db = grad_ptr(b)) k.madd(g, val_ptr(a), db, ne);
        break;
      }
      case Op::kAffine: {
        if (T* da = grad_ptr(input(n, 0))) k.axpy(n.fa, g, da, ne);
        break;
      }
      case Op::kTanh: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        const T* y = val_ptr(id);
        for (std::size_t i = 0; i < ne; ++i) da[i] += g[i] * (T(1) - y[i] * y[i]);
        break;
      }
      case Op::kSigmoid: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        const T* y = val_ptr(id);
        for (std::size_t i = 0; i < ne; ++i) da[i] += g[i] * y[i] * (T(1) - y[i]);
        break;
      }
      case Op::kLog: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        const T* x = val_ptr(input(n, 0));
        const T clamp = static_cast<T>(kLogClamp);
        for (std::size_t i = 0; i < ne; ++i)
          if (x[i] > clamp) da[i] += g[i] / x[i];
        break;
      }
      case Op::kSoftmaxVec: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        softmax_backward(g, val_ptr(id), da, ne);
        break;
      }
      case Op::kSoftmaxRows: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        const T* y = val_ptr(id);
        const std::size_t c = static_cast<std::size_t>(n.cols);
        for (int r = 0; r < n.rows; ++r) softmax_backward(g + r * c, y + r * c, da + r * c, c);
        break;
      }
      case Op::kRowMax: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        const int cols = nodes_[input(n, 0)].cols;
        const int* args = ints_.data() + n.a0;
        for (int r = 0; r < n.rows; ++r) da[static_cast<std::size_t>(r) * cols + args[r]] += g[r];
        break;
      }
      case Op::kTileCols: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        for (int r = 0; r < n.rows; ++r)
          da[r] += k.sum(g + static_cast<std::size_t>(r) * n.cols, static_cast<std::size_t>(n.cols));
        break;
      }
      case Op::kTileRows: {
        T* da = grad_ptr(input(n, 0));
        if (!da) break;
        for (int r = 0; r < n.rows; ++r)
          k.axpy(T(1), g + static_cast<std::size_t>(r) * n.cols, da, static_cast<std::size_t>(n.cols));
        break;
      }
      case Op::kConcat0: {
        const T* gp = g;
        for (int i = 0; i < n.in_cnt; ++i) {
          const int p = input(n, i);
          const std::size_t pn = numel(p);
          if (T* dp = grad_ptr(p)) k.axpy(T(1), gp, dp, pn);
          gp += pn;
        }
        break;
      }
      case Op::kConcat1: {
        int co = 0;
        for (int i = 0; i < n.in_cnt; ++i) {
          const int p = input(n, i);
          const int pc = nodes_[p].cols;
          if (T* dp = grad_ptr(p)) {
            for (int r = 0; r < n.rows; ++r)
              k.axpy(T(1), g + static_cast<std::size_t>(r) * n.cols + co,
                     dp + static_cast<std::size_t>(r) * pc, static_cast<std::size_t>(pc));
          }
          co += pc;
        }
        break;
      }
      case Op::kSliceRows: {
        const int a = input(n, 0);
        if (T* da = grad_ptr(a)) k.axpy(T(1), g, da + static_cast<std::size_t>(n.a0) * nodes_[a].cols, ne);
        break;
      }
      case Op::kSliceCols: {
        const int a = input(n, 0);
        T* da = grad_ptr(a);
        if (!da) break;
        const int ac = nodes_[a].cols;
        for (int r = 0; r < n.rows; ++r)
          k.axpy(T(1), g + static_cast<std::size_t>(r) * n.cols,
                 da + static_cast<std::size_t>(r) * ac + n.a0, static_cast<std::size_t>(n.cols));
        break;
      }
      case Op::kPick: {
        if (T* da = grad_ptr(input(n, 0))) da[n.a0] += g[0];
        break;
      }
      case Op::kSumAll: {
        const int a = input(n, 0);
        T* da = grad_ptr(a);
        if (!da) break;
        const std::size_t an = numel(a);
        for (std::size_t i = 0; i < an; ++i) da[i] += g[0];
        break;
      }
      case Op::kMeanAll: {
        const int a = input(n, 0);
        T* da = grad_ptr(a);
        if (!da) break;
        const std::size_t an = numel(a);
        const T s = g[0] / static_cast<T>(an);
        for (std::size_t i = 0; i < an; ++i) da[i] += s;
        break;
      }
      case Op::kDot: {
        const int a = input(n, 0), b = input(n, 1);
        if (T* da = grad_ptr(a)) k.axpy(g[0], val_ptr(b), da, numel(a));
        if (T* db = grad_ptr(b)) k.axpy(g[0], val_ptr(a), db, numel(a));
        break;
      }
      case Op::kScaleBy: {
        const int x = input(n, 0), s = input(n, 1);
        if (T* dx = grad_ptr(x)) k.axpy(*val_ptr(s), g, dx, ne);
        if (T* ds = grad_ptr(s)) ds[0] += k.dot(g, val_ptr(x), ne);
        break;
      }
      case Op::kEmbedCols: {
        T* dt = grad_ptr(input(n, 0));
        if (!dt) break;
        const int e = n.rows, L = n.cols;
        const int* ids = ints_.data() + n.a0;
        for (int l = 0; l < L; ++l) {
          T* drow = dt + static_cast<std::size_t>(ids[l]) * e;
          for (int r = 0; r < e; ++r) drow[r] += g[static_cast<std::size_t>(r) * L + l];
        }
        break;
      }
      case Op::kScatterAddVec: {
        T* dv = grad_ptr(input(n, 0));
        if (!dv) break;
        const int* ids = ints_.data() + n.a0;
        for (int i = 0; i < n.a1; ++i) dv[i] += g[ids[i]];
        break;
      }
      case Op::kGruCell:
        gru_backward(id, g);
        break;
      case Op::kLeaf:
      case Op::kConst:
      case Op::kOpCount_:
        break;
    }
  }

  void softmax_backward(const T* g, const T* y, T* dx, std::size_t n) {
    const T gy = kern::table<T>().dot(g, y, n);
    for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] * (g[i] - gy);
  }

  void gru_backward(int id, const T* g) {
    const auto& k = kern::table<T>();
    Node& n = nodes_[id];
    const int d = n.rows;
    const int pre = input(n, 0), hp = input(n, 1);
    const int Uz = input(n, 2), Ur = input(n, 3), Uh = input(n, 4);
    const T* h = val_ptr(hp);
    const T* z = val_ptr(id) + d;
    const T* r = z + d;
    const T* hc = z + 2 * d;
    bwd_tmp_.resize(static_cast<std::size_t>(8) * d);
    T* dz = bwd_tmp_.data();
    T* dr = dz + d;
    T* dhc = dz + 2 * d;
    T* dzin = dz + 3 * d;
    T* drin = dz + 4 * d;
    T* dhin = dz + 5 * d;
    T* drh = dz + 6 * d;
    T* rh = dz + 7 * d;
    T* dh = grad_ptr(hp);
    T* dpre = grad_ptr(pre);

    for (int i = 0; i < d; ++i) {
      dz[i] = g[i] * (hc[i] - h[i]);
      dhc[i] = g[i] * z[i];
      dhin[i] = dhc[i] * (T(1) - hc[i] * hc[i]);
      dzin[i] = dz[i] * z[i] * (T(1) - z[i]);
      rh[i] = r[i] * h[i];
    }
    if (dh)
      for (int i = 0; i < d; ++i) dh[i] += g[i] * (T(1) - z[i]);
    if (dpre) {
      k.axpy(T(1), dzin, dpre, d);
      k.axpy(T(1), dhin, dpre + 2 * d, d);
    }
    if (T* dUh = grad_ptr(Uh)) k.gemm_nn(dhin, rh, dUh, d, 1, d, true);
    // d(r .* h) = Uh^T dhin
    k.gemm_tn(val_ptr(Uh), dhin, drh, d, d, 1, false);
    for (int i = 0; i < d; ++i) {
      dr[i] = drh[i] * h[i];
      drin[i] = dr[i] * r[i] * (T(1) - r[i]);
    }
    if (dh) k.madd(drh, r, dh, d);
    if (dpre) k.axpy(T(1), drin, dpre + d, d);
    if (T* dUr = grad_ptr(Ur)) k.gemm_nn(drin, h, dUr, d, 1, d, true);
    if (T* dUz = grad_ptr(Uz)) k.gemm_nn(dzin, h, dUz, d, 1, d, true);
    if (dh) {
      k.gemm_tn(val_ptr(Ur), drin, dh, d, d, 1, true);
      k.gemm_tn(val_ptr(Uz), dzin, dh, d, d, 1, true);
    }
  }

  std::vector<Node> nodes_;
  std::vector<T> vals_;
  std::vector<T> grads_;
  std::vector<int> ints_;
  std::vector<T> fwd_tmp_;
  std::vector<T> bwd_tmp_;
  std::array<std::size_t, static_cast<int>(Op::kOpCount_)> counts_{};
  bool backward_done_ = false;
};

}  // namespace cake
