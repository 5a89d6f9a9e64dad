#include "lgcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lgcn::ad {

namespace {

[[noreturn]] void shape_fail(std::string_view op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void need_matrix(std::string_view op, const Tensor& x, const char* what) {
  if (x.rank() != 2) shape_fail(op, std::string(what) + " must be a matrix, got " + shape_string(x.shape()));
}

std::string pair_shapes(const Tensor& a, const Tensor& b) {
  return shape_string(a.shape()) + " and " + shape_string(b.shape());
}

void accumulate(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

// Gradient buffer of `v`, or null when `v` needs none.
double* grad_or_null(Tape& tp, Var v) { return tp.requires_grad(v) ? tp.grad(v).data() : nullptr; }

void check_index(std::string_view op, const Index& idx, std::size_t bound, const char* what) {
  if (!idx) shape_fail(op, std::string(what) + " index is null");
  for (auto i : *idx) {
    if (i >= bound) {
      shape_fail(op, std::string(what) + " index " + std::to_string(i) + " out of range for " +
                         std::to_string(bound) + " rows");
    }
  }
}

// K x 3 x Z kernels as (3Z) x K, so one window updates all kernels in a
// contiguous inner loop.
std::vector<double> transpose_kernels(const double* kernels, std::size_t k_count, std::size_t width) {
  std::vector<double> kt(width * k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t j = 0; j < width; ++j) kt[j * k_count + k] = kernels[k * width + j];
  }
  return kt;
}

// All K kernel responses at one window of `width` values, summed in
// (offset, channel) order before the bias.
void conv_position(const double* kt, const double* bias, const double* window, std::size_t width,
                   std::size_t k_count, double* out) {
  for (std::size_t k = 0; k < k_count; ++k) out[k] = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    const double v = window[j];
    const double* w = kt + j * k_count;
    for (std::size_t k = 0; k < k_count; ++k) out[k] += w[k] * v;
  }
  for (std::size_t k = 0; k < k_count; ++k) out[k] += bias[k];
}

void check_conv_params(std::string_view op, const Tensor& kernels, const Tensor& bias, std::size_t channels) {
  if (kernels.rank() != 3 || kernels.dim(1) != 3) {
    shape_fail(op, "kernels must be K x 3 x Z, got " + shape_string(kernels.shape()));
  }
  if (kernels.dim(2) != channels) {
    shape_fail(op, "kernel channels " + std::to_string(kernels.dim(2)) + " do not match sequence width " +
                       std::to_string(channels));
  }
  if (bias.size() != kernels.dim(0)) {
    shape_fail(op, "bias " + shape_string(bias.shape()) + " does not match " + std::to_string(kernels.dim(0)) +
                       " kernels");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Index make_index(std::vector<std::uint32_t> ids) {
  return std::make_shared<const std::vector<std::uint32_t>>(std::move(ids));
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  need_matrix("matmul", A, "left operand");
  need_matrix("matmul", B, "right operand");
  const std::size_t n = A.dim(0), k = A.dim(1), m = B.dim(1);
  if (B.dim(0) != k) shape_fail("matmul", "inner dimensions differ: " + pair_shapes(A, B));
  Tensor out({n, m}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = A[i * k + p];
      const double* br = B.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += x * br[j];
    }
  }
  const Var ins[] = {a, b};
  return t.record("matmul", std::move(out), ins, [a, b, n, k, m](Tape& tp, const Tensor& g) {
    const Tensor& A = tp.value(a);
    const Tensor& B = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor& da = tp.grad(a);
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double* br = B.data() + p * m;
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += gr[j] * br[j];
          da[i * k + p] += s;
        }
      }
    }
    if (tp.requires_grad(b)) {
      Tensor& db = tp.grad(b);
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double x = A[i * k + p];
          double* d = db.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) d[j] += x * gr[j];
        }
      }
    }
  });
}

Var add_bias(Tape& t, Var x, Var bias) {
  const Tensor& X = t.value(x);
  const Tensor& B = t.value(bias);
  need_matrix("add_bias", X, "input");
  const std::size_t n = X.dim(0), m = X.dim(1);
  if (B.size() != m) shape_fail("add_bias", "bias does not match columns: " + pair_shapes(X, B));
  Tensor out = X;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += B[j];
  }
  const Var ins[] = {x, bias};
  return t.record("add_bias", std::move(out), ins, [x, bias, n, m](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) accumulate(tp.grad(x), g);
    if (tp.requires_grad(bias)) {
      Tensor& db = tp.grad(bias);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) db[j] += g[i * m + j];
      }
    }
  });
}

Var add_scaled_bias(Tape& t, Var x, Var bias, std::shared_ptr<const std::vector<double>> multiplier) {
  const Tensor& X = t.value(x);
  const Tensor& B = t.value(bias);
  need_matrix("add_scaled_bias", X, "input");
  const std::size_t n = X.dim(0), m = X.dim(1);
  if (B.size() != m) shape_fail("add_scaled_bias", "bias does not match columns: " + pair_shapes(X, B));
  if (!multiplier || multiplier->size() != n) shape_fail("add_scaled_bias", "multiplier needs one value per row");
  Tensor out = X;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (*multiplier)[i];
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += c * B[j];
  }
  const Var ins[] = {x, bias};
  return t.record("add_scaled_bias", std::move(out), ins, [x, bias, n, m, multiplier](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) accumulate(tp.grad(x), g);
    if (tp.requires_grad(bias)) {
      Tensor& db = tp.grad(bias);
      for (std::size_t i = 0; i < n; ++i) {
        const double c = (*multiplier)[i];
        for (std::size_t j = 0; j < m; ++j) db[j] += c * g[i * m + j];
      }
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& A = t.value(a);
  const Tensor& B = t.value(b);
  if (A.shape() != B.shape()) shape_fail("add", "shapes differ: " + pair_shapes(A, B));
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  const Var ins[] = {a, b};
  return t.record("add", std::move(out), ins, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) accumulate(tp.grad(a), g);
    if (tp.requires_grad(b)) accumulate(tp.grad(b), g);
  });
}

Var scale(Tape& t, Var x, double factor) {
  Tensor out = t.value(x);
  for (double& v : out.storage()) v *= factor;
  const Var ins[] = {x};
  return t.record("scale", std::move(out), ins, [x, factor](Tape& tp, const Tensor& g) {
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * g[i];
  });
}

Var relu(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  const Var ins[] = {x};
  return t.record("relu", std::move(out), ins, [x](Tape& tp, const Tensor& g) {
    const Tensor& X = tp.value(x);
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (X[i] > 0.0) dx[i] += g[i];
    }
  });
}

Var sigmoid(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.storage()) v = stable_sigmoid(v);
  const Var ins[] = {x};
  return t.record("sigmoid", std::move(out), ins, [x](Tape& tp, const Tensor& g) {
    const Tensor& X = tp.value(x);
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double s = stable_sigmoid(X[i]);
      dx[i] += g[i] * s * (1.0 - s);
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) shape_fail("concat_cols", "no operands");
  const std::size_t n = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& P = t.value(p);
    need_matrix("concat_cols", P, "operand");
    if (P.dim(0) != n) shape_fail("concat_cols", "row counts differ: " + pair_shapes(t.value(parts[0]), P));
    widths.push_back(P.dim(1));
    total += P.dim(1);
  }
  Tensor out({n, total}, 0.0);
  std::size_t offset = 0;
  for (std::size_t q = 0; q < parts.size(); ++q) {
    const Tensor& P = t.value(parts[q]);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(P.data() + i * widths[q], widths[q], out.data() + i * total + offset);
    }
    offset += widths[q];
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record("concat_cols", std::move(out), ins, [ins, widths, n, total](Tape& tp, const Tensor& g) {
    std::size_t offset = 0;
    for (std::size_t q = 0; q < ins.size(); ++q) {
      if (tp.requires_grad(ins[q])) {
        Tensor& d = tp.grad(ins[q]);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < widths[q]; ++j) d[i * widths[q] + j] += g[i * total + offset + j];
        }
      }
      offset += widths[q];
    }
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) shape_fail("concat_rows", "no operands");
  const std::size_t m = t.value(parts[0]).cols();
  std::size_t rows = 0;
  std::vector<std::size_t> sizes;
  for (const Var& p : parts) {
    const Tensor& P = t.value(p);
    need_matrix("concat_rows", P, "operand");
    if (P.dim(1) != m) shape_fail("concat_rows", "column counts differ: " + pair_shapes(t.value(parts[0]), P));
    rows += P.dim(0);
    sizes.push_back(P.size());
  }
  Tensor out({rows, m}, 0.0);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& P = t.value(p);
    std::copy_n(P.data(), P.size(), out.data() + offset);
    offset += P.size();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record("concat_rows", std::move(out), ins, [ins, sizes](Tape& tp, const Tensor& g) {
    std::size_t offset = 0;
    for (std::size_t q = 0; q < ins.size(); ++q) {
      if (tp.requires_grad(ins[q])) {
        Tensor& d = tp.grad(ins[q]);
        for (std::size_t i = 0; i < sizes[q]; ++i) d[i] += g[offset + i];
      }
      offset += sizes[q];
    }
  });
}

Var scale_rows(Tape& t, Var x, Var s) {
  const Tensor& X = t.value(x);
  const Tensor& S = t.value(s);
  need_matrix("scale_rows", X, "input");
  const std::size_t n = X.dim(0), m = X.dim(1);
  if (S.size() != n) shape_fail("scale_rows", "need one factor per row: " + pair_shapes(X, S));
  Tensor out = X;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] *= S[i];
  }
  const Var ins[] = {x, s};
  return t.record("scale_rows", std::move(out), ins, [x, s, n, m](Tape& tp, const Tensor& g) {
    const Tensor& X = tp.value(x);
    const Tensor& S = tp.value(s);
    if (tp.requires_grad(x)) {
      Tensor& dx = tp.grad(x);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) dx[i * m + j] += g[i * m + j] * S[i];
      }
    }
    if (tp.requires_grad(s)) {
      Tensor& ds = tp.grad(s);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * X[i * m + j];
        ds[i] += acc;
      }
    }
  });
}

Var row_sum(Tape& t, Var x) {
  const Tensor& X = t.value(x);
  need_matrix("row_sum", X, "input");
  const std::size_t n = X.dim(0), m = X.dim(1);
  Tensor out({n, 1}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i] += X[i * m + j];
  }
  const Var ins[] = {x};
  return t.record("row_sum", std::move(out), ins, [x, n, m](Tape& tp, const Tensor& g) {
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) dx[i * m + j] += g[i];
    }
  });
}

Var reciprocal_clamped(Tape& t, Var x, double floor) {
  if (!(floor > 0.0)) shape_fail("reciprocal_clamped", "floor must be positive");
  Tensor out = t.value(x);
  for (double& v : out.storage()) v = 1.0 / std::max(v, floor);
  const Var ins[] = {x};
  return t.record("reciprocal_clamped", std::move(out), ins, [x, floor](Tape& tp, const Tensor& g) {
    const Tensor& X = tp.value(x);
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (X[i] > floor) dx[i] -= g[i] / (X[i] * X[i]);
    }
  });
}

Var sum(Tape& t, Var x) {
  const Tensor& X = t.value(x);
  double s = 0.0;
  for (double v : X.values()) s += v;
  const Var ins[] = {x};
  return t.record("sum", Tensor::scalar(s), ins, [x](Tape& tp, const Tensor& g) {
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
  });
}

Var gather_rows(Tape& t, Var x, Index rows) {
  const Tensor& X = t.value(x);
  need_matrix("gather_rows", X, "input");
  check_index("gather_rows", rows, X.dim(0), "row");
  const std::size_t m = X.dim(1);
  const std::size_t count = rows->size();
  Tensor out({count, m}, 0.0);
  for (std::size_t r = 0; r < count; ++r) std::copy_n(X.data() + (*rows)[r] * m, m, out.data() + r * m);
  const Var ins[] = {x};
  return t.record("gather_rows", std::move(out), ins, [x, rows, m](Tape& tp, const Tensor& g) {
    Tensor& dx = tp.grad(x);
    for (std::size_t r = 0; r < rows->size(); ++r) {
      double* d = dx.data() + (*rows)[r] * m;
      const double* gr = g.data() + r * m;
      for (std::size_t j = 0; j < m; ++j) d[j] += gr[j];
    }
  });
}

Var segment_sum(Tape& t, Var messages, Index targets, std::size_t n) {
  const Tensor& M = t.value(messages);
  need_matrix("segment_sum", M, "messages");
  if (!targets || targets->size() != M.dim(0)) {
    shape_fail("segment_sum", "need one target per message row, messages " + shape_string(M.shape()));
  }
  check_index("segment_sum", targets, n, "target");
  const std::size_t d = M.dim(1);
  Tensor out({n, d}, 0.0);
  for (std::size_t r = 0; r < targets->size(); ++r) {
    double* o = out.data() + (*targets)[r] * d;
    const double* src = M.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) o[j] += src[j];
  }
  const Var ins[] = {messages};
  return t.record("segment_sum", std::move(out), ins, [messages, targets, d](Tape& tp, const Tensor& g) {
    Tensor& dm = tp.grad(messages);
    for (std::size_t r = 0; r < targets->size(); ++r) {
      const double* gr = g.data() + (*targets)[r] * d;
      double* o = dm.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) o[j] += gr[j];
    }
  });
}

Var broadcast_rows(Tape& t, Var v, std::size_t n) {
  const Tensor& V = t.value(v);
  if (V.rank() == 2 && V.dim(0) != 1) shape_fail("broadcast_rows", "expected a row, got " + shape_string(V.shape()));
  const std::size_t m = V.size();
  Tensor out({n, m}, 0.0);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(V.data(), m, out.data() + i * m);
  const Var ins[] = {v};
  return t.record("broadcast_rows", std::move(out), ins, [v, n, m](Tape& tp, const Tensor& g) {
    Tensor& dv = tp.grad(v);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) dv[j] += g[i * m + j];
    }
  });
}

Var kron_flatten(Tape& t, Var w, Var h) {
  const Tensor& W = t.value(w);
  const Tensor& H = t.value(h);
  const std::size_t r_count = W.size(), f = H.size();
  Tensor out({r_count * f}, 0.0);
  for (std::size_t r = 0; r < r_count; ++r) {
    for (std::size_t j = 0; j < f; ++j) out[r * f + j] = W[r] * H[j];
  }
  const Var ins[] = {w, h};
  return t.record("kron_flatten", std::move(out), ins, [w, h, r_count, f](Tape& tp, const Tensor& g) {
    const Tensor& W = tp.value(w);
    const Tensor& H = tp.value(h);
    if (tp.requires_grad(w)) {
      Tensor& dw = tp.grad(w);
      for (std::size_t r = 0; r < r_count; ++r) {
        for (std::size_t j = 0; j < f; ++j) dw[r] += g[r * f + j] * H[j];
      }
    }
    if (tp.requires_grad(h)) {
      Tensor& dh = tp.grad(h);
      for (std::size_t r = 0; r < r_count; ++r) {
        for (std::size_t j = 0; j < f; ++j) dh[j] += g[r * f + j] * W[r];
      }
    }
  });
}

Var kron_rows(Tape& t, Var w, Var h) {
  const Tensor& W = t.value(w);
  const Tensor& H = t.value(h);
  need_matrix("kron_rows", W, "weights");
  need_matrix("kron_rows", H, "features");
  if (W.dim(0) != H.dim(0)) shape_fail("kron_rows", "row counts differ: " + pair_shapes(W, H));
  const std::size_t m = W.dim(0), r_count = W.dim(1), f = H.dim(1), width = r_count * f;
  Tensor out({m, width}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < r_count; ++r) {
      for (std::size_t j = 0; j < f; ++j) out[i * width + r * f + j] = W[i * r_count + r] * H[i * f + j];
    }
  }
  const Var ins[] = {w, h};
  return t.record("kron_rows", std::move(out), ins, [w, h, m, r_count, f, width](Tape& tp, const Tensor& g) {
    const Tensor& W = tp.value(w);
    const Tensor& H = tp.value(h);
    double* dw = grad_or_null(tp, w);
    double* dh = grad_or_null(tp, h);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t r = 0; r < r_count; ++r) {
        const double* gr = g.data() + i * width + r * f;
        if (dw) {
          double acc = 0.0;
          for (std::size_t j = 0; j < f; ++j) acc += gr[j] * H[i * f + j];
          dw[i * r_count + r] += acc;
        }
        if (dh) {
          const double wv = W[i * r_count + r];
          for (std::size_t j = 0; j < f; ++j) dh[i * f + j] += gr[j] * wv;
        }
      }
    }
  });
}

Var kron_matmul(Tape& t, Var w, Var h, Index src, Var weight) {
  const Tensor& W = t.value(w);
  const Tensor& H = t.value(h);
  const Tensor& Wt = t.value(weight);
  need_matrix("kron_matmul", W, "relation weights");
  need_matrix("kron_matmul", H, "features");
  need_matrix("kron_matmul", Wt, "weight");
  const std::size_t m = W.dim(0), r_count = W.dim(1), n = H.dim(0), f = H.dim(1), d = Wt.dim(1);
  if (Wt.dim(0) != r_count * f) {
    shape_fail("kron_matmul", "weight rows must equal relations x features, got " + pair_shapes(W, H) + " with " +
                                  shape_string(Wt.shape()));
  }
  if (!src || src->size() != m) shape_fail("kron_matmul", "need one source row per relation row");
  check_index("kron_matmul", src, n, "source");

  // proj[j][r] = H[j] * weight_r, shape n x R x D.
  auto proj = std::make_shared<std::vector<double>>(n * r_count * d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t r = 0; r < r_count; ++r) {
      double* p = proj->data() + (j * r_count + r) * d;
      for (std::size_t q = 0; q < f; ++q) {
        const double x = H[j * f + q];
        const double* wr = Wt.data() + (r * f + q) * d;
        for (std::size_t c = 0; c < d; ++c) p[c] += x * wr[c];
      }
    }
  }
  Tensor out({m, d}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.data() + i * d;
    const double* pj = proj->data() + static_cast<std::size_t>((*src)[i]) * r_count * d;
    for (std::size_t r = 0; r < r_count; ++r) {
      const double a = W[i * r_count + r];
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) o[c] += a * pj[r * d + c];
    }
  }
  const Var ins[] = {w, h, weight};
  return t.record("kron_matmul", std::move(out), ins,
                  [w, h, weight, src, proj, m, r_count, n, f, d](Tape& tp, const Tensor& g) {
                    const Tensor& W = tp.value(w);
                    if (tp.requires_grad(w)) {
                      Tensor& dw = tp.grad(w);
                      for (std::size_t i = 0; i < m; ++i) {
                        const double* gr = g.data() + i * d;
                        const double* pj = proj->data() + static_cast<std::size_t>((*src)[i]) * r_count * d;
                        for (std::size_t r = 0; r < r_count; ++r) {
                          double acc = 0.0;
                          for (std::size_t c = 0; c < d; ++c) acc += gr[c] * pj[r * d + c];
                          dw[i * r_count + r] += acc;
                        }
                      }
                    }
                    const bool gh = tp.requires_grad(h), gweight = tp.requires_grad(weight);
                    if (!gh && !gweight) return;
                    std::vector<double> dproj(n * r_count * d, 0.0);
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* gr = g.data() + i * d;
                      double* dp = dproj.data() + static_cast<std::size_t>((*src)[i]) * r_count * d;
                      for (std::size_t r = 0; r < r_count; ++r) {
                        const double a = W[i * r_count + r];
                        if (a == 0.0) continue;
                        for (std::size_t c = 0; c < d; ++c) dp[r * d + c] += a * gr[c];
                      }
                    }
                    const Tensor& H = tp.value(h);
                    const Tensor& Wt = tp.value(weight);
                    double* dh = grad_or_null(tp, h);
                    double* dweight = grad_or_null(tp, weight);
                    for (std::size_t j = 0; j < n; ++j) {
                      for (std::size_t r = 0; r < r_count; ++r) {
                        const double* dp = dproj.data() + (j * r_count + r) * d;
                        for (std::size_t q = 0; q < f; ++q) {
                          const std::size_t row = r * f + q;
                          if (dh) {
                            const double* wr = Wt.data() + row * d;
                            double acc = 0.0;
                            for (std::size_t c = 0; c < d; ++c) acc += dp[c] * wr[c];
                            dh[j * f + q] += acc;
                          }
                          if (dweight) {
                            const double x = H[j * f + q];
                            double* dwr = dweight + row * d;
                            for (std::size_t c = 0; c < d; ++c) dwr[c] += x * dp[c];
                          }
                        }
                      }
                    }
                  });
}

Var expand_bidirectional(Tape& t, Var w, Expansion direction) {
  const Tensor& W = t.value(w);
  need_matrix("expand_bidirectional", W, "input");
  const std::size_t e = W.dim(0), l = W.dim(1);
  const std::size_t offset = direction == Expansion::Canonical ? 0 : l;
  Tensor out({e, 2 * l}, 0.0);
  for (std::size_t i = 0; i < e; ++i) std::copy_n(W.data() + i * l, l, out.data() + i * 2 * l + offset);
  const Var ins[] = {w};
  return t.record("expand_bidirectional", std::move(out), ins, [w, e, l, offset](Tape& tp, const Tensor& g) {
    Tensor& dw = tp.grad(w);
    for (std::size_t i = 0; i < e; ++i) {
      for (std::size_t j = 0; j < l; ++j) dw[i * l + j] += g[i * 2 * l + offset + j];
    }
  });
}

Var conv1d(Tape& t, Var seq, Var kernels, Var bias) {
  const Tensor& S = t.value(seq);
  const Tensor& Kn = t.value(kernels);
  const Tensor& B = t.value(bias);
  need_matrix("conv1d", S, "sequence");
  const std::size_t len = S.dim(0), z = S.dim(1);
  check_conv_params("conv1d", Kn, B, z);
  if (len < 3) shape_fail("conv1d", "sequence length " + std::to_string(len) + " < 3; pad before convolving");
  const std::size_t k_count = Kn.dim(0), width = 3 * z, positions = len - 2;
  const std::vector<double> kt = transpose_kernels(Kn.data(), k_count, width);
  Tensor out({k_count, positions}, 0.0);
  std::vector<double> acc(k_count);
  for (std::size_t p = 0; p < positions; ++p) {
    conv_position(kt.data(), B.data(), S.data() + p * z, width, k_count, acc.data());
    for (std::size_t k = 0; k < k_count; ++k) out[k * positions + p] = acc[k];
  }
  const Var ins[] = {seq, kernels, bias};
  return t.record("conv1d", std::move(out), ins,
                  [seq, kernels, bias, k_count, width, positions, z](Tape& tp, const Tensor& g) {
                    const Tensor& S = tp.value(seq);
                    const Tensor& Kn = tp.value(kernels);
                    double* ds = grad_or_null(tp, seq);
                    double* dk = grad_or_null(tp, kernels);
                    double* db = grad_or_null(tp, bias);
                    for (std::size_t k = 0; k < k_count; ++k) {
                      for (std::size_t p = 0; p < positions; ++p) {
                        const double gv = g[k * positions + p];
                        if (db) db[k] += gv;
                        for (std::size_t j = 0; j < width; ++j) {
                          if (dk) dk[k * width + j] += gv * S[p * z + j];
                          if (ds) ds[p * z + j] += gv * Kn[k * width + j];
                        }
                      }
                    }
                  });
}

Var global_maxpool(Tape& t, Var map) {
  const Tensor& X = t.value(map);
  need_matrix("global_maxpool", X, "feature map");
  const std::size_t k_count = X.dim(0), m = X.dim(1);
  if (m == 0) shape_fail("global_maxpool", "feature map has no positions");
  Tensor out({k_count}, 0.0);
  std::vector<std::uint32_t> arg(k_count, 0);
  for (std::size_t k = 0; k < k_count; ++k) {
    double best = X[k * m];
    for (std::size_t p = 1; p < m; ++p) {
      if (X[k * m + p] > best) {
        best = X[k * m + p];
        arg[k] = static_cast<std::uint32_t>(p);
      }
    }
    out[k] = best;
  }
  const Var ins[] = {map};
  return t.record("global_maxpool", std::move(out), ins, [map, arg, m](Tape& tp, const Tensor& g) {
    Tensor& dx = tp.grad(map);
    for (std::size_t k = 0; k < arg.size(); ++k) dx[k * m + arg[k]] += g[k];
  });
}

Var conv1d_maxpool(Tape& t, const EdgeBatches& batches, Var kernels, Var bias) {
  const Tensor& Kn = t.value(kernels);
  const Tensor& B = t.value(bias);
  const std::size_t z = batches.attr_dim;
  check_conv_params("conv1d_maxpool", Kn, B, z);
  const std::size_t k_count = Kn.dim(0), width = 3 * z;

  Tensor out({batches.num_edges, k_count}, 0.0);
  // Winning position for every (edge, kernel).
  auto arg = std::make_shared<std::vector<std::uint32_t>>(batches.num_edges * k_count, 0);
  const std::vector<double> kt = transpose_kernels(Kn.data(), k_count, width);
  std::vector<double> acc(k_count);
  for (const auto& b : batches.buckets) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::size_t len = b.lengths[i];
      const std::size_t valid = len > 2 ? len - 2 : 1;
      const std::size_t e = b.edge_ids[i];
      const double* s = b.sequence(i, z);
      double* o = out.data() + e * k_count;
      std::uint32_t* a = arg->data() + e * k_count;
      conv_position(kt.data(), B.data(), s, width, k_count, o);
      for (std::size_t p = 1; p < valid; ++p) {
        conv_position(kt.data(), B.data(), s + p * z, width, k_count, acc.data());
        for (std::size_t k = 0; k < k_count; ++k) {
          if (acc[k] > o[k]) {
            o[k] = acc[k];
            a[k] = static_cast<std::uint32_t>(p);
          }
        }
      }
    }
  }
  const Var ins[] = {kernels, bias};
  const EdgeBatches* bp = &batches;
  return t.record("conv1d_maxpool", std::move(out), ins,
                  [kernels, bias, bp, arg, k_count, width, z](Tape& tp, const Tensor& g) {
                    double* dk = grad_or_null(tp, kernels);
                    double* db = grad_or_null(tp, bias);
                    for (const auto& b : bp->buckets) {
                      for (std::size_t i = 0; i < b.size(); ++i) {
                        const std::size_t e = b.edge_ids[i];
                        const double* s = b.sequence(i, z);
                        for (std::size_t k = 0; k < k_count; ++k) {
                          const double gv = g[e * k_count + k];
                          if (gv == 0.0) continue;
                          if (db) db[k] += gv;
                          if (dk) {
                            const double* window = s + (*arg)[e * k_count + k] * z;
                            for (std::size_t j = 0; j < width; ++j) dk[k * width + j] += gv * window[j];
                          }
                        }
                      }
                    }
                  });
}

Var dropout(Tape& t, Var x, double p, bool training, CounterRng rng) {
  if (!(p >= 0.0 && p < 1.0)) shape_fail("dropout", "probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor out = t.value(x);
  auto mask = std::make_shared<std::vector<double>>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() >= p ? keep_scale : 0.0;
    out[i] *= (*mask)[i];
  }
  const Var ins[] = {x};
  return t.record("dropout", std::move(out), ins, [x, mask](Tape& tp, const Tensor& g) {
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * (*mask)[i];
  });
}

Var weighted_cross_entropy(Tape& t, Var logits, std::span<const int> labels, std::span<const double> class_weights,
                           std::span<const std::size_t> mask) {
  const Tensor& Z = t.value(logits);
  need_matrix("weighted_cross_entropy", Z, "logits");
  const std::size_t n = Z.dim(0), c = Z.dim(1);
  if (mask.empty()) shape_fail("weighted_cross_entropy", "mask is empty");
  if (labels.size() != n) shape_fail("weighted_cross_entropy", "need one label per logit row");
  if (class_weights.size() != c) shape_fail("weighted_cross_entropy", "need one weight per class");
  for (auto i : mask) {
    if (i >= n) shape_fail("weighted_cross_entropy", "mask row " + std::to_string(i) + " out of range");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      shape_fail("weighted_cross_entropy", "label " + std::to_string(labels[i]) + " out of range");
    }
  }
  const double inv_count = 1.0 / static_cast<double>(mask.size());
  // Softmax rows of the masked nodes, kept for the adjoint.
  auto probs = std::make_shared<std::vector<double>>(mask.size() * c);
  double total = 0.0;
  for (std::size_t q = 0; q < mask.size(); ++q) {
    const double* z = Z.data() + mask[q] * c;
    const double top = *std::max_element(z, z + c);
    double denom = 0.0;
    for (std::size_t k = 0; k < c; ++k) denom += std::exp(z[k] - top);
    const double lse = top + std::log(denom);
    const auto y = static_cast<std::size_t>(labels[mask[q]]);
    total += class_weights[y] * (lse - z[y]);
    for (std::size_t k = 0; k < c; ++k) (*probs)[q * c + k] = std::exp(z[k] - lse);
  }
  std::vector<std::size_t> rows(mask.begin(), mask.end());
  std::vector<double> row_weight(mask.size());
  std::vector<std::size_t> ys(mask.size());
  for (std::size_t q = 0; q < mask.size(); ++q) {
    ys[q] = static_cast<std::size_t>(labels[mask[q]]);
    row_weight[q] = class_weights[ys[q]] * inv_count;
  }
  const Var ins[] = {logits};
  return t.record("weighted_cross_entropy", Tensor::scalar(total * inv_count), ins,
                  [logits, probs, rows, row_weight, ys, c](Tape& tp, const Tensor& g) {
                    Tensor& dz = tp.grad(logits);
                    for (std::size_t q = 0; q < rows.size(); ++q) {
                      const double s = g[0] * row_weight[q];
                      double* d = dz.data() + rows[q] * c;
                      for (std::size_t k = 0; k < c; ++k) {
                        d[k] += s * ((*probs)[q * c + k] - (k == ys[q] ? 1.0 : 0.0));
                      }
                    }
                  });
}

}  // namespace lgcn::ad
