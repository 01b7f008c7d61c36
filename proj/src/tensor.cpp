#include "dsbr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace dsbr {

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;
using detail::NodePtr;

NodePtr new_node(std::size_t rows, std::size_t cols, std::vector<double> value,
                 bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

bool any_requires_grad(const std::vector<Tensor>& ts) {
  for (const auto& t : ts)
    if (t.requires_grad()) return true;
  return false;
}

// Builds the result node; records parents and the backward closure only
// when tracking is on and some input needs gradients.
Tensor make_op(std::size_t rows, std::size_t cols, std::vector<double> value,
               std::vector<Tensor> inputs, std::function<void(Node&)> backprop) {
  bool track = grad_enabled() && any_requires_grad(inputs);
  NodePtr n = new_node(rows, cols, std::move(value), track);
  if (track) {
    n->parents.reserve(inputs.size());
    for (auto& t : inputs) n->parents.push_back(t.node());
    n->backprop = std::move(backprop);
  }
  return Tensor(n);
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

// Dense kernels. All accumulate into pre-existing c and keep the reduction
// index ascending so repeated runs and alternate call sites agree bitwise.
void mm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c(m,n) += a(m,k) * b(n,k)^T
void mm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  }
}

// mm_nt through an explicit b^T copy so the inner loop is an independent
// axpy instead of a serial dot reduction (which strict FP cannot vectorize).
// Worth the O(kn) scratch on the gradient path, where these are the largest
// products in a step.
void mm_nt_scratch(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t kk = 0; kk < k; ++kk) bt[kk * n + j] = b[j * k + kk];
  mm_nn(a, bt.data(), c, m, k, n);
}

// c(k,n) += a(m,k)^T * b(m,n)
void mm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * k;
    const double* brow = b + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

enum class Broadcast { same, scalar, row, col };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::col;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes, " + shape_str(a) +
                              " vs " + shape_str(b));
}

double broadcast_at(const Tensor& b, Broadcast mode, std::size_t i, std::size_t j) {
  switch (mode) {
    case Broadcast::same: return b.values()[i * b.cols() + j];
    case Broadcast::scalar: return b.values()[0];
    case Broadcast::row: return b.values()[j];
    case Broadcast::col: return b.values()[i];
  }
  return 0.0;
}

void scatter_broadcast(Node& bn, Broadcast mode, std::size_t rows, std::size_t cols,
                       std::size_t i, std::size_t j, double g) {
  switch (mode) {
    case Broadcast::same: bn.grad[i * cols + j] += g; break;
    case Broadcast::scalar: bn.grad[0] += g; break;
    case Broadcast::row: bn.grad[j] += g; break;
    case Broadcast::col: bn.grad[i] += g; break;
  }
  (void)rows;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool on) { g_grad_enabled = on; }

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(new_node(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
  return Tensor(new_node(rows, cols, std::vector<double>(rows * cols, v), requires_grad));
}

Tensor Tensor::scalar(double v) { return full(1, 1, v, false); }

Tensor Tensor::of(std::size_t rows, std::size_t cols, std::vector<double> data,
                  bool requires_grad) {
  if (data.size() != rows * cols)
    throw std::invalid_argument("Tensor::of: data size does not match shape");
  return Tensor(new_node(rows, cols, std::move(data), requires_grad));
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("Tensor::item: tensor is not 1x1");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  if (!defined() || node_->grad.empty())
    throw std::runtime_error("Tensor::grad: no gradient has been accumulated");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (defined() && !node_->grad.empty())
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return Tensor(new_node(rows(), cols(), node_->value, false));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.rows(), "matmul: inner dimensions differ, " + shape_str(a) + " vs " + shape_str(b));
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  mm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_op(m, n, std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      mm_nt_scratch(self.grad.data(), bn->value.data(), an->grad.data(), m, n, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      mm_tn(an->value.data(), self.grad.data(), bn->grad.data(), m, k, n);
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.cols(), "matmul_nt: inner dimensions differ, " + shape_str(a) + " vs " + shape_str(b));
  std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  mm_nt(a.values().data(), b.values().data(), out.data(), m, k, n);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_op(m, n, std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      mm_nn(self.grad.data(), bn->value.data(), an->grad.data(), m, n, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      mm_tn(self.grad.data(), an->value.data(), bn->grad.data(), m, n, k);
    }
  });
}

namespace {

Tensor add_like(const Tensor& a, const Tensor& b, double sign, const char* name) {
  Broadcast mode = broadcast_mode(a, b, name);
  std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] += sign * broadcast_at(b, mode, i, j);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_op(rows, cols, std::move(out), {a, b},
                 [an, bn, mode, rows, cols, sign](Node& self) {
                   if (an->requires_grad) {
                     an->ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       an->grad[i] += self.grad[i];
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::size_t i = 0; i < rows; ++i)
                       for (std::size_t j = 0; j < cols; ++j)
                         scatter_broadcast(*bn, mode, rows, cols, i, j,
                                           sign * self.grad[i * cols + j]);
                   }
                 });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  Broadcast mode = broadcast_mode(a, b, "mul");
  std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = a.values()[i * cols + j] * broadcast_at(b, mode, i, j);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  Tensor bval = b;  // keep handle for broadcast_at in the closure
  Tensor aval = a;
  return make_op(rows, cols, std::move(out), {a, b},
                 [an, bn, aval, bval, mode, rows, cols](Node& self) {
                   if (an->requires_grad) {
                     an->ensure_grad();
                     for (std::size_t i = 0; i < rows; ++i)
                       for (std::size_t j = 0; j < cols; ++j)
                         an->grad[i * cols + j] +=
                             self.grad[i * cols + j] * broadcast_at(bval, mode, i, j);
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::size_t i = 0; i < rows; ++i)
                       for (std::size_t j = 0; j < cols; ++j)
                         scatter_broadcast(*bn, mode, rows, cols, i, j,
                                           self.grad[i * cols + j] *
                                               aval.values()[i * cols + j]);
                   }
                 });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= s;
  Node* an = a.node().get();
  return make_op(a.rows(), a.cols(), std::move(out), {a}, [an, s](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += s * self.grad[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows(), "concat_cols: row counts differ, " + shape_str(a) + " vs " + shape_str(b));
  std::size_t rows = a.rows(), ca = a.cols(), cb = b.cols();
  std::vector<double> out(rows * (ca + cb));
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(a.row_ptr(i), ca, out.data() + i * (ca + cb));
    std::copy_n(b.row_ptr(i), cb, out.data() + i * (ca + cb) + ca);
  }
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_op(rows, ca + cb, std::move(out), {a, b}, [an, bn, rows, ca, cb](Node& self) {
    std::size_t cw = ca + cb;
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < ca; ++j) an->grad[i * ca + j] += self.grad[i * cw + j];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cb; ++j)
          bn->grad[i * cb + j] += self.grad[i * cw + ca + j];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_rows: no inputs");
  std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    check(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts)
    out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<Node*> nodes;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    nodes.push_back(p.node().get());
    offsets.push_back(off);
    off += p.size();
  }
  return make_op(rows, cols, std::move(out), parts, [nodes, offsets](Node& self) {
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      Node* pn = nodes[p];
      if (!pn->requires_grad) continue;
      pn->ensure_grad();
      for (std::size_t i = 0; i < pn->value.size(); ++i)
        pn->grad[i] += self.grad[offsets[p] + i];
    }
  });
}

Tensor transpose(const Tensor& a) {
  std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = a.values()[i * cols + j];
  Node* an = a.node().get();
  return make_op(cols, rows, std::move(out), {a}, [an, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        an->grad[i * cols + j] += self.grad[j * rows + i];
  });
}

Tensor softmax_rows(const Tensor& a) {
  std::size_t rows = a.rows(), cols = a.cols();
  check(cols > 0, "softmax_rows: empty rows");
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.row_ptr(i);
    double m = x[0];
    for (std::size_t j = 1; j < cols; ++j) m = std::max(m, x[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = std::exp(x[j] - m);
      s += out[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] /= s;
  }
  Node* an = a.node().get();
  return make_op(rows, cols, std::move(out), {a}, [an, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = self.value.data() + i * cols;
      const double* g = self.grad.data() + i * cols;
      double dotgy = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dotgy += g[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j)
        an->grad[i * cols + j] += y[j] * (g[j] - dotgy);
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = sigmoid_scalar(a.values()[i]);
  Node* an = a.node().get();
  return make_op(a.rows(), a.cols(), std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double y = self.value[i];
      an->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = silu_scalar(a.values()[i]);
  Node* an = a.node().get();
  return make_op(a.rows(), a.cols(), std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double x = an->value[i];
      double sig = sigmoid_scalar(x);
      an->grad[i] += self.grad[i] * sig * (1.0 + x * (1.0 - sig));
    }
  });
}

Tensor l2_normalize_rows(const Tensor& a) {
  std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows * cols, 0.0);
  std::vector<double> norms(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.row_ptr(i);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += x[j] * x[j];
    double r = std::sqrt(s);
    norms[i] = r;
    if (r > 0.0)
      for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = x[j] / r;
  }
  Node* an = a.node().get();
  return make_op(rows, cols, std::move(out), {a}, [an, norms, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      double r = norms[i];
      if (r == 0.0) continue;  // flat zero region, gradient stays zero
      const double* y = self.value.data() + i * cols;
      const double* g = self.grad.data() + i * cols;
      double gy = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gy += g[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j)
        an->grad[i * cols + j] += (g[j] - y[j] * gy) / r;
    }
  });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& idx) {
  std::size_t cols = a.cols();
  std::vector<double> out(idx.size() * cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    check(idx[i] >= 0 && static_cast<std::size_t>(idx[i]) < a.rows(),
          "gather_rows: index out of range");
    std::copy_n(a.row_ptr(static_cast<std::size_t>(idx[i])), cols, out.data() + i * cols);
  }
  Node* an = a.node().get();
  auto indices = idx;
  return make_op(idx.size(), cols, std::move(out), {a}, [an, indices, cols](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      double* dst = an->grad.data() + static_cast<std::size_t>(indices[i]) * cols;
      const double* g = self.grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) dst[j] += g[j];
    }
  });
}

Tensor take_per_row(const Tensor& a, const std::vector<int>& col_idx) {
  check(col_idx.size() == a.rows(), "take_per_row: one index per row required");
  std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    check(col_idx[i] >= 0 && static_cast<std::size_t>(col_idx[i]) < cols,
          "take_per_row: index out of range");
    out[i] = a.values()[i * cols + static_cast<std::size_t>(col_idx[i])];
  }
  Node* an = a.node().get();
  auto indices = col_idx;
  return make_op(rows, 1, std::move(out), {a}, [an, indices, cols](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < indices.size(); ++i)
      an->grad[i * cols + static_cast<std::size_t>(indices[i])] += self.grad[i];
  });
}

Tensor log_clamped(const Tensor& a, double floor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::log(std::max(a.values()[i], floor));
  Node* an = a.node().get();
  return make_op(a.rows(), a.cols(), std::move(out), {a}, [an, floor](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double x = an->value[i];
      if (x > floor) an->grad[i] += self.grad[i] / x;
    }
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  Node* an = a.node().get();
  return make_op(1, 1, {s}, {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (double& g : an->grad) g += self.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  check(a.size() > 0, "mean_all: empty tensor");
  double s = 0.0;
  for (double v : a.values()) s += v;
  double inv = 1.0 / static_cast<double>(a.size());
  Node* an = a.node().get();
  return make_op(1, 1, {s * inv}, {a}, [an, inv](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (double& g : an->grad) g += self.grad[0] * inv;
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  check(a.size() == b.size(), "dot: sizes differ, " + shape_str(a) + " vs " + shape_str(b));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_op(1, 1, {s}, {a, b}, [an, bn](Node& self) {
    double g = self.grad[0];
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < an->value.size(); ++i) an->grad[i] += g * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < bn->value.size(); ++i) bn->grad[i] += g * an->value[i];
    }
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(),
        "mse: shapes differ, " + shape_str(a) + " vs " + shape_str(b));
  check(a.size() > 0, "mse: empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  double inv = 1.0 / static_cast<double>(a.size());
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_op(1, 1, {s * inv}, {a, b}, [an, bn, inv](Node& self) {
    double g = 2.0 * inv * self.grad[0];
    for (std::size_t i = 0; i < an->value.size(); ++i) {
      double d = an->value[i] - bn->value[i];
      if (an->requires_grad) {
        an->ensure_grad();
        an->grad[i] += g * d;
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        bn->grad[i] -= g * d;
      }
    }
  });
}

Tensor spmm(const SparseRowMatrix& s, const Tensor& x) {
  check(s.cols == x.rows(), "spmm: inner dimensions differ");
  std::size_t cols = x.cols();
  std::vector<double> out(s.rows * cols, 0.0);
  for (std::size_t i = 0; i < s.rows; ++i) {
    double* orow = out.data() + i * cols;
    for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
      const double w = s.val[e];
      const double* xrow = x.row_ptr(static_cast<std::size_t>(s.col[e]));
      for (std::size_t j = 0; j < cols; ++j) orow[j] += w * xrow[j];
    }
  }
  Node* xn = x.node().get();
  const SparseRowMatrix* sp = &s;  // caller keeps the matrix alive (graph lifetime)
  return make_op(s.rows, cols, std::move(out), {x}, [xn, sp, cols](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < sp->rows; ++i) {
      const double* g = self.grad.data() + i * cols;
      for (std::size_t e = sp->row_ptr[i]; e < sp->row_ptr[i + 1]; ++e) {
        double* dst = xn->grad.data() + static_cast<std::size_t>(sp->col[e]) * cols;
        const double w = sp->val[e];
        for (std::size_t j = 0; j < cols; ++j) dst[j] += w * g[j];
      }
    }
  });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a defined 1x1 tensor");
  Node* root = loss.node().get();
  if (!root->requires_grad)
    throw std::invalid_argument("backward: loss does not require grad");

  // Post-order DFS, then replay reversed: children before parents.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Leaf gradients accumulate across calls; op-node gradients are per-pass
  // scratch and must start clean or a repeated backward would compound.
  for (Node* n : order)
    if (n->backprop) n->grad.assign(n->value.size(), 0.0);

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

}  // namespace dsbr
