#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dsbr {

// Reverse-mode autodiff over dense fp64 matrices. Every Tensor wraps a
// shared graph node; ops record a backward closure when gradient tracking
// is on and at least one input requires grad. backward() walks the graph
// in reverse topological order and accumulates into leaf .grad buffers,
// which persist until zero_grad so separate backward calls add up.
//
// All tensors are rank-2 (rows x cols); scalars are 1x1.

namespace detail {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pulls this->grad into parents

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

// Thread-local tracking flag, on by default.
bool grad_enabled();
void set_grad_enabled(bool on);

// Scoped "no tape" region for inference paths.
struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor of(std::size_t rows, std::size_t cols, std::vector<double> data,
                   bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values() { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;  // 1x1 only
  const double* row_ptr(std::size_t r) const { return node_->value.data() + r * cols(); }

  // Gradient buffer; throws if backward never reached this tensor.
  const std::vector<double>& grad() const;
  bool has_grad() const { return defined() && !node_->grad.empty(); }
  void zero_grad();

  // Value copy detached from the graph.
  Tensor detach() const;

  detail::NodePtr node() const { return node_; }
  explicit Tensor(detail::NodePtr n) : node_(std::move(n)) {}

 private:
  detail::NodePtr node_;
};

// Named trainable parameter, the unit the optimizer and checkpoints work in.
struct Param {
  std::string name;
  Tensor tensor;
};

// Row-compressed sparse matrix for graph message passing (values are fixed
// weights, not differentiable).
struct SparseRowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows+1 offsets
  std::vector<int> col;
  std::vector<double> val;
};

// --- primitive ops -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a x b^T, (m,k)x(n,k)
Tensor add(const Tensor& a, const Tensor& b);        // same shape, or b is 1x1,
                                                     // 1xN row bias, or Mx1 col
Tensor sub(const Tensor& a, const Tensor& b);        // same broadcasts as add
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same broadcasts
Tensor scale(const Tensor& a, double s);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor l2_normalize_rows(const Tensor& a);  // zero rows stay zero
Tensor gather_rows(const Tensor& a, const std::vector<int>& idx);
Tensor take_per_row(const Tensor& a, const std::vector<int>& col_idx);  // Nx1
Tensor log_clamped(const Tensor& a, double floor = 1e-12);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);  // flattened, scalar out
Tensor mse(const Tensor& a, const Tensor& b);  // mean squared error, scalar
Tensor spmm(const SparseRowMatrix& s, const Tensor& x);

// Scalar activations shared by the fast (tape-free) kernels so both paths
// compute bit-identical values.
inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu_scalar(double x) { return x * sigmoid_scalar(x); }

// Accumulates d(loss)/d(leaf) into every reachable .grad. Loss must be 1x1.
void backward(const Tensor& loss);

}  // namespace dsbr
