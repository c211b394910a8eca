#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

// Minimal reverse-mode automatic differentiation over dense row-major
// 64-bit tensors. Every op records a backward closure on its output node;
// Tensor::backward() replays them in reverse topological order.
namespace gcnd::ad {

using Shape = std::vector<std::size_t>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient after backward(); zeros if nothing flowed into this tensor.
  std::span<const double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  /// Backpropagates from this scalar (seed 1).
  void backward() const;

  /// Detached copy of the values (no history, no grad).
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<Node> node);

 private:
  std::shared_ptr<Node> node_;
  mutable std::vector<double> zero_grad_cache_;
};

/// Builds an op output; `backward` runs only when some parent requires grad.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

// --- ops (2-D tensors are [rows x cols]) ---

/// x [n x a] times w^T, w [b x a] -> [n x b]
Tensor matmul_nt(const Tensor& x, const Tensor& w);
/// Adds a length-b vector to each row of x [n x b].
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);

/// Row p of the result is self[src[p]] + nbr[dst[p]] - nbr[src[p]].
Tensor pair_combine(const Tensor& self, const Tensor& nbr, std::shared_ptr<const std::vector<int>> src,
                    std::shared_ptr<const std::vector<int>> dst);

Tensor gather_rows(const Tensor& x, std::shared_ptr<const std::vector<int>> index);

/// Column-wise max over rows sharing a segment id (-1 rows ignored). Empty
/// segments produce 0 and receive no gradient; ties go to the lowest row.
Tensor segment_max(const Tensor& x, std::shared_ptr<const std::vector<int>> segment, std::size_t segments);
/// Column-wise mean over rows sharing a segment id (-1 rows ignored); empty segments give 0.
Tensor segment_mean(const Tensor& x, std::shared_ptr<const std::vector<int>> segment, std::size_t segments);

Tensor concat_cols(const std::vector<Tensor>& parts);

struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;
};

/// Normalizes each column with batch statistics (biased variance). When
/// `running` is non-null its statistics are updated with `momentum`
/// (unbiased variance, as is conventional).
Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                        BatchNormStats* running = nullptr, double momentum = 0.1);
Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta, const BatchNormStats& running,
                       double eps);

/// Mean of squared differences against a constant target of the same size.
Tensor mse(const Tensor& prediction, std::span<const double> target);

}  // namespace gcnd::ad
