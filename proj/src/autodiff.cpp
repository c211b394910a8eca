#include "gcnd/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace gcnd::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

std::size_t cols_of(const Node& n) { return n.shape.size() > 1 ? n.shape[1] : 1; }

ConstMap view(const Node& n) {
  return ConstMap(n.value.data(), static_cast<Eigen::Index>(n.shape.at(0)), static_cast<Eigen::Index>(cols_of(n)));
}

Map grad_view(Node& n) {
  n.ensure_grad();
  return Map(n.grad.data(), static_cast<Eigen::Index>(n.shape.at(0)), static_cast<Eigen::Index>(cols_of(n)));
}

ConstMap out_grad(const Node& n) {
  return ConstMap(n.grad.data(), static_cast<Eigen::Index>(n.shape.at(0)), static_cast<Eigen::Index>(cols_of(n)));
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) : node_(std::make_shared<Node>()) {
  if (numel(shape) != data.size()) throw std::invalid_argument("Tensor: data length does not match shape");
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from_node(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item() on a non-scalar tensor");
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  if (!node_->grad.empty()) return node_->grad;
  zero_grad_cache_.assign(size(), 0.0);
  return zero_grad_cache_;
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

void Tensor::backward() const {
  if (size() != 1) throw std::logic_error("backward() requires a scalar tensor");
  if (!node_->requires_grad) throw std::logic_error("backward() on a tensor that does not require grad");

  // iterative post-order DFS over the grad-requiring subgraph
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const Tensor& p : parents) {
    node->requires_grad = node->requires_grad || p.requires_grad();
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

Tensor matmul_nt(const Tensor& x, const Tensor& w) {
  require(x.shape().size() == 2 && w.shape().size() == 2 && x.cols() == w.cols(), "matmul_nt");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto b = static_cast<Eigen::Index>(w.rows());
  std::vector<double> out(static_cast<std::size_t>(n * b));
  Map(out.data(), n, b).noalias() = view(*x.node()) * view(*w.node()).transpose();
  return make_result({x.rows(), w.rows()}, std::move(out), {x, w}, [](Node& self) {
    Node& xn = *self.parents[0];
    Node& wn = *self.parents[1];
    const ConstMap g = out_grad(self);
    if (xn.requires_grad) grad_view(xn).noalias() += g * view(wn);
    if (wn.requires_grad) grad_view(wn).noalias() += g.transpose() * view(xn);
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require(bias.size() == x.cols(), "add_bias");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bd = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bd[c];
  return make_result(x.shape(), std::move(out), {x, bias}, [rows, cols](Node& self) {
    Node& xn = *self.parents[0];
    Node& bn = *self.parents[1];
    if (xn.requires_grad) {
      auto& g = xn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
    }
  });
}

namespace {

template <typename Forward, typename GradA, typename GradB>
Tensor elementwise(const Tensor& a, const Tensor& b, Forward f, GradA ga, GradB gb, const char* name) {
  require(a.shape() == b.shape(), name);
  std::vector<double> out(a.size());
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(ad[i], bd[i]);
  return make_result(a.shape(), std::move(out), {a, b}, [ga, gb](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ga(an.value[i], bn.value[i]);
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * gb(an.value[i], bn.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; }, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; }, "mul");
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s}, {x}, [](Node& self) {
    Node& xn = *self.parents[0];
    auto& g = xn.ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(x.size());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > 0.0 ? xd[i] : slope * xd[i];
  return make_result(x.shape(), std::move(out), {x}, [slope](Node& self) {
    Node& xn = *self.parents[0];
    auto& g = xn.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (xn.value[i] > 0.0 ? 1.0 : slope);
  });
}

Tensor pair_combine(const Tensor& self_part, const Tensor& nbr_part, std::shared_ptr<const std::vector<int>> src,
                    std::shared_ptr<const std::vector<int>> dst) {
  require(self_part.shape() == nbr_part.shape() && src->size() == dst->size(), "pair_combine");
  const std::size_t cols = self_part.cols();
  const std::size_t pairs = src->size();
  std::vector<double> out(pairs * cols);
  const auto s = self_part.data();
  const auto n = nbr_part.data();
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = static_cast<std::size_t>((*src)[p]) * cols;
    const std::size_t j = static_cast<std::size_t>((*dst)[p]) * cols;
    double* o = out.data() + p * cols;
    for (std::size_t c = 0; c < cols; ++c) o[c] = s[i + c] + n[j + c] - n[i + c];
  }
  return make_result({pairs, cols}, std::move(out), {self_part, nbr_part}, [src, dst, cols](Node& self) {
    Node& sn = *self.parents[0];
    Node& nn = *self.parents[1];
    const std::size_t pairs = src->size();
    if (sn.requires_grad) {
      auto& g = sn.ensure_grad();
      for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t i = static_cast<std::size_t>((*src)[p]) * cols;
        const double* go = self.grad.data() + p * cols;
        for (std::size_t c = 0; c < cols; ++c) g[i + c] += go[c];
      }
    }
    if (nn.requires_grad) {
      auto& g = nn.ensure_grad();
      for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t i = static_cast<std::size_t>((*src)[p]) * cols;
        const std::size_t j = static_cast<std::size_t>((*dst)[p]) * cols;
        const double* go = self.grad.data() + p * cols;
        for (std::size_t c = 0; c < cols; ++c) {
          g[j + c] += go[c];
          g[i + c] -= go[c];
        }
      }
    }
  });
}

Tensor gather_rows(const Tensor& x, std::shared_ptr<const std::vector<int>> index) {
  const std::size_t cols = x.cols();
  std::vector<double> out(index->size() * cols);
  const auto xd = x.data();
  for (std::size_t p = 0; p < index->size(); ++p) {
    const auto r = static_cast<std::size_t>((*index)[p]);
    require(r < x.rows(), "gather_rows index");
    std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, out.begin() + static_cast<std::ptrdiff_t>(p * cols));
  }
  return make_result({index->size(), cols}, std::move(out), {x}, [index, cols](Node& self) {
    Node& xn = *self.parents[0];
    auto& g = xn.ensure_grad();
    for (std::size_t p = 0; p < index->size(); ++p) {
      const auto r = static_cast<std::size_t>((*index)[p]);
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[p * cols + c];
    }
  });
}

Tensor segment_max(const Tensor& x, std::shared_ptr<const std::vector<int>> segment, std::size_t segments) {
  require(segment->size() == x.rows(), "segment_max");
  const std::size_t cols = x.cols();
  std::vector<double> out(segments * cols, -std::numeric_limits<double>::infinity());
  auto arg = std::make_shared<std::vector<int>>(segments * cols, -1);
  const auto xd = x.data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int s = (*segment)[r];
    if (s < 0) continue;
    const std::size_t o = static_cast<std::size_t>(s) * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = xd[r * cols + c];
      if ((*arg)[o + c] < 0 || v > out[o + c]) {
        out[o + c] = v;
        (*arg)[o + c] = static_cast<int>(r);
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if ((*arg)[i] < 0) out[i] = 0.0;
  }
  return make_result({segments, cols}, std::move(out), {x}, [arg, cols](Node& self) {
    Node& xn = *self.parents[0];
    auto& g = xn.ensure_grad();
    for (std::size_t i = 0; i < arg->size(); ++i) {
      const int r = (*arg)[i];
      if (r >= 0) g[static_cast<std::size_t>(r) * cols + i % cols] += self.grad[i];
    }
  });
}

Tensor segment_mean(const Tensor& x, std::shared_ptr<const std::vector<int>> segment, std::size_t segments) {
  require(segment->size() == x.rows(), "segment_mean");
  const std::size_t cols = x.cols();
  std::vector<double> out(segments * cols, 0.0);
  auto count = std::make_shared<std::vector<double>>(segments, 0.0);
  const auto xd = x.data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int s = (*segment)[r];
    if (s < 0) continue;
    (*count)[s] += 1.0;
    for (std::size_t c = 0; c < cols; ++c) out[static_cast<std::size_t>(s) * cols + c] += xd[r * cols + c];
  }
  for (std::size_t s = 0; s < segments; ++s) {
    if ((*count)[s] > 0)
      for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] /= (*count)[s];
  }
  return make_result({segments, cols}, std::move(out), {x}, [segment, count, cols](Node& self) {
    Node& xn = *self.parents[0];
    auto& g = xn.ensure_grad();
    for (std::size_t r = 0; r < segment->size(); ++r) {
      const int s = (*segment)[r];
      if (s < 0) continue;
      const double inv = 1.0 / (*count)[s];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[static_cast<std::size_t>(s) * cols + c] * inv;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require(p.rows() == rows, "concat_cols rows");
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t c = parts[k].cols();
    const auto d = parts[k].data();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(d.data() + r * c, c, out.data() + r * total + offsets[k]);
  }
  return make_result({rows, total}, std::move(out), parts, [offsets, rows, total](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& pn = *self.parents[k];
      if (!pn.requires_grad) continue;
      const std::size_t c = cols_of(pn);
      auto& g = pn.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r * total + offsets[k] + j];
    }
  });
}

Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps, BatchNormStats* running,
                        double momentum) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  require(gamma.size() == cols && beta.size() == cols && rows > 0, "batch_norm_train");
  std::vector<double> mean(cols, 0.0), var(cols, 0.0);
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) mean[c] += xd[r * cols + c];
  for (double& m : mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = xd[r * cols + c] - mean[c];
      var[c] += d * d;
    }
  for (double& v : var) v /= static_cast<double>(rows);

  auto inv_std = std::make_shared<std::vector<double>>(cols);
  for (std::size_t c = 0; c < cols; ++c) (*inv_std)[c] = 1.0 / std::sqrt(var[c] + eps);
  auto xhat = std::make_shared<std::vector<double>>(rows * cols);
  std::vector<double> out(rows * cols);
  const auto gd = gamma.data();
  const auto bd = beta.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      (*xhat)[i] = (xd[i] - mean[c]) * (*inv_std)[c];
      out[i] = gd[c] * (*xhat)[i] + bd[c];
    }

  if (running != nullptr) {
    if (running->mean.size() != cols) running->mean.assign(cols, 0.0);
    if (running->var.size() != cols) running->var.assign(cols, 1.0);
    const double unbias = rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
    for (std::size_t c = 0; c < cols; ++c) {
      running->mean[c] = (1.0 - momentum) * running->mean[c] + momentum * mean[c];
      running->var[c] = (1.0 - momentum) * running->var[c] + momentum * var[c] * unbias;
    }
  }

  return make_result(x.shape(), std::move(out), {x, gamma, beta}, [xhat, inv_std, rows, cols](Node& self) {
    Node& xn = *self.parents[0];
    Node& gn = *self.parents[1];
    Node& bn = *self.parents[2];
    std::vector<double> sum_dy(cols, 0.0), sum_dy_xhat(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        sum_dy[c] += self.grad[i];
        sum_dy_xhat[c] += self.grad[i] * (*xhat)[i];
      }
    if (gn.requires_grad) {
      auto& g = gn.ensure_grad();
      for (std::size_t c = 0; c < cols; ++c) g[c] += sum_dy_xhat[c];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t c = 0; c < cols; ++c) g[c] += sum_dy[c];
    }
    if (xn.requires_grad) {
      auto& g = xn.ensure_grad();
      const double inv_n = 1.0 / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          g[i] += gn.value[c] * (*inv_std)[c] *
                  (self.grad[i] - inv_n * sum_dy[c] - (*xhat)[i] * inv_n * sum_dy_xhat[c]);
        }
    }
  });
}

Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta, const BatchNormStats& running,
                       double eps) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  require(gamma.size() == cols && beta.size() == cols && running.mean.size() == cols && running.var.size() == cols,
          "batch_norm_eval");
  auto inv_std = std::make_shared<std::vector<double>>(cols);
  for (std::size_t c = 0; c < cols; ++c) (*inv_std)[c] = 1.0 / std::sqrt(running.var[c] + eps);
  auto xhat = std::make_shared<std::vector<double>>(rows * cols);
  std::vector<double> out(rows * cols);
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      (*xhat)[i] = (xd[i] - running.mean[c]) * (*inv_std)[c];
      out[i] = gd[c] * (*xhat)[i] + bd[c];
    }
  return make_result(x.shape(), std::move(out), {x, gamma, beta}, [xhat, inv_std, rows, cols](Node& self) {
    Node& xn = *self.parents[0];
    Node& gn = *self.parents[1];
    Node& bn = *self.parents[2];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        if (xn.requires_grad) xn.ensure_grad()[i] += self.grad[i] * gn.value[c] * (*inv_std)[c];
        if (gn.requires_grad) gn.ensure_grad()[c] += self.grad[i] * (*xhat)[i];
        if (bn.requires_grad) bn.ensure_grad()[c] += self.grad[i];
      }
  });
}

Tensor mse(const Tensor& prediction, std::span<const double> target) {
  require(prediction.size() == target.size() && !target.empty(), "mse");
  auto diff = std::make_shared<std::vector<double>>(target.size());
  double s = 0.0;
  const auto pd = prediction.data();
  for (std::size_t i = 0; i < target.size(); ++i) {
    (*diff)[i] = pd[i] - target[i];
    s += (*diff)[i] * (*diff)[i];
  }
  const double n = static_cast<double>(target.size());
  return make_result({1}, {s / n}, {prediction}, [diff, n](Node& self) {
    Node& pn = *self.parents[0];
    auto& g = pn.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * 2.0 * (*diff)[i] / n;
  });
}

}  // namespace gcnd::ad
