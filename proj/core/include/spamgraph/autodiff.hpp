#pragma once

// Tape-based reverse-mode differentiation over dense matrices, with a fused
// sparse attention operator for CSR neighborhoods.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spamgraph/error.hpp"
#include "spamgraph/tensor.hpp"

namespace spamgraph {

struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
};

// CSR neighborhood view used by the attention operator.
struct CsrView {
  std::span<const std::uint64_t> offsets;   // n + 1
  std::span<const std::uint32_t> neighbors;  // sorted per node
  std::size_t num_nodes() const { return offsets.size() - 1; }
};

template <class T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Constant input; never receives a gradient. `borrow` keeps a reference to
  // caller-owned storage that must outlive the tape.
  Var input(Matrix<T> value) { return push(std::move(value), false); }
  Var borrow(const Matrix<T>& value) {
    Var v = push(Matrix<T>{}, false);
    nodes_[v.id].external = &value;
    return v;
  }
  Var parameter(Matrix<T> value) { return push(std::move(value), true); }

  const Matrix<T>& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.external ? *n.external : n.value;
  }

  // Accumulated adjoint; a zero matrix when nothing flowed into the node.
  Matrix<T> grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (!n.grad.empty() || value(v).empty()) return n.grad;
    return Matrix<T>(value(v).rows(), value(v).cols());
  }

  // Attention coefficients recorded by graph_attention, one per CSR entry.
  const std::vector<T>& attention_weights(Var v) const { return nodes_.at(v.id).aux; }

  std::size_t size() const { return nodes_.size(); }

  // ------------------------------------------------------------------ ops

  Var matmul(Var a, Var b) {
    Var out = push(spamgraph::matmul(value(a), value(b)), needs(a) || needs(b));
    on_backward(out, [this, a, b](const Matrix<T>& g) {
      if (needs(a)) matmul_a_bt_acc(g, value(b), grad_ref(a));
      if (needs(b)) matmul_at_b_acc(value(a), g, grad_ref(b));
    });
    return out;
  }

  Var add(Var a, Var b) { return combine(a, b, T{1}); }
  Var sub(Var a, Var b) { return combine(a, b, T{-1}); }

  Var scale(Var a, T factor) {
    Matrix<T> out_value = value(a);
    for (auto& x : out_value.flat()) x *= factor;
    Var out = push(std::move(out_value), needs(a));
    on_backward(out, [this, a, factor](const Matrix<T>& g) {
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += factor * g.data()[i];
    });
    return out;
  }

  // a + broadcast of the 1xC row `bias` to every row.
  Var add_row(Var a, Var bias) {
    const auto& av = value(a);
    const auto& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
      throw InvalidArgument("add_row: bias " + shape_string(bv) + " vs " + shape_string(av));
    }
    Matrix<T> out_value = av;
    for (std::size_t i = 0; i < av.rows(); ++i) {
      for (std::size_t j = 0; j < av.cols(); ++j) out_value(i, j) += bv(0, j);
    }
    Var out = push(std::move(out_value), needs(a) || needs(bias));
    on_backward(out, [this, a, bias](const Matrix<T>& g) {
      if (needs(a)) add_inplace(grad_ref(a), g);
      if (needs(bias)) {
        auto& gb = grad_ref(bias);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
        }
      }
    });
    return out;
  }

  // PReLU with one shared slope (1x1). At u == 0 the negative branch is used.
  Var prelu(Var a, Var slope) {
    const auto& av = value(a);
    if (value(slope).size() != 1) throw InvalidArgument("prelu slope must be a scalar");
    const T s = value(slope).data()[0];
    Matrix<T> out_value(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) {
      const T u = av.data()[i];
      out_value.data()[i] = u > T{} ? u : s * u;
    }
    Var out = push(std::move(out_value), needs(a) || needs(slope));
    on_backward(out, [this, a, slope](const Matrix<T>& g) {
      const auto& av = value(a);
      const T s = value(slope).data()[0];
      T gs{};
      const bool want_a = needs(a);
      Matrix<T>* ga = want_a ? &grad_ref(a) : nullptr;
      for (std::size_t i = 0; i < av.size(); ++i) {
        const T u = av.data()[i];
        if (u > T{}) {
          if (want_a) ga->data()[i] += g.data()[i];
        } else {
          if (want_a) ga->data()[i] += s * g.data()[i];
          gs += u * g.data()[i];
        }
      }
      if (needs(slope)) grad_ref(slope).data()[0] += gs;
    });
    return out;
  }

  Var sigmoid(Var a) {
    const auto& av = value(a);
    Matrix<T> out_value(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out_value.data()[i] = stable_sigmoid(av.data()[i]);
    Var out = push(std::move(out_value), needs(a));
    on_backward(out, [this, a, out](const Matrix<T>& g) {
      const auto& y = value(out);
      auto& ga = grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T s = y.data()[i];
        ga.data()[i] += g.data()[i] * s * (T{1} - s);
      }
    });
    return out;
  }

  // Row i of the result is row index[i] of `table`.
  Var gather_rows(Var table, std::vector<std::size_t> index) {
    const auto& tv = value(table);
    Matrix<T> out_value(index.size(), tv.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (index[i] >= tv.rows()) throw InvalidArgument("gather_rows: index out of range");
      std::copy_n(tv.row(index[i]).data(), tv.cols(), out_value.row(i).data());
    }
    Var out = push(std::move(out_value), needs(table));
    on_backward(out, [this, table, index = std::move(index)](const Matrix<T>& g) {
      auto& gt = grad_ref(table);
      for (std::size_t i = 0; i < index.size(); ++i) {
        auto dst = gt.row(index[i]);
        auto src = g.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
    });
    return out;
  }

  Var concat_cols(std::vector<Var> parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
    const std::size_t rows = value(parts.front()).rows();
    std::size_t cols = 0;
    bool any = false;
    for (Var p : parts) {
      if (value(p).rows() != rows) throw InvalidArgument("concat_cols: row count mismatch");
      cols += value(p).cols();
      any = any || needs(p);
    }
    Matrix<T> out_value(rows, cols);
    std::size_t offset = 0;
    for (Var p : parts) {
      const auto& pv = value(p);
      for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(pv.row(i).data(), pv.cols(), out_value.row(i).data() + offset);
      }
      offset += pv.cols();
    }
    Var out = push(std::move(out_value), any);
    on_backward(out, [this, parts = std::move(parts)](const Matrix<T>& g) {
      std::size_t offset = 0;
      for (Var p : parts) {
        const std::size_t w = value(p).cols();
        if (needs(p)) {
          auto& gp = grad_ref(p);
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, offset + j);
          }
        }
        offset += w;
      }
    });
    return out;
  }

  // gate * a + (1 - gate) * b, elementwise.
  Var gate_blend(Var gate, Var a, Var b) {
    const auto& gv = value(gate);
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!gv.same_shape(av) || !gv.same_shape(bv)) throw InvalidArgument("gate_blend: shape mismatch");
    Matrix<T> out_value(gv.rows(), gv.cols());
    for (std::size_t i = 0; i < gv.size(); ++i) {
      const T w = gv.data()[i];
      out_value.data()[i] = w * av.data()[i] + (T{1} - w) * bv.data()[i];
    }
    Var out = push(std::move(out_value), needs(gate) || needs(a) || needs(b));
    on_backward(out, [this, gate, a, b](const Matrix<T>& g) {
      const auto& gv = value(gate);
      const auto& av = value(a);
      const auto& bv = value(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T w = gv.data()[i];
        const T d = g.data()[i];
        if (needs(gate)) grad_ref(gate).data()[i] += d * (av.data()[i] - bv.data()[i]);
        if (needs(a)) grad_ref(a).data()[i] += d * w;
        if (needs(b)) grad_ref(b).data()[i] += d * (T{1} - w);
      }
    });
    return out;
  }

  // out_i = sum_{j in N(i)} alpha_ij v_j with alpha_i = softmax_j(scale * q_i . k_j).
  // Neighbors are reduced in CSR order, so results do not depend on threading.
  Var graph_attention(Var q, Var k, Var v, CsrView graph, T scale) {
    const auto& qv = value(q);
    const auto& kv = value(k);
    const auto& vv = value(v);
    const std::size_t n = graph.num_nodes();
    if (qv.rows() != n || kv.rows() != n || vv.rows() != n || qv.cols() != kv.cols()) {
      throw InvalidArgument("graph_attention: shape mismatch");
    }
    const std::size_t dk = qv.cols();
    const std::size_t dv = vv.cols();
    std::vector<T> alpha(graph.neighbors.size());
    Matrix<T> out_value(n, dv);
    for (std::size_t i = 0; i < n; ++i) {
      const auto begin = graph.offsets[i];
      const auto end = graph.offsets[i + 1];
      if (begin == end) continue;
      T max_logit = -std::numeric_limits<T>::infinity();
      for (auto e = begin; e < end; ++e) {
        const auto j = graph.neighbors[e];
        T dot{};
        for (std::size_t c = 0; c < dk; ++c) dot += qv(i, c) * kv(j, c);
        alpha[e] = scale * dot;
        max_logit = std::max(max_logit, alpha[e]);
      }
      T total{};
      for (auto e = begin; e < end; ++e) {
        alpha[e] = std::exp(alpha[e] - max_logit);
        total += alpha[e];
      }
      for (auto e = begin; e < end; ++e) {
        alpha[e] /= total;
        const auto j = graph.neighbors[e];
        for (std::size_t c = 0; c < dv; ++c) out_value(i, c) += alpha[e] * vv(j, c);
      }
    }
    Var out = push(std::move(out_value), needs(q) || needs(k) || needs(v));
    nodes_[out.id].aux = alpha;
    on_backward(out, [this, q, k, v, graph, scale, out](const Matrix<T>& g) {
      const auto& alpha = nodes_[out.id].aux;
      const auto& qv = value(q);
      const auto& kv = value(k);
      const auto& vv = value(v);
      const std::size_t dk = qv.cols();
      const std::size_t dv = vv.cols();
      Matrix<T>* gq = needs(q) ? &grad_ref(q) : nullptr;
      Matrix<T>* gk = needs(k) ? &grad_ref(k) : nullptr;
      Matrix<T>* gv = needs(v) ? &grad_ref(v) : nullptr;
      std::vector<T> dalpha;
      for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
        const auto begin = graph.offsets[i];
        const auto end = graph.offsets[i + 1];
        dalpha.assign(end - begin, T{});
        T weighted{};
        for (auto e = begin; e < end; ++e) {
          const auto j = graph.neighbors[e];
          T d{};
          for (std::size_t c = 0; c < dv; ++c) {
            d += g(i, c) * vv(j, c);
            if (gv) (*gv)(j, c) += alpha[e] * g(i, c);
          }
          dalpha[e - begin] = d;
          weighted += alpha[e] * d;
        }
        for (auto e = begin; e < end; ++e) {
          const auto j = graph.neighbors[e];
          const T dlogit = scale * alpha[e] * (dalpha[e - begin] - weighted);
          if (dlogit == T{}) continue;
          for (std::size_t c = 0; c < dk; ++c) {
            if (gq) (*gq)(i, c) += dlogit * kv(j, c);
            if (gk) (*gk)(j, c) += dlogit * qv(i, c);
          }
        }
      }
    });
    return out;
  }

  // Mean binary cross-entropy over `subset` of an n x 1 probability column.
  // Probabilities are clamped to [clamp, 1 - clamp]; the clamp passes no
  // gradient.
  Var bce_mean(Var prob, std::vector<T> targets, std::vector<std::size_t> subset, T clamp) {
    const auto& pv = value(prob);
    if (subset.empty()) throw InvalidArgument("bce_loss: empty node subset");
    if (pv.cols() != 1 || targets.size() != pv.rows()) {
      throw InvalidArgument("bce_loss: expected an n x 1 probability column and n targets");
    }
    T total{};
    for (auto i : subset) {
      if (i >= pv.rows()) throw InvalidArgument("bce_loss: node index out of range");
      const T p = std::clamp(pv(i, 0), clamp, T{1} - clamp);
      const T y = targets[i];
      total -= y * std::log(p) + (T{1} - y) * std::log(T{1} - p);
    }
    const T m = static_cast<T>(subset.size());
    Var out = push(Matrix<T>(1, 1, total / m), needs(prob));
    on_backward(out, [this, prob, targets = std::move(targets), subset = std::move(subset), clamp,
                      m](const Matrix<T>& g) {
      const auto& pv = value(prob);
      auto& gp = grad_ref(prob);
      const T upstream = g(0, 0) / m;
      for (auto i : subset) {
        const T p = pv(i, 0);
        if (p < clamp || p > T{1} - clamp) continue;
        const T y = targets[i];
        gp(i, 0) += upstream * (-y / p + (T{1} - y) / (T{1} - p));
      }
    });
    return out;
  }

  // Seeds d(out)/d(out) = seed for a 1x1 output and runs the recorded
  // backward closures in reverse order.
  void backward(Var out, T seed = T{1}) {
    if (value(out).size() != 1) throw InvalidArgument("backward: output must be a scalar");
    for (auto& n : nodes_) n.grad = Matrix<T>{};
    grad_ref(out)(0, 0) = seed;
    for (std::size_t id = out.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
      n.backward(n.grad);
    }
  }

  static T stable_sigmoid(T x) {
    if (x >= T{}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
  }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* external = nullptr;
    Matrix<T> grad;
    bool requires_grad = false;
    std::function<void(const Matrix<T>&)> backward;
    std::vector<T> aux;
  };

  Var push(Matrix<T> value, bool requires_grad) {
    if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
      throw Error("tape is full");
    }
    nodes_.push_back(Node{std::move(value), nullptr, {}, requires_grad, {}, {}});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  bool needs(Var v) const { return nodes_[v.id].requires_grad; }

  Matrix<T>& grad_ref(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Matrix<T>(value(v).rows(), value(v).cols());
    return n.grad;
  }

  template <class F>
  void on_backward(Var out, F&& fn) {
    if (nodes_[out.id].requires_grad) nodes_[out.id].backward = std::forward<F>(fn);
  }

  Var combine(Var a, Var b, T sign) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!av.same_shape(bv)) {
      throw InvalidArgument("elementwise op shape mismatch: " + shape_string(av) + " vs " +
                            shape_string(bv));
    }
    Matrix<T> out_value = av;
    for (std::size_t i = 0; i < av.size(); ++i) out_value.data()[i] += sign * bv.data()[i];
    Var out = push(std::move(out_value), needs(a) || needs(b));
    on_backward(out, [this, a, b, sign](const Matrix<T>& g) {
      if (needs(a)) add_inplace(grad_ref(a), g);
      if (needs(b)) {
        auto& gb = grad_ref(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += sign * g.data()[i];
      }
    });
    return out;
  }

  std::vector<Node> nodes_;
};

}  // namespace spamgraph
