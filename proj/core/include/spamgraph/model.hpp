#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spamgraph/autodiff.hpp"
#include "spamgraph/graph.hpp"
#include "spamgraph/records.hpp"
#include "spamgraph/tensor.hpp"

namespace spamgraph {

struct ModelConfig {
  std::size_t emb_dim = 0;       // text embedding width
  std::size_t layer_width = 96;  // heads * head width
  std::size_t heads = 3;
  std::size_t layers = 2;
  double prelu_slope_init = 0.25;
  bool attention_scaling = false;  // divide logits by sqrt(head width)
  bool use_graph = true;           // off: MLP reads the fused embedding directly
  std::size_t feature_dim = 0;     // engineered features concatenated after fusion

  std::size_t head_width() const { return layer_width / heads; }
  // Width of the matrix entering the first transformer layer (or the MLP
  // when use_graph is off).
  std::size_t input_width() const { return emb_dim + feature_dim; }
  std::size_t mlp_input_width() const { return use_graph ? layer_width : input_width(); }
  void validate() const;
};

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

// Per-layer attention and gate weights. `M` is Matrix<T> for values or Var
// for tensors bound to a tape.
template <class M>
struct BasicLayerParams {
  std::vector<M> query;  // per head, d_in x d_h
  std::vector<M> key;
  std::vector<M> value;
  M shortcut;  // d_in x d_L
  M gate;      // 3 d_L x d_L
};

template <class M>
struct BasicModelParams {
  M risk_table;   // 3 x d_emb, rows: normal, fraud, unknown
  M fuse_text;    // d_emb x d_emb, applied to the text embedding
  M fuse_risk;    // d_emb x d_emb, applied to the risk embedding
  M fuse_out;     // d_emb x d_emb, projects the activation back
  M prelu_slope;  // 1 x 1, shared by the fusion and the MLP hidden layer
  std::vector<BasicLayerParams<M>> layers;
  M mlp_w1;  // d_mlp_in x d_L
  M mlp_b1;  // 1 x d_L
  M mlp_w2;  // d_L x 1
  M mlp_b2;  // 1 x 1
};

template <class T>
using LayerParams = BasicLayerParams<Matrix<T>>;
template <class T>
using ModelParams = BasicModelParams<Matrix<T>>;
using BoundParams = BasicModelParams<Var>;

// Visits every tensor with its canonical name, in canonical order. This order
// defines the checkpoint layout and the flattening used by the optimizer.
template <class Params, class F>
void visit_params(Params& p, F&& f) {
  f("risk_table", p.risk_table);
  f("fuse.text", p.fuse_text);
  f("fuse.risk", p.fuse_risk);
  f("fuse.out", p.fuse_out);
  f("prelu.slope", p.prelu_slope);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string prefix = "layers." + std::to_string(l) + ".";
    for (std::size_t s = 0; s < layer.query.size(); ++s) {
      f(prefix + "query." + std::to_string(s), layer.query[s]);
    }
    for (std::size_t s = 0; s < layer.key.size(); ++s) {
      f(prefix + "key." + std::to_string(s), layer.key[s]);
    }
    for (std::size_t s = 0; s < layer.value.size(); ++s) {
      f(prefix + "value." + std::to_string(s), layer.value[s]);
    }
    f(prefix + "shortcut", layer.shortcut);
    f(prefix + "gate", layer.gate);
  }
  f("mlp.w1", p.mlp_w1);
  f("mlp.b1", p.mlp_b1);
  f("mlp.w2", p.mlp_w2);
  f("mlp.b2", p.mlp_b2);
}

// Pairwise visit of two parameter sets with identical structure.
template <class A, class B, class F>
void visit_param_pairs(A& a, B& b, F&& f) {
  std::vector<std::string> names;
  std::vector<decltype(&a.risk_table)> lhs;
  visit_params(a, [&](const std::string& name, auto& m) {
    names.push_back(name);
    lhs.push_back(&m);
  });
  std::size_t k = 0;
  visit_params(b, [&](const std::string&, auto& m) {
    if (k >= lhs.size()) throw InvalidArgument("parameter sets differ in structure");
    f(names[k], *lhs[k], m);
    ++k;
  });
  if (k != lhs.size()) throw InvalidArgument("parameter sets differ in structure");
}

template <class U, class T>
ModelParams<U> cast_params(const ModelParams<T>& src) {
  ModelParams<U> out;
  out.layers.resize(src.layers.size());
  for (std::size_t l = 0; l < src.layers.size(); ++l) {
    out.layers[l].query.resize(src.layers[l].query.size());
    out.layers[l].key.resize(src.layers[l].key.size());
    out.layers[l].value.resize(src.layers[l].value.size());
  }
  visit_param_pairs(src, out, [](const std::string&, const Matrix<T>& s, Matrix<U>& d) {
    d = s.template cast<U>();
  });
  return out;
}

// Zero tensors with the same shapes as `like`.
template <class T>
ModelParams<T> zeros_like(const ModelParams<T>& like) {
  ModelParams<T> out = like;
  visit_params(out, [](const std::string&, Matrix<T>& m) { m.fill(T{}); });
  return out;
}

// Allocates zero tensors with the shapes dictated by the config.
template <class T>
ModelParams<T> shaped_params(const ModelConfig& config);

std::size_t parameter_count(const ModelParams<float>& params);

// Glorot-uniform weights, zero biases, N(0, 0.02^2) risk rows, PReLU slope
// from the config. Deterministic per seed.
ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed);

// Risk table row per node: Label::normal, Label::spam or Label::unknown.
using RiskLabels = std::vector<Label>;

// H = X + PReLU(X fuse_text + Z[risk] fuse_risk) fuse_out
template <class T>
Matrix<T> fuse_node_embedding(const Matrix<T>& x, std::span<const Label> risk,
                              const ModelParams<T>& params);

// One gated graph transformer layer.
template <class T>
Matrix<T> ggt_layer_forward(const Matrix<T>& h, const ReviewGraph& graph,
                            const LayerParams<T>& layer, const ModelConfig& config);

// Attention coefficients of every head of `layer` for input `h`, one vector
// per head aligned with the graph's CSR entries.
template <class T>
std::vector<std::vector<T>> attention_coefficients(const Matrix<T>& h, const ReviewGraph& graph,
                                                   const LayerParams<T>& layer,
                                                   const ModelConfig& config);

// n x 1 logits: W2 PReLU(W1 h + b1) + b2
template <class T>
Matrix<T> mlp_head(const Matrix<T>& h, const ModelParams<T>& params);

template <class T>
struct ForwardInputs {
  const Matrix<T>* embeddings = nullptr;  // X, n x d_emb
  const Matrix<T>* features = nullptr;    // F, n x feature_dim, optional
  std::span<const Label> risk;            // n risk rows
  const ReviewGraph* graph = nullptr;     // required when use_graph is on
};

// Vars produced by one forward pass recorded on a tape.
struct ForwardVars {
  Var fused;
  std::vector<Var> layer_outputs;
  Var logits;
  Var probabilities;
};

// Registers every tensor as a trainable leaf (or, with trainable = false, as
// a borrowed constant) on the tape.
template <class T>
BoundParams bind_params(Tape<T>& tape, const ModelParams<T>& params, bool trainable = true);

template <class T>
ForwardVars record_forward(Tape<T>& tape, const BoundParams& params, const ModelConfig& config,
                           const ForwardInputs<T>& inputs);

// Probabilities in (0, 1), one per node. Throws NumericError on NaN.
template <class T>
std::vector<T> forward(const ForwardInputs<T>& inputs, const ModelParams<T>& params,
                       const ModelConfig& config);

}  // namespace spamgraph
