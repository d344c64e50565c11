#include "spamgraph/model.hpp"

#include <cmath>

#include <json.hpp>

#include "spamgraph/error.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {

void ModelConfig::validate() const {
  if (emb_dim == 0) throw InvalidArgument("model: embedding dimension must be positive");
  if (heads == 0 || layer_width == 0) throw InvalidArgument("model: heads and width must be positive");
  if (layer_width % heads != 0) {
    throw InvalidArgument("model: layer width " + std::to_string(layer_width) +
                          " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (layers == 0) throw InvalidArgument("model: at least one layer is required");
  if (!std::isfinite(prelu_slope_init)) throw InvalidArgument("model: bad PReLU slope");
}

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json obj;
  obj["emb_dim"] = c.emb_dim;
  obj["layer_width"] = c.layer_width;
  obj["heads"] = c.heads;
  obj["layers"] = c.layers;
  obj["prelu_slope_init"] = c.prelu_slope_init;
  obj["attention_scaling"] = c.attention_scaling;
  obj["use_graph"] = c.use_graph;
  obj["feature_dim"] = c.feature_dim;
  return obj.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    const auto obj = nlohmann::json::parse(text);
    ModelConfig c;
    c.emb_dim = obj.at("emb_dim").get<std::size_t>();
    c.layer_width = obj.at("layer_width").get<std::size_t>();
    c.heads = obj.at("heads").get<std::size_t>();
    c.layers = obj.at("layers").get<std::size_t>();
    c.prelu_slope_init = obj.at("prelu_slope_init").get<double>();
    c.attention_scaling = obj.at("attention_scaling").get<bool>();
    c.use_graph = obj.at("use_graph").get<bool>();
    c.feature_dim = obj.at("feature_dim").get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid model config: ") + e.what());
  }
}

template <class T>
ModelParams<T> shaped_params(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.emb_dim;
  const std::size_t width = c.layer_width;
  const std::size_t dh = c.head_width();
  ModelParams<T> p;
  p.risk_table = Matrix<T>(3, d);
  p.fuse_text = Matrix<T>(d, d);
  p.fuse_risk = Matrix<T>(d, d);
  p.fuse_out = Matrix<T>(d, d);
  p.prelu_slope = Matrix<T>(1, 1);
  if (c.use_graph) {
    p.layers.resize(c.layers);
    for (std::size_t l = 0; l < c.layers; ++l) {
      const std::size_t d_in = l == 0 ? c.input_width() : width;
      auto& layer = p.layers[l];
      layer.query.assign(c.heads, Matrix<T>(d_in, dh));
      layer.key.assign(c.heads, Matrix<T>(d_in, dh));
      layer.value.assign(c.heads, Matrix<T>(d_in, dh));
      layer.shortcut = Matrix<T>(d_in, width);
      layer.gate = Matrix<T>(3 * width, width);
    }
  }
  p.mlp_w1 = Matrix<T>(c.mlp_input_width(), width);
  p.mlp_b1 = Matrix<T>(1, width);
  p.mlp_w2 = Matrix<T>(width, 1);
  p.mlp_b2 = Matrix<T>(1, 1);
  return p;
}

template ModelParams<float> shaped_params<float>(const ModelConfig&);
template ModelParams<double> shaped_params<double>(const ModelConfig&);

std::size_t parameter_count(const ModelParams<float>& params) {
  std::size_t total = 0;
  visit_params(params, [&](const std::string&, const Matrix<float>& m) { total += m.size(); });
  return total;
}

ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto p = shaped_params<float>(config);
  Rng rng(seed);
  visit_params(p, [&](const std::string& name, Matrix<float>& m) {
    if (name == "risk_table") {
      for (auto& v : m.flat()) v = static_cast<float>(0.02 * rng.normal());
    } else if (name == "prelu.slope") {
      m(0, 0) = static_cast<float>(config.prelu_slope_init);
    } else if (name == "mlp.b1" || name == "mlp.b2") {
      m.fill(0.0f);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      for (auto& v : m.flat()) v = static_cast<float>(rng.uniform(-bound, bound));
    }
  });
  return p;
}

template <class T>
BoundParams bind_params(Tape<T>& tape, const ModelParams<T>& params, bool trainable) {
  BoundParams out;
  out.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    out.layers[l].query.resize(params.layers[l].query.size());
    out.layers[l].key.resize(params.layers[l].key.size());
    out.layers[l].value.resize(params.layers[l].value.size());
  }
  visit_param_pairs(params, out, [&](const std::string&, const Matrix<T>& m, Var& v) {
    v = trainable ? tape.parameter(m) : tape.borrow(m);
  });
  return out;
}

template BoundParams bind_params<float>(Tape<float>&, const ModelParams<float>&, bool);
template BoundParams bind_params<double>(Tape<double>&, const ModelParams<double>&, bool);

namespace {

std::vector<std::size_t> risk_rows(std::span<const Label> risk) {
  std::vector<std::size_t> rows(risk.size());
  for (std::size_t i = 0; i < risk.size(); ++i) rows[i] = static_cast<std::size_t>(risk[i]);
  return rows;
}

template <class T>
CsrView csr_of(const ReviewGraph& g) {
  return CsrView{g.offsets(), g.neighbor_array()};
}

template <class T>
Var record_fusion(Tape<T>& tape, const BoundParams& p, Var x, std::span<const Label> risk) {
  if (risk.size() != tape.value(x).rows()) {
    throw InvalidArgument("risk label count does not match embedding rows");
  }
  const Var risk_proj = tape.matmul(p.risk_table, p.fuse_risk);
  const Var risk_rows_var = tape.gather_rows(risk_proj, risk_rows(risk));
  const Var pre = tape.add(tape.matmul(x, p.fuse_text), risk_rows_var);
  const Var act = tape.prelu(pre, p.prelu_slope);
  return tape.add(x, tape.matmul(act, p.fuse_out));
}

template <class T>
Var record_layer(Tape<T>& tape, const BasicLayerParams<Var>& layer, Var h, const ReviewGraph& graph,
                 const ModelConfig& config, std::vector<Var>* heads_out = nullptr) {
  if (tape.value(h).rows() != graph.num_nodes()) {
    throw InvalidArgument("layer input rows do not match graph size");
  }
  const T scale = config.attention_scaling
                      ? T{1} / std::sqrt(static_cast<T>(config.head_width()))
                      : T{1};
  std::vector<Var> heads;
  for (std::size_t s = 0; s < layer.query.size(); ++s) {
    const Var q = tape.matmul(h, layer.query[s]);
    const Var k = tape.matmul(h, layer.key[s]);
    const Var v = tape.matmul(h, layer.value[s]);
    heads.push_back(tape.graph_attention(q, k, v, csr_of<T>(graph), scale));
  }
  if (heads_out) *heads_out = heads;
  const Var aggregated = heads.size() == 1 ? heads.front() : tape.concat_cols(heads);
  const Var shortcut = tape.matmul(h, layer.shortcut);
  const Var gate_in = tape.concat_cols({shortcut, aggregated, tape.sub(shortcut, aggregated)});
  const Var gate = tape.sigmoid(tape.matmul(gate_in, layer.gate));
  return tape.gate_blend(gate, shortcut, aggregated);
}

template <class T>
Var record_mlp(Tape<T>& tape, const BoundParams& p, Var h) {
  const Var hidden = tape.prelu(tape.add_row(tape.matmul(h, p.mlp_w1), p.mlp_b1), p.prelu_slope);
  return tape.add_row(tape.matmul(hidden, p.mlp_w2), p.mlp_b2);
}

template <class T>
void require_finite(const Matrix<T>& m, const char* what) {
  if (!all_finite(m)) throw NumericError(std::string(what) + " produced non-finite values");
}

}  // namespace

template <class T>
ForwardVars record_forward(Tape<T>& tape, const BoundParams& p, const ModelConfig& config,
                           const ForwardInputs<T>& inputs) {
  if (!inputs.embeddings) throw InvalidArgument("forward: embeddings are required");
  const auto& x = *inputs.embeddings;
  if (x.cols() != config.emb_dim) {
    throw InvalidArgument("forward: embedding width " + std::to_string(x.cols()) +
                          " does not match model emb_dim " + std::to_string(config.emb_dim));
  }
  ForwardVars out;
  out.fused = record_fusion(tape, p, tape.borrow(x), inputs.risk);
  Var h = out.fused;
  if (config.feature_dim > 0) {
    if (!inputs.features || inputs.features->cols() != config.feature_dim ||
        inputs.features->rows() != x.rows()) {
      throw InvalidArgument("forward: engineered features missing or mis-shaped");
    }
    h = tape.concat_cols({h, tape.borrow(*inputs.features)});
  }
  if (config.use_graph) {
    if (!inputs.graph) throw InvalidArgument("forward: graph required when use_graph is on");
    for (const auto& layer : p.layers) {
      h = record_layer(tape, layer, h, *inputs.graph, config);
      out.layer_outputs.push_back(h);
    }
  }
  out.logits = record_mlp(tape, p, h);
  out.probabilities = tape.sigmoid(out.logits);
  return out;
}

template ForwardVars record_forward<float>(Tape<float>&, const BoundParams&, const ModelConfig&,
                                           const ForwardInputs<float>&);
template ForwardVars record_forward<double>(Tape<double>&, const BoundParams&, const ModelConfig&,
                                            const ForwardInputs<double>&);

template <class T>
Matrix<T> fuse_node_embedding(const Matrix<T>& x, std::span<const Label> risk,
                              const ModelParams<T>& params) {
  if (x.cols() != params.fuse_text.rows()) {
    throw InvalidArgument("fuse: embedding width does not match fusion weights");
  }
  Tape<T> tape;
  const auto p = bind_params(tape, params, false);
  auto h = tape.value(record_fusion(tape, p, tape.borrow(x), risk));
  require_finite(h, "node fusion");
  return h;
}

template <class T>
Matrix<T> ggt_layer_forward(const Matrix<T>& h, const ReviewGraph& graph,
                            const LayerParams<T>& layer, const ModelConfig& config) {
  Tape<T> tape;
  BasicLayerParams<Var> bound;
  for (const auto& m : layer.query) bound.query.push_back(tape.borrow(m));
  for (const auto& m : layer.key) bound.key.push_back(tape.borrow(m));
  for (const auto& m : layer.value) bound.value.push_back(tape.borrow(m));
  bound.shortcut = tape.borrow(layer.shortcut);
  bound.gate = tape.borrow(layer.gate);
  return tape.value(record_layer(tape, bound, tape.borrow(h), graph, config));
}

template <class T>
std::vector<std::vector<T>> attention_coefficients(const Matrix<T>& h, const ReviewGraph& graph,
                                                   const LayerParams<T>& layer,
                                                   const ModelConfig& config) {
  Tape<T> tape;
  BasicLayerParams<Var> bound;
  for (const auto& m : layer.query) bound.query.push_back(tape.borrow(m));
  for (const auto& m : layer.key) bound.key.push_back(tape.borrow(m));
  for (const auto& m : layer.value) bound.value.push_back(tape.borrow(m));
  bound.shortcut = tape.borrow(layer.shortcut);
  bound.gate = tape.borrow(layer.gate);
  std::vector<Var> heads;
  record_layer(tape, bound, tape.borrow(h), graph, config, &heads);
  std::vector<std::vector<T>> out;
  for (Var v : heads) out.push_back(tape.attention_weights(v));
  return out;
}

template <class T>
Matrix<T> mlp_head(const Matrix<T>& h, const ModelParams<T>& params) {
  if (h.cols() != params.mlp_w1.rows()) {
    throw InvalidArgument("mlp: input width does not match first layer");
  }
  Tape<T> tape;
  const auto p = bind_params(tape, params, false);
  return tape.value(record_mlp(tape, p, tape.borrow(h)));
}

template <class T>
std::vector<T> forward(const ForwardInputs<T>& inputs, const ModelParams<T>& params,
                       const ModelConfig& config) {
  Tape<T> tape;
  const auto p = bind_params(tape, params, false);
  const auto vars = record_forward(tape, p, config, inputs);
  const auto& probs = tape.value(vars.probabilities);
  require_finite(probs, "forward pass");
  return {probs.data(), probs.data() + probs.size()};
}

#define SPAMGRAPH_INSTANTIATE(T)                                                              \
  template Matrix<T> fuse_node_embedding<T>(const Matrix<T>&, std::span<const Label>,         \
                                            const ModelParams<T>&);                           \
  template Matrix<T> ggt_layer_forward<T>(const Matrix<T>&, const ReviewGraph&,               \
                                          const LayerParams<T>&, const ModelConfig&);         \
  template std::vector<std::vector<T>> attention_coefficients<T>(                             \
      const Matrix<T>&, const ReviewGraph&, const LayerParams<T>&, const ModelConfig&);       \
  template Matrix<T> mlp_head<T>(const Matrix<T>&, const ModelParams<T>&);                    \
  template std::vector<T> forward<T>(const ForwardInputs<T>&, const ModelParams<T>&,          \
                                     const ModelConfig&);

SPAMGRAPH_INSTANTIATE(float)
SPAMGRAPH_INSTANTIATE(double)

#undef SPAMGRAPH_INSTANTIATE

}  // namespace spamgraph
