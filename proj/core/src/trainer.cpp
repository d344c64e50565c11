#include "spamgraph/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "spamgraph/error.hpp"
#include "spamgraph/metrics.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be at least 1");
  if (batch_size < 1) throw InvalidArgument("train: batch size must be at least 1");
  if (!(lr > 0.0)) throw InvalidArgument("train: learning rate must be positive");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw InvalidArgument("train: Adam betas must lie in [0, 1)");
  }
}

double bce_loss(std::span<const double> probabilities, std::span<const Label> targets,
                std::span<const std::size_t> subset) {
  if (subset.empty()) throw InvalidArgument("bce_loss: empty node subset");
  if (targets.size() != probabilities.size()) {
    throw InvalidArgument("bce_loss: probabilities and targets differ in length");
  }
  double total = 0.0;
  for (auto i : subset) {
    if (i >= probabilities.size()) throw InvalidArgument("bce_loss: node index out of range");
    if (targets[i] == Label::unknown) throw InvalidArgument("bce_loss: target of node " + std::to_string(i) + " is unknown");
    const double p = std::clamp(probabilities[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = targets[i] == Label::spam ? 1.0 : 0.0;
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(subset.size());
}

RiskLabels build_risk_labels(const SplitAssignment& split, std::span<const Label> labels,
                             std::span<const std::size_t> batch, RiskMode mode) {
  if (labels.size() != split.size()) {
    throw InvalidArgument("risk labels: label count does not match split size");
  }
  RiskLabels risk(labels.size(), Label::unknown);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (split.tags[i] == SplitTag::train) risk[i] = labels[i];
  }
  for (auto i : batch) {
    if (i >= labels.size() || split.tags[i] != SplitTag::train) {
      throw InvalidArgument("risk labels: batch contains non-train node " + std::to_string(i));
    }
    if (mode == RiskMode::train) risk[i] = Label::unknown;
  }
  return risk;
}

template <class T>
GradientResult<T> compute_gradients(const ModelParams<T>& params, const ModelConfig& config,
                                    const ForwardInputs<T>& inputs, std::span<const Label> targets,
                                    std::span<const std::size_t> subset, T loss_scale) {
  Tape<T> tape;
  const auto bound = bind_params(tape, params, true);
  const auto vars = record_forward(tape, bound, config, inputs);
  const auto& probs = tape.value(vars.probabilities);
  if (targets.size() != probs.rows()) throw InvalidArgument("gradients: target count mismatch");

  std::vector<T> y(targets.size(), T{});
  for (auto i : subset) {
    if (i >= targets.size() || targets[i] == Label::unknown) {
      throw InvalidArgument("gradients: subset node without a known target");
    }
    y[i] = targets[i] == Label::spam ? T{1} : T{0};
  }
  const Var loss = tape.bce_mean(vars.probabilities, std::move(y),
                                 std::vector<std::size_t>(subset.begin(), subset.end()),
                                 static_cast<T>(kProbabilityClamp));
  tape.backward(loss, loss_scale);

  GradientResult<T> result;
  result.loss = tape.value(loss)(0, 0) * loss_scale;
  result.probabilities.assign(probs.data(), probs.data() + probs.size());
  result.grads = zeros_like(params);
  visit_param_pairs(bound, result.grads, [&](const std::string& name, const Var& v, Matrix<T>& g) {
    g = tape.grad(v);
    if (!all_finite(g)) throw NumericError("non-finite gradient for '" + name + "'");
  });
  return result;
}

template GradientResult<float> compute_gradients<float>(const ModelParams<float>&,
                                                        const ModelConfig&,
                                                        const ForwardInputs<float>&,
                                                        std::span<const Label>,
                                                        std::span<const std::size_t>, float);
template GradientResult<double> compute_gradients<double>(const ModelParams<double>&,
                                                          const ModelConfig&,
                                                          const ForwardInputs<double>&,
                                                          std::span<const Label>,
                                                          std::span<const std::size_t>, double);

template <class T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               std::uint64_t t, const TrainConfig& config) {
  if (t == 0) throw InvalidArgument("adam: step index is 1-based");
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));

  std::vector<Matrix<T>*> theta, m, v;
  std::vector<const Matrix<T>*> g;
  visit_params(params, [&](const std::string&, Matrix<T>& x) { theta.push_back(&x); });
  visit_params(grads, [&](const std::string&, const Matrix<T>& x) { g.push_back(&x); });
  visit_params(state.first_moment, [&](const std::string&, Matrix<T>& x) { m.push_back(&x); });
  visit_params(state.second_moment, [&](const std::string&, Matrix<T>& x) { v.push_back(&x); });
  if (g.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size()) {
    throw InvalidArgument("adam: parameter, gradient and state structures differ");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!theta[k]->same_shape(*g[k]) || !theta[k]->same_shape(*m[k]) ||
        !theta[k]->same_shape(*v[k])) {
      throw InvalidArgument("adam: tensor shape mismatch");
    }
    for (std::size_t i = 0; i < theta[k]->size(); ++i) {
      const double gi = static_cast<double>(g[k]->data()[i]);
      const double mi = b1 * static_cast<double>(m[k]->data()[i]) + (1.0 - b1) * gi;
      const double vi = b2 * static_cast<double>(v[k]->data()[i]) + (1.0 - b2) * gi * gi;
      m[k]->data()[i] = static_cast<T>(mi);
      v[k]->data()[i] = static_cast<T>(vi);
      const double update =
          config.lr * (mi / correction1) / (std::sqrt(vi / correction2) + config.adam_eps);
      theta[k]->data()[i] = static_cast<T>(static_cast<double>(theta[k]->data()[i]) - update);
    }
  }
}

template void adam_step<float>(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&,
                               std::uint64_t, const TrainConfig&);
template void adam_step<double>(ModelParams<double>&, const ModelParams<double>&,
                                AdamState<double>&, std::uint64_t, const TrainConfig&);

double clip_global_norm(ModelParams<float>& grads, double max_norm) {
  double sq = 0.0;
  visit_params(grads, [&](const std::string&, const Matrix<float>& g) {
    for (float x : g.flat()) sq += static_cast<double>(x) * static_cast<double>(x);
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto factor = static_cast<float>(max_norm / norm);
    visit_params(grads, [&](const std::string&, Matrix<float>& g) {
      for (auto& x : g.flat()) x *= factor;
    });
  }
  return norm;
}

std::string epoch_log_json(const EpochLog& row) {
  nlohmann::ordered_json obj;
  obj["epoch"] = row.epoch;
  obj["train_loss"] = row.train_loss;
  obj["valid_auc"] = row.valid_auc ? nlohmann::ordered_json(*row.valid_auc) : nullptr;
  return obj.dump();
}

namespace {

void check_data(const TrainData& data, const ModelConfig& config) {
  if (!data.embeddings || !data.split) throw InvalidArgument("train: embeddings and split are required");
  const std::size_t n = data.embeddings->rows();
  if (data.split->size() != n || data.labels.size() != n) {
    throw InvalidArgument("train: embeddings, split and labels must cover the same nodes");
  }
  if (config.use_graph && (!data.graph || data.graph->num_nodes() != n)) {
    throw InvalidArgument("train: graph missing or sized differently from embeddings");
  }
  if (config.feature_dim > 0 && (!data.features || data.features->rows() != n)) {
    throw InvalidArgument("train: engineered features missing or mis-sized");
  }
}

std::optional<double> subset_auc(std::span<const float> probs, std::span<const Label> labels,
                                 std::span<const std::size_t> nodes) {
  std::vector<double> scores;
  std::vector<int> ys;
  for (auto i : nodes) {
    if (labels[i] == Label::unknown) continue;
    scores.push_back(probs[i]);
    ys.push_back(labels[i] == Label::spam ? 1 : 0);
  }
  const auto pos = std::count(ys.begin(), ys.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(ys.size())) return std::nullopt;
  return auc(scores, ys);
}

}  // namespace

TrainResult train(const TrainData& data, const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  model_config.validate();
  train_config.validate();
  check_data(data, model_config);

  const auto& split = *data.split;
  std::vector<std::size_t> train_nodes;
  for (auto i : split.nodes(SplitTag::train)) {
    if (data.labels[i] != Label::unknown) train_nodes.push_back(i);
  }
  if (train_nodes.empty()) throw InvalidArgument("train: no labeled training nodes");
  const auto valid_nodes = split.nodes(SplitTag::valid);

  auto params = init_params(model_config, derive_seed(train_config.seed, 1));
  auto adam = make_adam_state(params);
  Rng shuffler(derive_seed(train_config.seed, 2));

  ForwardInputs<float> inputs;
  inputs.embeddings = data.embeddings;
  inputs.features = model_config.feature_dim > 0 ? data.features : nullptr;
  inputs.graph = data.graph;

  TrainResult result;
  result.best = {model_config, params};
  std::uint64_t step = 0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    shuffler.shuffle(train_nodes.begin(), train_nodes.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    bool diverged = false;
    for (std::size_t first = 0; first < train_nodes.size(); first += train_config.batch_size) {
      const std::size_t last = std::min(train_nodes.size(), first + train_config.batch_size);
      const std::span<const std::size_t> batch(train_nodes.data() + first, last - first);
      const auto risk = build_risk_labels(split, data.labels, batch, RiskMode::train);
      inputs.risk = risk;
      GradientResult<float> g;
      try {
        g = compute_gradients(params, model_config, inputs, data.labels, batch);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(g.loss)) {
        diverged = true;
        break;
      }
      clip_global_norm(g.grads, train_config.clip_norm);
      adam_step(params, g.grads, adam, ++step, train_config);
      loss_sum += g.loss;
      ++batches;
    }
    if (diverged) {
      result.diverged = true;
      break;
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batches));
    const auto eval_risk = build_risk_labels(split, data.labels, {}, RiskMode::eval);
    inputs.risk = eval_risk;
    std::vector<float> probs;
    try {
      probs = forward(inputs, params, model_config);
    } catch (const NumericError&) {
      result.diverged = true;
      break;
    }
    row.valid_auc = subset_auc(probs, data.labels, valid_nodes);
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);

    if (row.valid_auc) {
      if (!result.best_valid_auc || *row.valid_auc > *result.best_valid_auc) {
        result.best_valid_auc = row.valid_auc;
        result.best_epoch = epoch;
        result.best.params = params;
        since_best = 0;
      } else if (train_config.early_stop_patience > 0 &&
                 ++since_best >= train_config.early_stop_patience) {
        result.stopped_early = true;
        break;
      }
    } else if (!result.best_valid_auc) {
      // No usable validation signal yet: keep the latest parameters.
      result.best.params = params;
    }
  }
  return result;
}

std::vector<double> score_nodes(const Checkpoint& checkpoint, const TrainData& data) {
  check_data(data, checkpoint.config);
  const auto risk = build_risk_labels(*data.split, data.labels, {}, RiskMode::eval);
  ForwardInputs<float> inputs;
  inputs.embeddings = data.embeddings;
  inputs.features = checkpoint.config.feature_dim > 0 ? data.features : nullptr;
  inputs.graph = data.graph;
  inputs.risk = risk;
  const auto probs = forward(inputs, checkpoint.params, checkpoint.config);
  return {probs.begin(), probs.end()};
}

}  // namespace spamgraph
