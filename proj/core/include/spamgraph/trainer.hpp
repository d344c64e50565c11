#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spamgraph/checkpoint.hpp"
#include "spamgraph/embedding.hpp"
#include "spamgraph/graph.hpp"
#include "spamgraph/model.hpp"
#include "spamgraph/records.hpp"

namespace spamgraph {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 10;  // 0 disables early stopping
  double clip_norm = 5.0;                // global L2 clip; <= 0 disables
  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Mean of -[y ln p + (1-y) ln(1-p)] over `subset`, p clamped to
// [1e-7, 1 - 1e-7]. Targets of subset nodes must be known.
double bce_loss(std::span<const double> probabilities, std::span<const Label> targets,
                std::span<const std::size_t> subset);

enum class RiskMode { train, eval };

// train: labels of train nodes outside `batch` are visible; batch, valid and
// test nodes are unknown. eval: every train node shows its label.
RiskLabels build_risk_labels(const SplitAssignment& split, std::span<const Label> labels,
                             std::span<const std::size_t> batch, RiskMode mode);

template <class T>
struct GradientResult {
  T loss{};
  ModelParams<T> grads;
  std::vector<T> probabilities;
};

// Forward, BCE on `subset`, reverse pass. The loss (and every gradient) is
// multiplied by loss_scale. Throws NumericError on non-finite gradients.
template <class T>
GradientResult<T> compute_gradients(const ModelParams<T>& params, const ModelConfig& config,
                                    const ForwardInputs<T>& inputs, std::span<const Label> targets,
                                    std::span<const std::size_t> subset, T loss_scale = T{1});

template <class T>
struct AdamState {
  ModelParams<T> first_moment;
  ModelParams<T> second_moment;
};

template <class T>
AdamState<T> make_adam_state(const ModelParams<T>& params) {
  return {zeros_like(params), zeros_like(params)};
}

// One bias-corrected Adam update at step t (1-based).
template <class T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               std::uint64_t t, const TrainConfig& config);

// Scales grads so their global L2 norm is at most max_norm. Returns the norm
// before clipping.
double clip_global_norm(ModelParams<float>& grads, double max_norm);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> valid_auc;
};
std::string epoch_log_json(const EpochLog& row);

struct TrainData {
  const ReviewGraph* graph = nullptr;
  const EmbeddingMatrix* embeddings = nullptr;
  const FeatureMatrix* features = nullptr;
  const SplitAssignment* split = nullptr;
  std::span<const Label> labels;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch produced a validation AUC
  std::optional<double> best_valid_auc;
  bool stopped_early = false;
  bool diverged = false;
};

TrainResult train(const TrainData& data, const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Probabilities for every node with eval-mode risk labels.
std::vector<double> score_nodes(const Checkpoint& checkpoint, const TrainData& data);

}  // namespace spamgraph
