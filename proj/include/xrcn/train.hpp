#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "xrcn/data.hpp"
#include "xrcn/loss.hpp"
#include "xrcn/nn.hpp"
#include "xrcn/optim.hpp"

namespace xrcn {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  RmsPropConfig optimizer;
  AugmentConfig augment;
  double train_fraction = 0.7;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainResult {
  ParamSet params;
  std::vector<EpochMetrics> history;
};

/// Called after every epoch with that epoch's metrics.
using EpochCallback = std::function<void(const EpochMetrics&)>;

/**
 * Stratified split, then per epoch: shuffled mini-batches, augmentation on
 * training images only, forward/BCE/backward per sample, batch-mean
 * gradient, one RMSprop step per batch. After each epoch both splits are
 * evaluated without augmentation; the held-out split is the validation set.
 *
 * The result depends only on (dataset, arch, cfg).
 */
TrainResult train(const Dataset& dataset, const ArchSpec& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<float> probs;  // per record, dataset order
};

Evaluation evaluate(const ArchSpec& arch, const ParamSet& params, const Dataset& dataset);

struct Prediction {
  std::string label;
  float probability = 0.0f;
};

Prediction predict(const ArchSpec& arch, const ParamSet& params, const Tensor& image);

/// "epoch,train_loss,train_acc,val_loss,val_acc" header, one row per epoch,
/// %.6g values, LF line endings.
std::string metrics_to_csv(const std::vector<EpochMetrics>& history);

/// Inverse of metrics_to_csv. Throws DataError naming the offending row for
/// malformed lines, accuracies outside [0,1], or negative/non-finite losses.
std::vector<EpochMetrics> metrics_from_csv(const std::string& text);

}  // namespace xrcn
