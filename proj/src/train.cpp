#include "xrcn/train.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace xrcn {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("train: batch size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train: train fraction must lie in (0,1)");
  optimizer.validate();
  augment.validate();
}

Evaluation evaluate(const ArchSpec& arch, const ParamSet& params, const Dataset& dataset) {
  if (dataset.empty()) throw InvalidArgument("evaluate: empty dataset");
  Evaluation ev;
  ev.probs.reserve(dataset.size());
  for (const auto& r : dataset.records) ev.probs.push_back(forward_prob(arch, params, r.pixels));
  const std::vector<int> labels = dataset.labels();
  ev.loss = mean_bce(ev.probs, labels);
  ev.confusion = confusion(ev.probs, labels);
  ev.accuracy = ev.confusion.accuracy();
  return ev;
}

Prediction predict(const ArchSpec& arch, const ParamSet& params, const Tensor& image) {
  const float p = forward_prob(arch, params, image);
  return {arch.class_names[static_cast<std::size_t>(predicted_class(p))], p};
}

TrainResult train(const Dataset& dataset, const ArchSpec& arch, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  validate_binary_arch(arch);
  const DatasetSplit split = split_stratified(dataset, cfg.train_fraction, cfg.seed);

  TrainResult result{init_params(arch, cfg.seed), {}};
  RmsPropState state = RmsPropState::zeros_like(result.params);
  Rng aug_rng(derive_seed(cfg.seed, "augment"));

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto plan = batches(split.train, cfg.batch_size, cfg.seed, epoch);
    for (std::size_t bi = 0; bi < plan.size(); ++bi) {
      const Batch& batch = plan[bi];
      try {
        ParamSet sum = result.params.zeros_like();
        for (std::size_t k = 0; k < batch.labels.size(); ++k) {
          const Tensor img = augment(batch_item(batch.images, k), cfg.augment, aug_rng);
          const ForwardResult<float> fr = forward(arch, result.params, img);
          const float loss = bce(fr.prob, batch.labels[k]);
          if (!std::isfinite(loss)) throw NonFiniteError("non-finite loss");
          const ParamSet g = backward(arch, result.params, fr.cache, bce_grad(fr.prob, batch.labels[k]));
          for (std::size_t t = 0; t < sum.size(); ++t) {
            auto dst = sum[t].value.data();
            auto src = g[t].value.data();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
          }
        }
        const auto n = static_cast<float>(batch.labels.size());
        for (auto& p : sum) {
          for (float& v : p.value.data()) v /= n;
        }
        RmsPropResult step = rmsprop_step(result.params, sum, state, cfg.optimizer);
        result.params = std::move(step.params);
        state = std::move(step.state);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("train: epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi) + ": " +
                             e.what());
      }
    }

    EpochMetrics m;
    try {
      const Evaluation tr = evaluate(arch, result.params, split.train);
      const Evaluation va = evaluate(arch, result.params, split.test);
      m = {epoch, tr.loss, tr.accuracy, va.loss, va.accuracy};
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("train: epoch " + std::to_string(epoch) + " evaluation: " + e.what());
    }
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& history) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char line[256];
  for (const auto& m : history) {
    std::snprintf(line, sizeof line, "%zu,%.6g,%.6g,%.6g,%.6g\n", m.epoch, m.train_loss, m.train_accuracy, m.val_loss,
                  m.val_accuracy);
    out += line;
  }
  return out;
}

std::vector<EpochMetrics> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,train_acc,val_loss,val_acc") {
    throw DataError("metrics CSV: row 1: expected header epoch,train_loss,train_acc,val_loss,val_acc");
  }
  std::vector<EpochMetrics> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto bad = [&](const std::string& why) {
      throw DataError("metrics CSV: row " + std::to_string(row) + ": " + why + " ('" + line + "')");
    };
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (cells.size() != 5) bad("expected 5 columns, found " + std::to_string(cells.size()));

    double v[5];
    for (int i = 0; i < 5; ++i) {
      std::size_t pos = 0;
      try {
        v[i] = std::stod(cells[i], &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != cells[i].size()) bad("column " + std::to_string(i + 1) + " is not a number");
      if (!std::isfinite(v[i])) bad("column " + std::to_string(i + 1) + " is not finite");
    }
    if (v[0] < 0 || v[0] != std::floor(v[0])) bad("epoch must be a non-negative integer");
    if (v[1] < 0 || v[3] < 0) bad("losses must be >= 0");
    if (v[2] < 0 || v[2] > 1 || v[4] < 0 || v[4] > 1) bad("accuracies must lie in [0,1]");
    out.push_back({static_cast<std::size_t>(v[0]), v[1], v[2], v[3], v[4]});
  }
  return out;
}

}  // namespace xrcn
