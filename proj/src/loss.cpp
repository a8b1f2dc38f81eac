#include "xrcn/loss.hpp"

namespace xrcn {

namespace {

void check_batch(std::span<const float> probs, std::span<const int> labels, const char* op) {
  if (probs.empty()) throw InvalidArgument(std::string(op) + ": empty input");
  if (probs.size() != labels.size()) {
    throw InvalidArgument(std::string(op) + ": " + std::to_string(probs.size()) + " predictions vs " +
                          std::to_string(labels.size()) + " labels");
  }
}

}  // namespace

double mean_bce(std::span<const float> probs, std::span<const int> labels) {
  check_batch(probs, labels, "mean_bce");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) sum += bce(probs[i], labels[i]);
  return sum / static_cast<double>(probs.size());
}

ConfusionMatrix confusion(std::span<const float> probs, std::span<const int> labels) {
  check_batch(probs, labels, "confusion");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("confusion: labels must be 0 or 1");
    const bool pos = predicted_class(probs[i]) == 1;
    if (labels[i] == 1) {
      pos ? ++m.tp : ++m.fn;
    } else {
      pos ? ++m.fp : ++m.tn;
    }
  }
  return m;
}

double accuracy(std::span<const float> probs, std::span<const int> labels) {
  return confusion(probs, labels).accuracy();
}

}  // namespace xrcn
