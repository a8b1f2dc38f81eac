#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "xrcn/error.hpp"

namespace xrcn {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside the loss.
inline constexpr double kProbClamp = 1e-7;

/// Predictions at or above this count as class 1.
inline constexpr double kDecisionThreshold = 0.5;

namespace detail {

template <typename T>
void check_bce_args(T prob, int label) {
  if (!(prob >= T(0) && prob <= T(1))) {
    throw InvalidArgument("bce: probability " + std::to_string(prob) + " outside [0,1]");
  }
  if (label != 0 && label != 1) throw InvalidArgument("bce: label must be 0 or 1, got " + std::to_string(label));
}

template <typename T>
T clamp_prob(T prob) {
  return std::clamp(prob, T(kProbClamp), T(1) - T(kProbClamp));
}

}  // namespace detail

/// Binary cross-entropy of one prediction.
template <typename T>
T bce(T prob, int label) {
  detail::check_bce_args(prob, label);
  const T p = detail::clamp_prob(prob);
  return label == 1 ? -std::log(p) : -std::log(T(1) - p);
}

/// d bce / d prob, evaluated at the clamped probability.
template <typename T>
T bce_grad(T prob, int label) {
  detail::check_bce_args(prob, label);
  const T p = detail::clamp_prob(prob);
  return (p - T(label)) / (p * (T(1) - p));
}

/// Mean BCE, accumulated in double.
double mean_bce(std::span<const float> probs, std::span<const int> labels);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const noexcept {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline int predicted_class(double prob) { return prob >= kDecisionThreshold ? 1 : 0; }

/// Fraction of predictions whose thresholded class equals the label.
double accuracy(std::span<const float> probs, std::span<const int> labels);

/// Positive class is label 1.
ConfusionMatrix confusion(std::span<const float> probs, std::span<const int> labels);

}  // namespace xrcn
