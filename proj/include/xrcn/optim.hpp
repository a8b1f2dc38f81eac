#pragma once

#include <cstdint>

#include "xrcn/nn.hpp"

namespace xrcn {

struct RmsPropConfig {
  float learning_rate = 0.001f;
  float decay_rho = 0.9f;
  float epsilon = 1e-8f;

  /// Throws InvalidArgument unless lr >= 0, 0 < rho < 1 and epsilon > 0.
  void validate() const;
};

/// Decayed average of squared gradients, one accumulator per parameter.
struct RmsPropState {
  ParamSet mean_square;
  std::uint64_t step = 0;

  static RmsPropState zeros_like(const ParamSet& params) { return {params.zeros_like(), 0}; }
};

struct RmsPropResult {
  ParamSet params;
  RmsPropState state;
};

/**
 * One RMSprop update, elementwise:
 *
 *   s <- rho * s + (1 - rho) * g^2
 *   w <- w - lr * g / (sqrt(s) + epsilon)
 *
 * Epsilon is added outside the square root. Throws ShapeError when grads or
 * state do not mirror params, NonFiniteError naming the parameter when a
 * gradient is NaN/Inf.
 */
RmsPropResult rmsprop_step(const ParamSet& params, const ParamSet& grads, const RmsPropState& state,
                           const RmsPropConfig& cfg);

}  // namespace xrcn
