#include "xrcn/optim.hpp"

#include <cmath>

namespace xrcn {

void RmsPropConfig::validate() const {
  if (!(learning_rate >= 0.0f) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("rmsprop: learning rate must be finite and >= 0");
  }
  if (!(decay_rho > 0.0f && decay_rho < 1.0f)) throw InvalidArgument("rmsprop: decay rho must lie in (0,1)");
  if (!(epsilon > 0.0f) || !std::isfinite(epsilon)) throw InvalidArgument("rmsprop: epsilon must be positive");
}

namespace {

void require_mirror(const ParamSet& params, const ParamSet& other, const char* what) {
  if (other.size() != params.size()) {
    throw ShapeError(std::string("rmsprop: ") + what + " has " + std::to_string(other.size()) +
                     " tensors, params have " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (other[i].name != params[i].name || other[i].value.shape() != params[i].value.shape()) {
      throw ShapeError(std::string("rmsprop: ") + what + " entry " + other[i].name + " " +
                       other[i].value.shape().str() + " does not mirror " + params[i].name + " " +
                       params[i].value.shape().str());
    }
  }
}

}  // namespace

RmsPropResult rmsprop_step(const ParamSet& params, const ParamSet& grads, const RmsPropState& state,
                           const RmsPropConfig& cfg) {
  cfg.validate();
  require_mirror(params, grads, "gradient set");
  require_mirror(params, state.mean_square, "optimizer state");

  RmsPropResult r{params, state};
  const float keep = cfg.decay_rho;
  const float mix = 1.0f - cfg.decay_rho;
  for (std::size_t t = 0; t < params.size(); ++t) {
    const Tensor& g = grads[t].value;
    Tensor& w = r.params[t].value;
    Tensor& s = r.state.mean_square[t].value;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NonFiniteError("rmsprop: non-finite gradient in " + grads[t].name + " at index " + std::to_string(i));
      }
      s[i] = keep * s[i] + mix * (g[i] * g[i]);
      w[i] = w[i] - cfg.learning_rate * g[i] / (std::sqrt(s[i]) + cfg.epsilon);
    }
    w.check_finite("rmsprop update of " + params[t].name);
    s.check_finite("rmsprop state of " + params[t].name);
  }
  ++r.state.step;
  return r;
}

}  // namespace xrcn
