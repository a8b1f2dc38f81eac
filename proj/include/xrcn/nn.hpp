#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xrcn/tensor.hpp"

namespace xrcn {

namespace layer {

struct Conv2D {
  std::size_t kh, kw, cin, cout;
  friend bool operator==(const Conv2D&, const Conv2D&) = default;
};
struct MaxPool2 {
  friend bool operator==(const MaxPool2&, const MaxPool2&) = default;
};
struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};
struct Dense {
  std::size_t in, out;
  friend bool operator==(const Dense&, const Dense&) = default;
};
struct ReLU {
  friend bool operator==(const ReLU&, const ReLU&) = default;
};
struct Sigmoid {
  friend bool operator==(const Sigmoid&, const Sigmoid&) = default;
};

}  // namespace layer

using LayerSpec = std::variant<layer::Conv2D, layer::MaxPool2, layer::Flatten, layer::Dense, layer::ReLU, layer::Sigmoid>;

/// Canonical one-line form, e.g. "conv2d 3 3 1 8" or "maxpool2".
std::string layer_text(const LayerSpec& layer);

/// Sequential network description: input extents, ordered layers, and the
/// two class labels (index 0 and 1).
struct ArchSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::array<std::string, 2> class_names{"NORMAL", "COVID-19"};

  /// Canonical text: "input H W C", "classes A B", then one layer per line.
  std::string to_text() const;

  /// Parses the canonical text. Blank lines and lines starting with '#' are
  /// ignored. Throws InvalidArgument naming the line on malformed input.
  static ArchSpec parse(std::string_view text);

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// 64x64x1 -> conv 3x3x8 -> relu -> pool -> conv 3x3x16 -> relu -> pool ->
/// flatten -> dense 32 -> relu -> dense 1 -> sigmoid. 101,665 parameters.
ArchSpec reference_arch();

/// Output shape of every layer, in order. Throws ShapeError naming the first
/// layer whose input does not fit.
std::vector<Shape> infer_shapes(const ArchSpec& arch);

/// Shape inference plus the binary-head requirement: the last layer is a
/// sigmoid over a single value.
void validate_binary_arch(const ArchSpec& arch);

std::size_t param_count(const ArchSpec& arch);

struct ParamSpec {
  std::string name;
  Shape shape;
  /// Inputs feeding one output unit; 0 for biases.
  std::size_t fan_in;
};

/// Declared parameters in declaration order. Layer i owns "i.weight" and
/// "i.bias" when it is a Conv2D or Dense layer.
std::vector<ParamSpec> param_manifest(const ArchSpec& arch);

template <typename T>
struct BasicParam {
  std::string name;
  BasicTensor<T> value;
  friend bool operator==(const BasicParam&, const BasicParam&) = default;
};

/// Named tensors in declaration order.
template <typename T>
class BasicParamSet {
 public:
  void add(std::string name, BasicTensor<T> value) { entries_.push_back({std::move(name), std::move(value)}); }

  std::size_t size() const noexcept { return entries_.size(); }
  BasicParam<T>& operator[](std::size_t i) { return entries_[i]; }
  const BasicParam<T>& operator[](std::size_t i) const { return entries_[i]; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  const BasicTensor<T>* find(std::string_view name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e.value;
    }
    return nullptr;
  }

  const BasicTensor<T>& at(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw InvalidArgument("no parameter named '" + std::string(name) + "'");
  }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  /// Same names and shapes, all zeros.
  BasicParamSet zeros_like() const {
    BasicParamSet z;
    for (const auto& e : entries_) z.add(e.name, BasicTensor<T>(e.value.shape()));
    return z;
  }

  template <typename U>
  BasicParamSet<U> cast() const {
    BasicParamSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  friend bool operator==(const BasicParamSet&, const BasicParamSet&) = default;

 private:
  std::vector<BasicParam<T>> entries_;
};

using ParamSet = BasicParamSet<float>;
using ParamSetD = BasicParamSet<double>;

/// Throws ShapeError unless `params` has exactly the manifest's names and
/// shapes in order.
template <typename T>
void check_params(const ArchSpec& arch, const BasicParamSet<T>& params);

/**
 * Weights uniform in [-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
 *
 * Each tensor draws from its own Rng stream seeded with
 * derive_seed(seed, parameter name), so adding a layer does not change the
 * values of the others.
 */
ParamSet init_params(const ArchSpec& arch, std::uint64_t seed);

/// Everything backward needs from one forward pass.
template <typename T>
struct ForwardCache {
  /// Input of each layer.
  std::vector<BasicTensor<T>> inputs;
  /// Pool winners for MaxPool2 layers, empty elsewhere.
  std::vector<std::optional<PoolResult<T>>> pools;
  /// Final sigmoid output.
  T prob{};
};

template <typename T>
struct ForwardResult {
  T prob;
  ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> forward(const ArchSpec& arch, const BasicParamSet<T>& params, const BasicTensor<T>& input);

/// Probability only, no cache kept.
template <typename T>
T forward_prob(const ArchSpec& arch, const BasicParamSet<T>& params, const BasicTensor<T>& input);

/// Gradients of the output probability with respect to every parameter,
/// multiplied by `dl_dprob`. Names and shapes mirror `params`.
template <typename T>
BasicParamSet<T> backward(const ArchSpec& arch, const BasicParamSet<T>& params, const ForwardCache<T>& cache,
                          T dl_dprob);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a ReLU or max-pool kink
};

/**
 * Compares backward-through-BCE against central differences of the loss for
 * every parameter element.
 *
 * Both sides are evaluated in double precision with step 1e-3. The relative
 * error is |a - n| / max(|a|, |n|, 1e-6). Elements whose +/- step flips a
 * ReLU sign or a pooling argmax are not differentiable at that scale; they
 * are counted in `skipped` instead of `checked`.
 */
GradCheckReport grad_check(const ArchSpec& arch, const ParamSet& params, const Tensor& input, int label,
                           double step = 1e-3);

}  // namespace xrcn
