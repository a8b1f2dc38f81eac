#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xrcn/error.hpp"

namespace xrcn {

/// Extents of a rank 1..4 tensor. Every extent is at least 1.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t i) const { return dims_.at(i); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t numel() const noexcept;

  /// "62x62x8" style rendering.
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

/**
 * Dense row-major array (last dimension fastest) with an explicit shape.
 *
 * Image-like tensors use height x width x channels layout. `Tensor` is the
 * 32-bit instantiation used by the rest of the library; the 64-bit one exists
 * so finite-difference checks can run without single-precision noise.
 */
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  /// Zero-filled tensor.
  explicit BasicTensor(Shape shape) : shape_(std::move(shape)), data_(shape_.numel(), T(0)) {}

  BasicTensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

  /// Takes ownership of `data`; throws ShapeError on a length mismatch and
  /// NonFiniteError on NaN/Inf.
  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_.str() + " (" + std::to_string(shape_.numel()) + " elements)");
    }
    check_finite("tensor construction");
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.rank(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Element (y, x, c) of a rank-3 tensor.
  T& at(std::size_t y, std::size_t x, std::size_t c) { return data_[(y * shape_[1] + x) * shape_[2] + c]; }
  const T& at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }

  /// Same data, different shape with equal element count.
  BasicTensor reshaped(Shape shape) const {
    if (shape.numel() != size()) {
      throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
    }
    BasicTensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
  }

  /// Throws NonFiniteError naming `context` if any element is NaN or infinite.
  void check_finite(std::string_view context) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw NonFiniteError(std::string(context) + ": non-finite value at flat index " + std::to_string(i));
      }
    }
  }

  template <typename U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

/// Output of a 2x2 stride-2 max pool plus the winners needed by backward.
template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  /// For each output element, the flat offset of the winning input element.
  std::vector<std::size_t> argmax;
  Shape input_shape;
};

// Valid padding, stride 1. input [H,W,Cin], kernels [Kh,Kw,Cin,Cout], bias [Cout].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias);

/// Same contract as conv2d_forward, computed as one matrix product over
/// flattened patches.
template <typename T>
BasicTensor<T> conv2d_forward_patches(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                                      const BasicTensor<T>& bias);

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out);

/// 2x2 window, stride 2, trailing odd row/column dropped. Ties go to the
/// first maximum in row-major window order.
template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2_backward(const PoolResult<T>& forward, const BasicTensor<T>& grad_out);

/// [M,K] x [K,N]; each output accumulates serially over K.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Passes grad where x > 0; the subgradient at 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace xrcn
