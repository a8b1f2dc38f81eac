#include "xrcn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace xrcn {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > 4) {
    throw ShapeError("shape rank must be 1..4, got " + std::to_string(dims_.size()));
  }
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("shape extents must be >= 1, got " + str());
  }
}

std::size_t Shape::numel() const noexcept {
  if (dims_.empty()) return 0;
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::str() const {
  std::string s;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims_[i]);
  }
  return s.empty() ? "[]" : s;
}

namespace {

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     s.str());
  }
}

void check_conv_shapes(const Shape& in, const Shape& k, const char* op) {
  require_rank(in, 3, op, "input");
  require_rank(k, 4, op, "kernels");
  if (k[0] > in[0] || k[1] > in[1]) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(k[0]) + "x" + std::to_string(k[1]) +
                     " larger than input " + std::to_string(in[0]) + "x" + std::to_string(in[1]));
  }
  if (k[2] != in[2]) {
    throw ShapeError(std::string(op) + ": kernel expects " + std::to_string(k[2]) + " input channels, input has " +
                     std::to_string(in[2]));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias) {
  check_conv_shapes(input.shape(), kernels.shape(), "conv2d_forward");
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
  if (bias.rank() != 1 || bias.dim(0) != cout) {
    throw ShapeError("conv2d_forward: bias must be [" + std::to_string(cout) + "], got " + bias.shape().str());
  }
  const std::size_t ho = h - kh + 1, wo = w - kw + 1;
  BasicTensor<T> out(Shape{ho, wo, cout});

  const T* in = input.data().data();
  const T* k = kernels.data().data();
  const T* b = bias.data().data();
  T* o = out.data().data();
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      T* op = o + (y * wo + x) * cout;
      std::copy(b, b + cout, op);
      for (std::size_t dy = 0; dy < kh; ++dy) {
        for (std::size_t dx = 0; dx < kw; ++dx) {
          const T* ip = in + ((y + dy) * w + (x + dx)) * cin;
          const T* kp = k + (dy * kw + dx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T v = ip[ci];
            const T* krow = kp + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) op[co] += v * krow[co];
          }
        }
      }
    }
  }
  out.check_finite("conv2d_forward");
  return out;
}

template <typename T>
BasicTensor<T> conv2d_forward_patches(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                                      const BasicTensor<T>& bias) {
  check_conv_shapes(input.shape(), kernels.shape(), "conv2d_forward_patches");
  const std::size_t w = input.dim(1), cin = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
  if (bias.rank() != 1 || bias.dim(0) != cout) {
    throw ShapeError("conv2d_forward_patches: bias must be [" + std::to_string(cout) + "], got " +
                     bias.shape().str());
  }
  const std::size_t ho = input.dim(0) - kh + 1, wo = w - kw + 1;
  const std::size_t patch = kh * kw * cin;

  BasicTensor<T> cols(Shape{ho * wo, patch});
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      T* row = cols.data().data() + (y * wo + x) * patch;
      for (std::size_t dy = 0; dy < kh; ++dy) {
        const T* src = input.data().data() + ((y + dy) * w + x) * cin;
        std::copy(src, src + kw * cin, row + dy * kw * cin);
      }
    }
  }
  BasicTensor<T> prod = matmul(cols, kernels.reshaped(Shape{patch, cout}));
  for (std::size_t r = 0; r < ho * wo; ++r) {
    for (std::size_t co = 0; co < cout; ++co) prod[r * cout + co] += bias[co];
  }
  prod.check_finite("conv2d_forward_patches");
  return prod.reshaped(Shape{ho, wo, cout});
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out) {
  check_conv_shapes(input.shape(), kernels.shape(), "conv2d_backward");
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
  const std::size_t ho = h - kh + 1, wo = w - kw + 1;
  if (grad_out.shape() != Shape{ho, wo, cout}) {
    throw ShapeError("conv2d_backward: grad_out must be " + Shape{ho, wo, cout}.str() + ", got " +
                     grad_out.shape().str());
  }

  Conv2dGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(kernels.shape()), BasicTensor<T>(Shape{cout})};
  const T* in = input.data().data();
  const T* k = kernels.data().data();
  const T* go = grad_out.data().data();
  T* gin = g.input.data().data();
  T* gk = g.kernels.data().data();
  T* gb = g.bias.data().data();

  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      const T* gp = go + (y * wo + x) * cout;
      for (std::size_t co = 0; co < cout; ++co) gb[co] += gp[co];
      for (std::size_t dy = 0; dy < kh; ++dy) {
        for (std::size_t dx = 0; dx < kw; ++dx) {
          const std::size_t in_off = ((y + dy) * w + (x + dx)) * cin;
          const std::size_t k_off = (dy * kw + dx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T v = in[in_off + ci];
            const T* krow = k + k_off + ci * cout;
            T* gkrow = gk + k_off + ci * cout;
            T acc = T(0);
            for (std::size_t co = 0; co < cout; ++co) {
              gkrow[co] += v * gp[co];
              acc += krow[co] * gp[co];
            }
            gin[in_off + ci] += acc;
          }
        }
      }
    }
  }
  g.input.check_finite("conv2d_backward (input gradient)");
  g.kernels.check_finite("conv2d_backward (kernel gradient)");
  g.bias.check_finite("conv2d_backward (bias gradient)");
  return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T>& input) {
  require_rank(input.shape(), 3, "maxpool2_forward", "input");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (h < 2 || w < 2) {
    throw ShapeError("maxpool2_forward: input " + input.shape().str() + " smaller than the 2x2 window");
  }
  const std::size_t ho = h / 2, wo = w / 2;
  PoolResult<T> r{BasicTensor<T>(Shape{ho, wo, c}), std::vector<std::size_t>(ho * wo * c), input.shape()};
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((2 * y) * w + 2 * x) * c + ch;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t off = ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
            if (input[off] > input[best]) best = off;
          }
        }
        const std::size_t o = (y * wo + x) * c + ch;
        r.output[o] = input[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const PoolResult<T>& forward, const BasicTensor<T>& grad_out) {
  if (grad_out.shape() != forward.output.shape() || forward.argmax.size() != grad_out.size() ||
      forward.input_shape.rank() != 3) {
    throw ShapeError("maxpool2_backward: index map does not match grad_out " + grad_out.shape().str());
  }
  BasicTensor<T> gin(forward.input_shape);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    const std::size_t dst = forward.argmax[i];
    if (dst >= gin.size()) throw ShapeError("maxpool2_backward: index map entry out of range");
    gin[dst] += grad_out[i];
  }
  return gin;
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul: operands must be rank 2, got " + a.shape().str() + " and " + b.shape().str());
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ (" + a.shape().str() + " x " + b.shape().str() + ")");
  }
  BasicTensor<T> c(Shape{m, n});
  const T* ap = a.data().data();
  const T* bp = b.data().data();
  T* cp = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = cp + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ap[i * k + p];
      const T* brow = bp + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  c.check_finite("matmul");
  return c;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.data()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out) {
  if (x.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward: input " + x.shape().str() + " vs grad " + grad_out.shape().str());
  }
  BasicTensor<T> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.data()) v = sigmoid_scalar(v);
  return y;
}

#define XRCN_INSTANTIATE(T)                                                                                  \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> conv2d_forward_patches(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                                 const BasicTensor<T>&);                                       \
  template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
  template PoolResult<T> maxpool2_forward(const BasicTensor<T>&);                                               \
  template BasicTensor<T> maxpool2_backward(const PoolResult<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                                 \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                                          \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                          \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);

XRCN_INSTANTIATE(float)
XRCN_INSTANTIATE(double)

#undef XRCN_INSTANTIATE

}  // namespace xrcn
