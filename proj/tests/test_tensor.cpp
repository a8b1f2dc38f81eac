#include <doctest.h>

#include "oracles.hpp"
#include "xrcn/tensor.hpp"

using namespace xrcn;

namespace {

std::vector<double> as_double(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Central differences of L = sum(out * weights) with respect to one tensor.
// `eval` recomputes the op output for the current value of `target`.
template <typename T, typename Eval>
double max_fd_error(BasicTensor<T>& target, const BasicTensor<T>& analytic, const BasicTensor<T>& weights, T step,
                    Eval eval) {
  double worst = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const T orig = target[i];
    target[i] = orig + step;
    const T hi_val = target[i];
    const BasicTensor<T> up = eval();
    target[i] = orig - step;
    const T lo_val = target[i];
    const BasicTensor<T> down = eval();
    target[i] = orig;
    double diff = 0.0;
    for (std::size_t k = 0; k < up.size(); ++k) {
      diff += (static_cast<double>(up[k]) - static_cast<double>(down[k])) * static_cast<double>(weights[k]);
    }
    const double numeric = diff / (static_cast<double>(hi_val) - static_cast<double>(lo_val));
    worst = std::max(worst, oracle::rel_error(analytic[i], numeric));
  }
  return worst;
}

}  // namespace

TEST_CASE("shape and tensor construction contracts") {
  CHECK(Shape{2, 3, 4}.numel() == 24);
  CHECK(Shape{62, 62, 8}.str() == "62x62x8");
  CHECK_THROWS_AS(Shape({2, 0}), ShapeError);
  CHECK_THROWS_AS(Shape({1, 1, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2}, std::vector<float>{1, NAN}), NonFiniteError);
  CHECK_THROWS_AS(Tensor(Shape{1}, std::vector<float>{INFINITY}), NonFiniteError);
  CHECK_THROWS_AS(Tensor(Shape{4}).reshaped(Shape{3}), ShapeError);
}

TEST_CASE("conv2d_forward: identity and zero cases") {
  Rng rng(1);
  const Tensor in = oracle::random_tensor<float>(Shape{4, 5, 1}, rng);
  const Tensor one(Shape{1, 1, 1, 1}, 1.0f);
  CHECK(conv2d_forward(in, one, Tensor(Shape{1})) == in);

  const Tensor zeros(Shape{6, 6, 2});
  const Tensor k = oracle::random_tensor<float>(Shape{3, 3, 2, 3}, rng);
  const Tensor b(Shape{3}, std::vector<float>{0.5f, -1.25f, 2.0f});
  const Tensor out = conv2d_forward(zeros, k, b);
  REQUIRE(out.shape() == Shape{4, 4, 3});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == b[c]);
}

TEST_CASE("conv2d_forward matches the direct-loop oracle on a 5x5x1 input with 3x3x1x2 kernels") {
  Rng rng(2024);
  const Tensor in = oracle::random_tensor<float>(Shape{5, 5, 1}, rng);
  const Tensor k = oracle::random_tensor<float>(Shape{3, 3, 1, 2}, rng);
  const Tensor b = oracle::random_tensor<float>(Shape{2}, rng);
  const auto expect = oracle::conv_direct(as_double(in), 5, 5, 1, as_double(k), 3, 3, 2, as_double(b));
  for (const Tensor& got : {conv2d_forward(in, k, b), conv2d_forward_patches(in, k, b)}) {
    REQUIRE(got.shape() == Shape{3, 3, 2});
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - expect[i]) <= 1e-5);
  }
}

TEST_CASE("conv2d_forward strategies agree with the oracle on random shapes") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9), cin = 1 + rng.below(4), cout = 1 + rng.below(4);
    const std::size_t kh = 1 + rng.below(h), kw = 1 + rng.below(w);
    const Tensor in = oracle::random_tensor<float>(Shape{h, w, cin}, rng);
    const Tensor k = oracle::random_tensor<float>(Shape{kh, kw, cin, cout}, rng);
    const Tensor b = oracle::random_tensor<float>(Shape{cout}, rng);
    const auto expect = oracle::conv_direct(as_double(in), h, w, cin, as_double(k), kh, kw, cout, as_double(b));
    const Tensor direct = conv2d_forward(in, k, b);
    const Tensor patches = conv2d_forward_patches(in, k, b);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(std::abs(direct[i] - expect[i]) <= 1e-5);
      CHECK(std::abs(patches[i] - expect[i]) <= 1e-5);
    }
  }
}

TEST_CASE("conv2d shape errors") {
  const Tensor in(Shape{4, 4, 2});
  CHECK_THROWS_AS(conv2d_forward(in, Tensor(Shape{5, 3, 2, 1}), Tensor(Shape{1})), ShapeError);
  CHECK_THROWS_AS(conv2d_forward(in, Tensor(Shape{3, 3, 3, 1}), Tensor(Shape{1})), ShapeError);
  CHECK_THROWS_AS(conv2d_forward(in, Tensor(Shape{3, 3, 2, 2}), Tensor(Shape{3})), ShapeError);
  CHECK_THROWS_AS(conv2d_forward(Tensor(Shape{4, 4}), Tensor(Shape{3, 3, 2, 2}), Tensor(Shape{2})), ShapeError);
  CHECK_THROWS_AS(conv2d_backward(in, Tensor(Shape{3, 3, 2, 2}), Tensor(Shape{2, 2, 3})), ShapeError);
  try {
    conv2d_forward(in, Tensor(Shape{3, 3, 3, 1}), Tensor(Shape{1}));
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("input channels") != std::string::npos);
  }
}

TEST_CASE("conv2d_backward: zero and identity cases") {
  Rng rng(5);
  const Tensor in = oracle::random_tensor<float>(Shape{5, 4, 2}, rng);
  const Tensor k = oracle::random_tensor<float>(Shape{2, 3, 2, 3}, rng);
  const Conv2dGrads<float> z = conv2d_backward(in, k, Tensor(Shape{4, 2, 3}));
  for (float v : z.input.data()) CHECK(v == 0.0f);
  for (float v : z.kernels.data()) CHECK(v == 0.0f);
  for (float v : z.bias.data()) CHECK(v == 0.0f);

  const Tensor img = oracle::random_tensor<float>(Shape{3, 3, 1}, rng);
  const Tensor g = oracle::random_tensor<float>(Shape{3, 3, 1}, rng);
  CHECK(conv2d_backward(img, Tensor(Shape{1, 1, 1, 1}, 1.0f), g).input == g);
}

TEST_CASE("conv2d_backward matches central differences in 32-bit floats") {
  // Dyadic values and a power-of-two step keep every float operation exact,
  // so the only error left is in the adjoint itself.
  Rng rng(11);
  const float step = 0x1p-10f;  // ~1e-3
  for (int trial = 0; trial < 10; ++trial) {
    Tensor in = oracle::dyadic_tensor(Shape{5, 6, 2}, rng);
    Tensor k = oracle::dyadic_tensor(Shape{3, 2, 2, 3}, rng);
    Tensor b = oracle::dyadic_tensor(Shape{3}, rng);
    const Tensor r = oracle::dyadic_tensor(Shape{3, 5, 3}, rng);
    const Conv2dGrads<float> g = conv2d_backward(in, k, r);
    auto eval = [&] { return conv2d_forward(in, k, b); };
    CHECK(max_fd_error(in, g.input, r, step, eval) < 1e-3);
    CHECK(max_fd_error(k, g.kernels, r, step, eval) < 1e-3);
    CHECK(max_fd_error(b, g.bias, r, step, eval) < 1e-3);
  }
}

TEST_CASE("conv2d_backward matches central differences on continuous random values") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    TensorD in = oracle::random_tensor<double>(Shape{6, 5, 3}, rng);
    TensorD k = oracle::random_tensor<double>(Shape{3, 3, 3, 2}, rng);
    TensorD b = oracle::random_tensor<double>(Shape{2}, rng);
    const TensorD r = oracle::random_tensor<double>(Shape{4, 3, 2}, rng);
    const Conv2dGrads<double> g = conv2d_backward(in, k, r);
    auto eval = [&] { return conv2d_forward(in, k, b); };
    CHECK(max_fd_error(in, g.input, r, 1e-3, eval) < 1e-3);
    CHECK(max_fd_error(k, g.kernels, r, 1e-3, eval) < 1e-3);
    CHECK(max_fd_error(b, g.bias, r, 1e-3, eval) < 1e-3);
  }
}

TEST_CASE("maxpool2_forward") {
  const Tensor c(Shape{4, 6, 2}, 0.75f);
  const PoolResult<float> pc = maxpool2_forward(c);
  CHECK(pc.output == Tensor(Shape{2, 3, 2}, 0.75f));

  const Tensor sq(Shape{2, 2, 1}, std::vector<float>{1, 2, 3, 4});
  CHECK(maxpool2_forward(sq).output == Tensor(Shape{1, 1, 1}, std::vector<float>{4}));

  Rng rng(9);
  const Tensor in = oracle::random_tensor<float>(Shape{5, 5, 3}, rng);
  const PoolResult<float> p = maxpool2_forward(in);
  REQUIRE(p.output.shape() == Shape{2, 2, 3});
  const auto expect = oracle::pool_scan(in);
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(p.output[i] == expect[i]);

  CHECK_THROWS_AS(maxpool2_forward(Tensor(Shape{1, 4, 1})), ShapeError);
  CHECK_THROWS_AS(maxpool2_forward(Tensor(Shape{4, 1, 1})), ShapeError);
}

TEST_CASE("maxpool2_backward routing") {
  // Distinct values: exactly one 1 per window.
  Rng rng(3);
  const Tensor in = oracle::random_tensor<float>(Shape{6, 4, 2}, rng);
  const PoolResult<float> p = maxpool2_forward(in);
  const Tensor g = maxpool2_backward(p, Tensor(p.output.shape(), 1.0f));
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t c = 0; c < 2; ++c) {
        int ones = 0;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const float v = g.at(2 * y + dy, 2 * x + dx, c);
            CHECK((v == 0.0f || v == 1.0f));
            ones += v == 1.0f;
            if (v == 1.0f) CHECK(in.at(2 * y + dy, 2 * x + dx, c) == p.output.at(y, x, c));
          }
        CHECK(ones == 1);
      }

  const Tensor gz = maxpool2_backward(p, Tensor(p.output.shape()));
  for (float v : gz.data()) CHECK(v == 0.0f);

  const Tensor tied(Shape{2, 2, 1}, 5.0f);
  const Tensor gt = maxpool2_backward(maxpool2_forward(tied), Tensor(Shape{1, 1, 1}, 1.0f));
  CHECK(gt == Tensor(Shape{2, 2, 1}, std::vector<float>{1, 0, 0, 0}));

  // Trailing odd row/column receive nothing.
  const Tensor odd = oracle::random_tensor<float>(Shape{5, 5, 1}, rng);
  const Tensor go = maxpool2_backward(maxpool2_forward(odd), Tensor(Shape{2, 2, 1}, 1.0f));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(go.at(4, i, 0) == 0.0f);
    CHECK(go.at(i, 4, 0) == 0.0f);
  }

  CHECK_THROWS_AS(maxpool2_backward(p, Tensor(Shape{3, 3, 2})), ShapeError);
  PoolResult<float> stale = p;
  stale.argmax.pop_back();
  CHECK_THROWS_AS(maxpool2_backward(stale, Tensor(p.output.shape())), ShapeError);
}

TEST_CASE("maxpool2_backward matches central differences away from ties") {
  Rng rng(21);
  Tensor in = oracle::dyadic_tensor(Shape{4, 6, 2}, rng);
  // Break ties: add a distinct offset per element.
  for (std::size_t i = 0; i < in.size(); ++i) in[i] += static_cast<float>(i) * 0x1p-6f;
  const Tensor r = oracle::dyadic_tensor(Shape{2, 3, 2}, rng);
  const Tensor g = maxpool2_backward(maxpool2_forward(in), r);
  CHECK(max_fd_error(in, g, r, 0x1p-12f, [&] { return maxpool2_forward(in).output; }) < 1e-3);
}

TEST_CASE("matmul") {
  Rng rng(4);
  const Tensor x = oracle::random_tensor<float>(Shape{3, 2}, rng);
  Tensor eye(Shape{3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0f;
  CHECK(matmul(eye, x) == x);
  const Tensor z = matmul(Tensor(Shape{2, 3}), x);
  for (float v : z.data()) CHECK(v == 0.0f);

  const Tensor a = oracle::random_tensor<float>(Shape{4, 3}, rng);
  const Tensor b = oracle::random_tensor<float>(Shape{3, 2}, rng);
  const Tensor c = matmul(a, b);
  const auto expect = oracle::matmul_loops(a.values(), b.values(), 4, 3, 2);
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(c[i] == expect[i]);

  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(matmul(Tensor(Shape{3}), b), ShapeError);
}

TEST_CASE("relu and its backward") {
  const Tensor x(Shape{3}, std::vector<float>{-3.0f, 0.0f, 2.5f});
  CHECK(relu(x) == Tensor(Shape{3}, std::vector<float>{0.0f, 0.0f, 2.5f}));
  const Tensor g = relu_backward(x, Tensor(Shape{3}, 7.0f));
  CHECK(g == Tensor(Shape{3}, std::vector<float>{0.0f, 0.0f, 7.0f}));
  CHECK_THROWS_AS(relu_backward(x, Tensor(Shape{2})), ShapeError);
}

TEST_CASE("sigmoid stability and symmetry") {
  CHECK(sigmoid_scalar(0.0f) == 0.5f);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const float v = rng.uniform(-20.0f, 20.0f);
    CHECK(sigmoid_scalar(-v) == doctest::Approx(1.0f - sigmoid_scalar(v)).epsilon(1e-6));
  }
  for (float big : {88.0f, 100.0f, 1e30f}) {
    const float hi = sigmoid_scalar(big), lo = sigmoid_scalar(-big);
    CHECK(std::isfinite(hi));
    CHECK(hi > 0.0f);
    CHECK(hi <= 1.0f);
    CHECK(std::isfinite(lo));
    CHECK(lo >= 0.0f);
    CHECK(lo < 1.0f);
  }
  const Tensor s = sigmoid(Tensor(Shape{2}, std::vector<float>{0.0f, 100.0f}));
  CHECK(s[0] == 0.5f);
  CHECK(s[1] <= 1.0f);
}

TEST_CASE("kernels do not mutate their inputs") {
  Rng rng(30);
  const Tensor in = oracle::random_tensor<float>(Shape{6, 6, 2}, rng);
  const Tensor k = oracle::random_tensor<float>(Shape{3, 3, 2, 2}, rng);
  const Tensor b = oracle::random_tensor<float>(Shape{2}, rng);
  const Tensor in0 = in, k0 = k, b0 = b;
  const Tensor out = conv2d_forward(in, k, b);
  conv2d_forward_patches(in, k, b);
  conv2d_backward(in, k, out);
  const auto p = maxpool2_forward(in);
  maxpool2_backward(p, p.output);
  relu(in);
  sigmoid(in);
  relu_backward(in, in);
  CHECK(in == in0);
  CHECK(k == k0);
  CHECK(b == b0);
}
