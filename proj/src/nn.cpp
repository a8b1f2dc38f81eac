#include "xrcn/nn.hpp"

#include <cmath>
#include <sstream>

#include "xrcn/loss.hpp"
#include "xrcn/rng.hpp"

namespace xrcn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t parse_extent(const std::string& tok, std::size_t line_no) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || tok.empty() || tok[0] == '-' || v == 0) {
    throw InvalidArgument("arch line " + std::to_string(line_no) + ": expected a positive integer, got '" + tok +
                          "'");
  }
  return static_cast<std::size_t>(v);
}

void require_positive(const LayerSpec& l, std::size_t index) {
  auto bad = [&] {
    throw ShapeError("layer " + std::to_string(index) + " (" + layer_text(l) + "): extents must be >= 1");
  };
  if (const auto* c = std::get_if<layer::Conv2D>(&l)) {
    if (!c->kh || !c->kw || !c->cin || !c->cout) bad();
  } else if (const auto* d = std::get_if<layer::Dense>(&l)) {
    if (!d->in || !d->out) bad();
  }
}

}  // namespace

std::string layer_text(const LayerSpec& layer) {
  return std::visit(overloaded{
                        [](const layer::Conv2D& c) {
                          return "conv2d " + std::to_string(c.kh) + " " + std::to_string(c.kw) + " " +
                                 std::to_string(c.cin) + " " + std::to_string(c.cout);
                        },
                        [](const layer::MaxPool2&) { return std::string("maxpool2"); },
                        [](const layer::Flatten&) { return std::string("flatten"); },
                        [](const layer::Dense& d) {
                          return "dense " + std::to_string(d.in) + " " + std::to_string(d.out);
                        },
                        [](const layer::ReLU&) { return std::string("relu"); },
                        [](const layer::Sigmoid&) { return std::string("sigmoid"); },
                    },
                    layer);
}

std::string ArchSpec::to_text() const {
  std::string s = "input";
  for (std::size_t d : input_shape.dims()) s += " " + std::to_string(d);
  s += "\nclasses " + class_names[0] + " " + class_names[1] + "\n";
  for (const auto& l : layers) s += layer_text(l) + "\n";
  return s;
}

ArchSpec ArchSpec::parse(std::string_view text) {
  ArchSpec arch;
  bool have_input = false, have_classes = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;

    const std::string& kw = tok[0];
    auto expect_args = [&](std::size_t n) {
      if (tok.size() != n + 1) {
        throw InvalidArgument("arch line " + std::to_string(line_no) + ": '" + kw + "' takes " + std::to_string(n) +
                              " argument(s)");
      }
    };
    auto ext = [&](std::size_t i) { return parse_extent(tok[i], line_no); };

    if (kw == "input") {
      if (have_input || !arch.layers.empty()) {
        throw InvalidArgument("arch line " + std::to_string(line_no) + ": 'input' must appear once, before layers");
      }
      if (tok.size() < 2 || tok.size() > 5) {
        throw InvalidArgument("arch line " + std::to_string(line_no) + ": 'input' takes 1 to 4 extents");
      }
      std::vector<std::size_t> dims;
      for (std::size_t i = 1; i < tok.size(); ++i) dims.push_back(ext(i));
      arch.input_shape = Shape(std::move(dims));
      have_input = true;
    } else if (kw == "classes") {
      expect_args(2);
      if (have_classes) throw InvalidArgument("arch line " + std::to_string(line_no) + ": duplicate 'classes'");
      arch.class_names = {tok[1], tok[2]};
      have_classes = true;
    } else if (kw == "conv2d") {
      expect_args(4);
      arch.layers.emplace_back(layer::Conv2D{ext(1), ext(2), ext(3), ext(4)});
    } else if (kw == "dense") {
      expect_args(2);
      arch.layers.emplace_back(layer::Dense{ext(1), ext(2)});
    } else if (kw == "maxpool2") {
      expect_args(0);
      arch.layers.emplace_back(layer::MaxPool2{});
    } else if (kw == "flatten") {
      expect_args(0);
      arch.layers.emplace_back(layer::Flatten{});
    } else if (kw == "relu") {
      expect_args(0);
      arch.layers.emplace_back(layer::ReLU{});
    } else if (kw == "sigmoid") {
      expect_args(0);
      arch.layers.emplace_back(layer::Sigmoid{});
    } else {
      throw InvalidArgument("arch line " + std::to_string(line_no) + ": unknown layer '" + kw + "'");
    }
  }
  if (!have_input) throw InvalidArgument("arch text has no 'input' line");
  if (!have_classes) throw InvalidArgument("arch text has no 'classes' line");
  return arch;
}

ArchSpec reference_arch() {
  ArchSpec a;
  a.input_shape = Shape{64, 64, 1};
  a.layers = {layer::Conv2D{3, 3, 1, 8}, layer::ReLU{},       layer::MaxPool2{},      layer::Conv2D{3, 3, 8, 16},
              layer::ReLU{},             layer::MaxPool2{},   layer::Flatten{},       layer::Dense{3136, 32},
              layer::ReLU{},             layer::Dense{32, 1}, layer::Sigmoid{}};
  return a;
}

std::vector<Shape> infer_shapes(const ArchSpec& arch) {
  if (arch.input_shape.rank() == 0) throw ShapeError("architecture has no input shape");
  std::vector<Shape> out;
  out.reserve(arch.layers.size());
  Shape cur = arch.input_shape;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    require_positive(l, i);
    auto fail = [&](const std::string& why) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layer_text(l) + "): " + why + "; input is " + cur.str());
    };
    cur = std::visit(overloaded{
                         [&](const layer::Conv2D& c) {
                           if (cur.rank() != 3) fail("needs a HxWxC input");
                           if (c.kh > cur[0] || c.kw > cur[1]) fail("kernel larger than input");
                           if (c.cin != cur[2]) fail("expects " + std::to_string(c.cin) + " input channels");
                           return Shape{cur[0] - c.kh + 1, cur[1] - c.kw + 1, c.cout};
                         },
                         [&](const layer::MaxPool2&) {
                           if (cur.rank() != 3) fail("needs a HxWxC input");
                           if (cur[0] < 2 || cur[1] < 2) fail("input smaller than the 2x2 window");
                           return Shape{cur[0] / 2, cur[1] / 2, cur[2]};
                         },
                         [&](const layer::Flatten&) { return Shape{cur.numel()}; },
                         [&](const layer::Dense& d) {
                           if (cur.rank() != 1 || cur[0] != d.in) fail("expects a vector of " + std::to_string(d.in));
                           return Shape{d.out};
                         },
                         [&](const layer::ReLU&) { return cur; },
                         [&](const layer::Sigmoid&) { return cur; },
                     },
                     l);
    out.push_back(cur);
  }
  return out;
}

void validate_binary_arch(const ArchSpec& arch) {
  const auto shapes = infer_shapes(arch);
  if (arch.layers.empty() || !std::holds_alternative<layer::Sigmoid>(arch.layers.back()) ||
      shapes.back() != Shape{1}) {
    throw ShapeError("architecture must end with a sigmoid over a single value");
  }
  if (arch.class_names[0].empty() || arch.class_names[1].empty() || arch.class_names[0] == arch.class_names[1]) {
    throw InvalidArgument("architecture needs two distinct, non-empty class names");
  }
}

std::vector<ParamSpec> param_manifest(const ArchSpec& arch) {
  std::vector<ParamSpec> m;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const std::string prefix = std::to_string(i) + ".";
    if (const auto* c = std::get_if<layer::Conv2D>(&arch.layers[i])) {
      m.push_back({prefix + "weight", Shape{c->kh, c->kw, c->cin, c->cout}, c->kh * c->kw * c->cin});
      m.push_back({prefix + "bias", Shape{c->cout}, 0});
    } else if (const auto* d = std::get_if<layer::Dense>(&arch.layers[i])) {
      m.push_back({prefix + "weight", Shape{d->in, d->out}, d->in});
      m.push_back({prefix + "bias", Shape{d->out}, 0});
    }
  }
  return m;
}

std::size_t param_count(const ArchSpec& arch) {
  infer_shapes(arch);
  std::size_t n = 0;
  for (const auto& p : param_manifest(arch)) n += p.shape.numel();
  return n;
}

template <typename T>
void check_params(const ArchSpec& arch, const BasicParamSet<T>& params) {
  const auto manifest = param_manifest(arch);
  if (manifest.size() != params.size()) {
    throw ShapeError("architecture declares " + std::to_string(manifest.size()) + " parameter tensors, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (params[i].name != manifest[i].name || params[i].value.shape() != manifest[i].shape) {
      throw ShapeError("parameter " + std::to_string(i) + ": expected " + manifest[i].name + " " +
                       manifest[i].shape.str() + ", got " + params[i].name + " " + params[i].value.shape().str());
    }
  }
}

ParamSet init_params(const ArchSpec& arch, std::uint64_t seed) {
  infer_shapes(arch);
  ParamSet params;
  for (const auto& spec : param_manifest(arch)) {
    Tensor t(spec.shape);
    if (spec.fan_in > 0) {
      const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(spec.fan_in)));
      Rng rng(derive_seed(seed, spec.name));
      for (float& v : t.data()) v = rng.uniform(-bound, bound);
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

namespace {

// Params are validated by the caller; layer i's tensors sit at a fixed
// position in the manifest order.
template <typename T>
struct LayerParams {
  const BasicTensor<T>* weight = nullptr;
  const BasicTensor<T>* bias = nullptr;
  std::size_t index = 0;  // position of the weight in the param set
};

template <typename T>
std::vector<LayerParams<T>> bind_params(const ArchSpec& arch, const BasicParamSet<T>& params) {
  std::vector<LayerParams<T>> bound(arch.layers.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (std::holds_alternative<layer::Conv2D>(arch.layers[i]) || std::holds_alternative<layer::Dense>(arch.layers[i])) {
      bound[i] = {&params[next].value, &params[next + 1].value, next};
      next += 2;
    }
  }
  return bound;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  BasicTensor<T> y = matmul(x.reshaped(Shape{1, x.size()}), w);
  for (std::size_t o = 0; o < y.size(); ++o) y[o] += b[o];
  y.check_finite("dense forward");
  return y.reshaped(Shape{y.size()});
}

template <typename T>
BasicTensor<T> run_forward(const ArchSpec& arch, const BasicParamSet<T>& params, const BasicTensor<T>& input,
                           ForwardCache<T>* cache) {
  validate_binary_arch(arch);
  check_params(arch, params);
  if (input.shape() != arch.input_shape) {
    throw ShapeError("forward: input shape " + input.shape().str() + " does not match architecture input " +
                     arch.input_shape.str());
  }
  const auto bound = bind_params(arch, params);
  if (cache) {
    cache->inputs.clear();
    cache->pools.assign(arch.layers.size(), std::nullopt);
  }
  BasicTensor<T> cur = input;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (cache) cache->inputs.push_back(cur);
    const LayerSpec& l = arch.layers[i];
    if (std::holds_alternative<layer::Conv2D>(l)) {
      cur = conv2d_forward(cur, *bound[i].weight, *bound[i].bias);
    } else if (std::holds_alternative<layer::MaxPool2>(l)) {
      PoolResult<T> p = maxpool2_forward(cur);
      cur = p.output;
      if (cache) cache->pools[i] = std::move(p);
    } else if (std::holds_alternative<layer::Flatten>(l)) {
      cur = cur.reshaped(Shape{cur.size()});
    } else if (std::holds_alternative<layer::Dense>(l)) {
      cur = dense_forward(cur, *bound[i].weight, *bound[i].bias);
    } else if (std::holds_alternative<layer::ReLU>(l)) {
      cur = relu(cur);
    } else {
      cur = sigmoid(cur);
    }
  }
  if (cache) cache->prob = cur[0];
  return cur;
}

}  // namespace

template <typename T>
ForwardResult<T> forward(const ArchSpec& arch, const BasicParamSet<T>& params, const BasicTensor<T>& input) {
  ForwardResult<T> r{};
  r.prob = run_forward(arch, params, input, &r.cache)[0];
  return r;
}

template <typename T>
T forward_prob(const ArchSpec& arch, const BasicParamSet<T>& params, const BasicTensor<T>& input) {
  return run_forward<T>(arch, params, input, nullptr)[0];
}

template <typename T>
BasicParamSet<T> backward(const ArchSpec& arch, const BasicParamSet<T>& params, const ForwardCache<T>& cache,
                          T dl_dprob) {
  validate_binary_arch(arch);
  check_params(arch, params);
  const auto shapes = infer_shapes(arch);
  if (cache.inputs.size() != arch.layers.size() || cache.pools.size() != arch.layers.size()) {
    throw ShapeError("backward: cache holds " + std::to_string(cache.inputs.size()) + " layers, architecture has " +
                     std::to_string(arch.layers.size()));
  }
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const Shape& expected = i == 0 ? arch.input_shape : shapes[i - 1];
    if (cache.inputs[i].shape() != expected) {
      throw ShapeError("backward: stale cache, layer " + std::to_string(i) + " input is " +
                       cache.inputs[i].shape().str() + ", expected " + expected.str());
    }
    if (std::holds_alternative<layer::MaxPool2>(arch.layers[i]) != cache.pools[i].has_value()) {
      throw ShapeError("backward: stale cache, pooling record mismatch at layer " + std::to_string(i));
    }
  }

  const auto bound = bind_params(arch, params);
  BasicParamSet<T> grads = params.zeros_like();
  // Gradient of prob itself; dl_dprob is applied once at the end so the
  // result is exactly linear in it.
  BasicTensor<T> g(Shape{1}, T(1));
  for (std::size_t i = arch.layers.size(); i-- > 0;) {
    const LayerSpec& l = arch.layers[i];
    const BasicTensor<T>& x = cache.inputs[i];
    if (std::holds_alternative<layer::Conv2D>(l)) {
      Conv2dGrads<T> cg = conv2d_backward(x, *bound[i].weight, g);
      grads[bound[i].index].value = std::move(cg.kernels);
      grads[bound[i].index + 1].value = std::move(cg.bias);
      g = std::move(cg.input);
    } else if (std::holds_alternative<layer::MaxPool2>(l)) {
      g = maxpool2_backward(*cache.pools[i], g);
    } else if (std::holds_alternative<layer::Flatten>(l)) {
      g = g.reshaped(x.shape());
    } else if (const auto* d = std::get_if<layer::Dense>(&l)) {
      const BasicTensor<T>& w = *bound[i].weight;
      BasicTensor<T>& gw = grads[bound[i].index].value;
      for (std::size_t a = 0; a < d->in; ++a) {
        for (std::size_t o = 0; o < d->out; ++o) gw[a * d->out + o] = x[a] * g[o];
      }
      grads[bound[i].index + 1].value = g;
      BasicTensor<T> gx(x.shape());
      for (std::size_t a = 0; a < d->in; ++a) {
        T acc = T(0);
        for (std::size_t o = 0; o < d->out; ++o) acc += w[a * d->out + o] * g[o];
        gx[a] = acc;
      }
      g = std::move(gx);
    } else if (std::holds_alternative<layer::ReLU>(l)) {
      g = relu_backward(x, g);
    } else {
      // d sigmoid / dz = s (1 - s), with s recomputed from the cached input.
      BasicTensor<T> gs(x.shape());
      for (std::size_t k = 0; k < x.size(); ++k) {
        const T s = sigmoid_scalar(x[k]);
        gs[k] = g[k] * s * (T(1) - s);
      }
      g = std::move(gs);
    }
  }
  for (auto& p : grads) {
    for (T& v : p.value.data()) v *= dl_dprob;
    p.value.check_finite("backward (" + p.name + ")");
  }
  return grads;
}

namespace {

// ReLU signs and pooling argmaxes of one forward pass.
std::vector<std::size_t> activation_pattern(const ArchSpec& arch, const ForwardCache<double>& cache) {
  std::vector<std::size_t> pat;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (std::holds_alternative<layer::ReLU>(arch.layers[i])) {
      for (double v : cache.inputs[i].data()) pat.push_back(v > 0.0 ? 1 : 0);
    } else if (cache.pools[i]) {
      pat.insert(pat.end(), cache.pools[i]->argmax.begin(), cache.pools[i]->argmax.end());
    }
  }
  return pat;
}

}  // namespace

GradCheckReport grad_check(const ArchSpec& arch, const ParamSet& params, const Tensor& input, int label,
                           double step) {
  ParamSetD p = params.cast<double>();
  const TensorD x = input.cast<double>();

  const ForwardResult<double> fr = forward(arch, p, x);
  const ParamSetD analytic = backward(arch, p, fr.cache, bce_grad(fr.prob, label));

  const auto base_pattern = activation_pattern(arch, fr.cache);
  bool crossed = false;
  auto loss_at = [&](const ParamSetD& q) {
    const ForwardResult<double> r = forward(arch, q, x);
    if (activation_pattern(arch, r.cache) != base_pattern) crossed = true;
    return bce(r.prob, label);
  };

  GradCheckReport rep;
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].value.size(); ++i) {
      const double orig = p[t].value[i];
      crossed = false;
      p[t].value[i] = orig + step;
      const double up = loss_at(p);
      p[t].value[i] = orig - step;
      const double down = loss_at(p);
      p[t].value[i] = orig;
      if (crossed) {
        ++rep.skipped;
        continue;
      }

      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t].value[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      ++rep.checked;
      if (!(rel <= rep.max_rel_error)) {
        rep.max_rel_error = rel;
        rep.worst_param = p[t].name;
        rep.worst_index = i;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  return rep;
}

#define XRCN_INSTANTIATE(T)                                                                                       \
  template void check_params(const ArchSpec&, const BasicParamSet<T>&);                                           \
  template ForwardResult<T> forward(const ArchSpec&, const BasicParamSet<T>&, const BasicTensor<T>&);             \
  template T forward_prob(const ArchSpec&, const BasicParamSet<T>&, const BasicTensor<T>&);                       \
  template BasicParamSet<T> backward(const ArchSpec&, const BasicParamSet<T>&, const ForwardCache<T>&, T);

XRCN_INSTANTIATE(float)
XRCN_INSTANTIATE(double)

#undef XRCN_INSTANTIATE

}  // namespace xrcn
