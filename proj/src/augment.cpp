#include <algorithm>
#include <cmath>
#include <numbers>

#include "xrcn/data.hpp"

namespace xrcn {

void AugmentConfig::validate() const {
  if (!(rotation_degrees >= 0.0f) || !std::isfinite(rotation_degrees)) {
    throw InvalidArgument("augment: rotation range must be finite and >= 0");
  }
  if (!(zoom_lo > 0.0f && zoom_lo <= 1.0f && zoom_hi >= 1.0f && std::isfinite(zoom_hi))) {
    throw InvalidArgument("augment: zoom range must satisfy 0 < lo <= 1 <= hi");
  }
  if (!(horizontal_flip_prob >= 0.0f && horizontal_flip_prob <= 1.0f)) {
    throw InvalidArgument("augment: flip probability must lie in [0,1]");
  }
}

namespace {

void require_image(const Tensor& img, const char* op) {
  if (img.rank() != 3) throw ShapeError(std::string(op) + ": expected [H,W,C], got " + img.shape().str());
}

// Coordinates within this distance of an integer are snapped to it, so
// right-angle rotations land exactly on the pixel grid.
constexpr double kSnap = 1e-9;

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

float lerp_bounded(float a, float b, float t) {
  const float v = a + (b - a) * t;
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

// Bilinear read at (sy, sx); neighbours outside the image read as 0.
float sample(const Tensor& img, double sy, double sx, std::size_t ch) {
  const auto h = static_cast<long long>(img.dim(0));
  const auto w = static_cast<long long>(img.dim(1));
  sy = snap(sy);
  sx = snap(sx);
  const double fy = std::floor(sy), fx = std::floor(sx);
  if (fy < -1.0 || fx < -1.0 || fy > static_cast<double>(h) || fx > static_cast<double>(w)) return 0.0f;
  const auto y0 = static_cast<long long>(fy), x0 = static_cast<long long>(fx);
  const auto ty = static_cast<float>(sy - fy), tx = static_cast<float>(sx - fx);
  auto px = [&](long long y, long long x) -> float {
    if (y < 0 || x < 0 || y >= h || x >= w) return 0.0f;
    return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), ch);
  };
  const float top = lerp_bounded(px(y0, x0), px(y0, x0 + 1), tx);
  const float bot = lerp_bounded(px(y0 + 1, x0), px(y0 + 1, x0 + 1), tx);
  return lerp_bounded(top, bot, ty);
}

// Fills every output pixel from source coordinates given by `map(y, x)`.
template <typename Map>
Tensor resample(const Tensor& img, Map map) {
  Tensor out(img.shape());
  for (std::size_t y = 0; y < img.dim(0); ++y) {
    for (std::size_t x = 0; x < img.dim(1); ++x) {
      const auto [sy, sx] = map(static_cast<double>(y), static_cast<double>(x));
      for (std::size_t c = 0; c < img.dim(2); ++c) out.at(y, x, c) = sample(img, sy, sx, c);
    }
  }
  return out;
}

}  // namespace

AugmentParams sample_augment(const AugmentConfig& cfg, Rng& rng) {
  AugmentParams p;
  p.flip = rng.bernoulli(cfg.horizontal_flip_prob);
  p.angle_degrees = rng.uniform(-cfg.rotation_degrees, cfg.rotation_degrees);
  p.zoom = rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
  return p;
}

Tensor flip_horizontal(const Tensor& img) {
  require_image(img, "flip_horizontal");
  Tensor out(img.shape());
  const std::size_t w = img.dim(1);
  for (std::size_t y = 0; y < img.dim(0); ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < img.dim(2); ++c) out.at(y, x, c) = img.at(y, w - 1 - x, c);
    }
  }
  return out;
}

Tensor rotate(const Tensor& img, float degrees) {
  require_image(img, "rotate");
  if (degrees == 0.0f) return img;
  const double rad = static_cast<double>(degrees) * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (static_cast<double>(img.dim(0)) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.dim(1)) - 1.0) / 2.0;
  // Inverse map: the output pixel at offset (dx, dy) from the center reads
  // the input rotated back by -degrees.
  return resample(img, [&](double y, double x) {
    const double dx = x - cx, dy = y - cy;
    return std::pair{cy + dx * s + dy * c, cx + dx * c - dy * s};
  });
}

Tensor zoom(const Tensor& img, float factor) {
  require_image(img, "zoom");
  if (!(factor > 0.0f)) throw InvalidArgument("zoom: factor must be positive");
  if (factor == 1.0f) return img;
  const double cy = (static_cast<double>(img.dim(0)) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.dim(1)) - 1.0) / 2.0;
  const double inv = 1.0 / static_cast<double>(factor);
  return resample(img, [&](double y, double x) { return std::pair{cy + (y - cy) * inv, cx + (x - cx) * inv}; });
}

Tensor apply_augment(const Tensor& img, const AugmentParams& p) {
  Tensor out = p.flip ? flip_horizontal(img) : img;
  out = rotate(out, p.angle_degrees);
  return zoom(out, p.zoom);
}

Tensor augment(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  if (!cfg.enabled) return img;
  cfg.validate();
  return apply_augment(img, sample_augment(cfg, rng));
}

}  // namespace xrcn
