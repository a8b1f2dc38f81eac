#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "xrcn/data.hpp"
#include "xrcn/image.hpp"

namespace xrcn {

namespace fs = std::filesystem;

namespace {

constexpr double kNoiseSigma = 0.03;

// Dim background with one bright Gaussian blob near the center.
Tensor make_blob(Rng& rng) {
  const double n = static_cast<double>(kImageSize);
  const double background = 0.06 + 0.06 * rng.uniform01_double();
  const double amplitude = 0.6 + 0.3 * rng.uniform01_double();
  const double sigma = 7.0 + 5.0 * rng.uniform01_double();
  const double cy = (n - 1) / 2 + 8.0 * (rng.uniform01_double() - 0.5);
  const double cx = (n - 1) / 2 + 8.0 * (rng.uniform01_double() - 0.5);
  Tensor img(Shape{kImageSize, kImageSize, 1});
  for (std::size_t y = 0; y < kImageSize; ++y) {
    for (std::size_t x = 0; x < kImageSize; ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      const double v = background + amplitude * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) +
                       kNoiseSigma * rng.normal();
      img.at(y, x, 0) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return img;
}

// Sinusoidal grating whose stripes run roughly diagonally.
Tensor make_stripes(Rng& rng) {
  const double period = 7.0 + 5.0 * rng.uniform01_double();
  const double angle = (45.0 + 20.0 * (rng.uniform01_double() - 0.5)) * std::numbers::pi / 180.0;
  const double phase = 2 * std::numbers::pi * rng.uniform01_double();
  const double contrast = 0.3 + 0.1 * rng.uniform01_double();
  const double ux = std::cos(angle), uy = std::sin(angle);
  Tensor img(Shape{kImageSize, kImageSize, 1});
  for (std::size_t y = 0; y < kImageSize; ++y) {
    for (std::size_t x = 0; x < kImageSize; ++x) {
      const double t = static_cast<double>(x) * ux + static_cast<double>(y) * uy;
      const double v = 0.5 + contrast * std::sin(2 * std::numbers::pi * t / period + phase) + kNoiseSigma * rng.normal();
      img.at(y, x, 0) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return img;
}

}  // namespace

Dataset synth_generate(std::size_t n_per_class, std::uint64_t seed, const fs::path& out_dir) {
  if (n_per_class == 0) throw InvalidArgument("synth_generate: n_per_class must be >= 1");
  static constexpr const char* kPrefix[2] = {"normal", "covid"};

  Dataset ds;
  for (int label = 0; label < 2; ++label) {
    const fs::path dir = out_dir / kClassNames[label];
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("synth_generate: cannot create " + dir.string() + ": " + ec.message());

    for (std::size_t i = 0; i < n_per_class; ++i) {
      Rng rng(derive_seed(seed, std::string("synth/") + kClassNames[label], i));
      const Tensor img = label == 0 ? make_blob(rng) : make_stripes(rng);
      const Image8 gray = to_gray8(img);

      char name[64];
      std::snprintf(name, sizeof name, "%s_%06zu.png", kPrefix[label], i);
      const fs::path path = dir / name;
      write_file(path, encode_png(gray));

      Tensor stored(Shape{kImageSize, kImageSize, 1});
      for (std::size_t k = 0; k < stored.size(); ++k) stored[k] = static_cast<float>(gray.pixels[k]) / 255.0f;
      ds.records.push_back({std::move(stored), label, path.string()});
    }
  }
  return ds;
}

}  // namespace xrcn
