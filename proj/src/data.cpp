#include "xrcn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <numeric>

#include "xrcn/image.hpp"

namespace xrcn {

namespace fs = std::filesystem;

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const ImageRecord& r) { return r.label == label; }));
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) {
    warnings->push_back(std::move(msg));
  } else {
    std::cerr << "warning: " << msg << "\n";
  }
}

}  // namespace

Dataset load_dataset(const fs::path& root, std::vector<std::string>* warnings) {
  Dataset ds;
  for (int label = 0; label < 2; ++label) {
    const fs::path dir = root / kClassNames[label];
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      throw DataError("dataset " + root.string() + ": missing class directory " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (!has_image_extension(entry.path())) {
        warn(warnings, "skipping " + entry.path().string() + ": not a .png/.jpg/.jpeg file");
        continue;
      }
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    std::size_t loaded = 0;
    for (const auto& f : files) {
      try {
        const auto bytes = read_file(f);
        ds.records.push_back({decode_and_resize(bytes, f.string(), kImageSize), label, f.string()});
        ++loaded;
      } catch (const DataError& e) {
        warn(warnings, std::string("skipping ") + e.what());
      }
    }
    if (loaded == 0) {
      throw DataError("dataset " + root.string() + ": class directory " + dir.string() + " has no decodable images");
    }
  }
  return ds;
}

DatasetSplit split_stratified(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split_stratified: train fraction must lie in (0,1)");
  }
  DatasetSplit out;
  out.train.class_names = out.test.class_names = ds.class_names;
  for (int label = 0; label < 2; ++label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      if (ds.records[i].label == label) idx.push_back(i);
    }
    if (idx.size() < 2) {
      throw DataError("split_stratified: class " + ds.class_names[label] + " has " + std::to_string(idx.size()) +
                      " record(s), need at least 2");
    }
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(label)));
    rng.shuffle(idx);
    const auto n = static_cast<double>(idx.size());
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * n + 0.5));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_train ? out.train : out.test).records.push_back(ds.records[idx[k]]);
    }
  }
  return out;
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t shuffle_seed,
                           std::uint64_t epoch) {
  if (batch_size == 0) throw InvalidArgument("batches: batch size must be >= 1");
  if (ds.empty()) throw InvalidArgument("batches: empty dataset");
  const Shape& img_shape = ds.records.front().pixels.shape();

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(shuffle_seed, "batches", epoch));
  rng.shuffle(order);

  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - start);
    std::vector<std::size_t> dims{n};
    dims.insert(dims.end(), img_shape.dims().begin(), img_shape.dims().end());
    Batch b{Tensor(Shape(dims)), {}, {}};
    const std::size_t per = img_shape.numel();
    for (std::size_t k = 0; k < n; ++k) {
      const ImageRecord& r = ds.records[order[start + k]];
      if (r.pixels.shape() != img_shape) {
        throw ShapeError("batches: record " + r.source_path + " has shape " + r.pixels.shape().str() +
                         ", expected " + img_shape.str());
      }
      std::copy(r.pixels.data().begin(), r.pixels.data().end(), b.images.data().begin() + k * per);
      b.labels.push_back(r.label);
      b.indices.push_back(order[start + k]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

Tensor batch_item(const Tensor& batch, std::size_t b) {
  if (batch.rank() < 2 || b >= batch.dim(0)) throw ShapeError("batch_item: index out of range");
  std::vector<std::size_t> dims(batch.shape().dims().begin() + 1, batch.shape().dims().end());
  Shape s(dims);
  const std::size_t per = s.numel();
  std::vector<float> v(batch.data().begin() + b * per, batch.data().begin() + (b + 1) * per);
  return Tensor(std::move(s), std::move(v));
}

}  // namespace xrcn
