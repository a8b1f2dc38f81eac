#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xrcn/rng.hpp"
#include "xrcn/tensor.hpp"

namespace xrcn {

/// Side length of preprocessed images.
inline constexpr std::size_t kImageSize = 64;

/// Label 0 and label 1; also the dataset subdirectory names.
inline const std::array<std::string, 2> kClassNames{"NORMAL", "COVID-19"};

struct ImageRecord {
  Tensor pixels;  // [64,64,1], values in [0,1]
  int label = 0;  // 0 = NORMAL, 1 = COVID-19
  std::string source_path;
};

struct Dataset {
  std::vector<ImageRecord> records;
  std::array<std::string, 2> class_names = kClassNames;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  std::size_t count_label(int label) const;
  std::vector<int> labels() const;
};

/**
 * Reads `<root>/NORMAL` and `<root>/COVID-19`.
 *
 * Every decodable .png/.jpg/.jpeg file (extension case-insensitive) directly
 * inside a class directory becomes a record. Records are ordered by class
 * index, then by file name. Other files and undecodable images are skipped
 * with a message appended to `warnings` (or written to stderr when it is
 * null). Throws DataError for a missing class directory or a class with no
 * usable image.
 */
Dataset load_dataset(const std::filesystem::path& root, std::vector<std::string>* warnings = nullptr);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/**
 * Per class: shuffle with an Rng seeded from (seed, class), then the first
 * floor(fraction * n + 0.5) records go to train, the rest to test. The count
 * is kept within [1, n - 1] so both sides hold every class. Needs at least
 * two records per class.
 */
DatasetSplit split_stratified(const Dataset& ds, double train_fraction, std::uint64_t seed);

struct AugmentConfig {
  float rotation_degrees = 15.0f;
  float zoom_lo = 0.9f;
  float zoom_hi = 1.1f;
  float horizontal_flip_prob = 0.5f;
  bool enabled = true;

  void validate() const;
};

/// One concrete draw of augmentation parameters.
struct AugmentParams {
  bool flip = false;
  float angle_degrees = 0.0f;
  float zoom = 1.0f;
};

/// Draws flip, then angle, then zoom (always three draws).
AugmentParams sample_augment(const AugmentConfig& cfg, Rng& rng);

Tensor flip_horizontal(const Tensor& img);

/// Counter-clockwise (as displayed, rows growing downward) rotation about the
/// image center. Bilinear sampling; samples outside the image read as 0.
Tensor rotate(const Tensor& img, float degrees);

/// Central zoom; factor > 1 magnifies. Bilinear, outside reads as 0.
Tensor zoom(const Tensor& img, float factor);

/// Flip, rotate, zoom in that order.
Tensor apply_augment(const Tensor& img, const AugmentParams& p);

/// Returns `img` unchanged (and draws nothing) when cfg.enabled is false.
Tensor augment(const Tensor& img, const AugmentConfig& cfg, Rng& rng);

struct Batch {
  Tensor images;  // [B,H,W,C]
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // positions in the source dataset
};

/// Shuffles with an Rng seeded from (shuffle_seed, epoch) and cuts batches;
/// the last batch may be short.
std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t shuffle_seed,
                           std::uint64_t epoch);

/// Image b of a [B,H,W,C] batch as [H,W,C].
Tensor batch_item(const Tensor& batch, std::size_t b);

/**
 * Writes n_per_class synthetic 64x64 8-bit gray PNGs per class in
 * load_dataset's layout and returns the dataset exactly as load_dataset
 * would read it back.
 *
 * NORMAL images hold a bright Gaussian blob near the center; COVID-19 images
 * hold a diagonal stripe grating. Blob size, position, stripe period,
 * angle, phase, and noise are drawn per image from the seed.
 */
Dataset synth_generate(std::size_t n_per_class, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace xrcn
