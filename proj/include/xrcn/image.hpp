#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "xrcn/tensor.hpp"

namespace xrcn {

/// 8-bit interleaved pixels, 1 (gray) or 3 (RGB) channels.
struct Image8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Decodes PNG or JPEG (sniffed from the signature) to 8-bit RGB. Alpha is
/// dropped. Throws DataError prefixed with `context` on failure.
Image8 decode_image(std::span<const std::uint8_t> bytes, std::string_view context = "image");

/// Luma 0.299 R + 0.587 G + 0.114 B as a [H,W,1] tensor on the 0..255 scale.
Tensor to_luma(const Image8& rgb);

/// Bilinear resize of a [H,W,C] tensor with half-pixel centers and edge
/// clamping. Constant images stay exactly constant.
Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w);

/// decode -> luma -> bilinear resize to size x size -> divide by 255.
Tensor decode_and_resize(std::span<const std::uint8_t> bytes, std::string_view context = "image",
                         std::size_t size = 64);

/// PNG with 8 bits per sample; 1 channel writes grayscale, 3 writes RGB.
std::vector<std::uint8_t> encode_png(const Image8& img);

/// Baseline JPEG, RGB or gray.
std::vector<std::uint8_t> encode_jpeg(const Image8& img, int quality = 95);

/// Quantizes a [H,W,1] tensor in [0,1] to 8-bit gray (round to nearest).
Image8 to_gray8(const Tensor& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace xrcn
