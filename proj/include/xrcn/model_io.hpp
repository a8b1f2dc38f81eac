#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xrcn/nn.hpp"

namespace xrcn {

/**
 * Model container (.xrcn), all integers little-endian:
 *
 *   offset 0   4 bytes  magic "XRCN"
 *   offset 4   u32      format version (1)
 *   offset 8   u32      header length N
 *   offset 12  N bytes  UTF-8 JSON header
 *   offset 12+N         payload: float32 LE values, tensors in manifest order
 *
 * The header object has keys "arch" (canonical arch text), "class_names",
 * "preprocessing" {"grayscale", "rescale", "resize"} and "params", a list of
 * {"name", "shape"} in declaration order.
 */
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct Model {
  ArchSpec arch;
  ParamSet params;
};

std::vector<std::uint8_t> serialize_model(const ArchSpec& arch, const ParamSet& params);

/// Throws ModelFormatError with the kind of the first failed check.
Model deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ArchSpec& arch, const ParamSet& params, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace xrcn
