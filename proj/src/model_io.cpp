#include "xrcn/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "xrcn/data.hpp"

namespace xrcn {

namespace {

using json = nlohmann::json;
using Kind = ModelFormatError::Kind;

constexpr std::uint8_t kMagic[4] = {'X', 'R', 'C', 'N'};
constexpr std::size_t kPrefixBytes = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

[[noreturn]] void fail(Kind kind, const std::string& msg) { throw ModelFormatError(kind, msg); }

}  // namespace

std::vector<std::uint8_t> serialize_model(const ArchSpec& arch, const ParamSet& params) {
  validate_binary_arch(arch);
  check_params(arch, params);

  json header;
  header["arch"] = arch.to_text();
  header["class_names"] = {arch.class_names[0], arch.class_names[1]};
  header["preprocessing"] = {{"resize", kImageSize}, {"grayscale", true}, {"rescale", 255}};
  json manifest = json::array();
  for (const auto& p : params) manifest.push_back({{"name", p.name}, {"shape", p.value.shape().dims()}});
  header["params"] = std::move(manifest);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 4 * params.total_elements());
  for (const auto& p : params) {
    for (float v : p.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(Kind::kBadMagic, "not a model file (bad magic)");
  }
  if (bytes.size() < kPrefixBytes) fail(Kind::kBadHeader, "model file truncated inside the fixed header");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kModelFormatVersion) {
    fail(Kind::kUnsupportedVersion, "unsupported model format version " + std::to_string(version) + " (expected " +
                                        std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint32_t header_len = get_u32(bytes.data() + 8);
  if (bytes.size() - kPrefixBytes < header_len) {
    fail(Kind::kBadHeader, "header length " + std::to_string(header_len) + " exceeds file size");
  }

  Model m;
  std::vector<std::pair<std::string, Shape>> manifest;
  try {
    const json header =
        json::parse(bytes.begin() + kPrefixBytes, bytes.begin() + kPrefixBytes + header_len);
    m.arch = ArchSpec::parse(header.at("arch").get<std::string>());
    const auto names = header.at("class_names").get<std::vector<std::string>>();
    if (names.size() != 2 || names[0] != m.arch.class_names[0] || names[1] != m.arch.class_names[1]) {
      fail(Kind::kBadHeader, "class_names disagree with the architecture text");
    }
    const json& pre = header.at("preprocessing");
    if (pre.at("resize").get<std::size_t>() != kImageSize || !pre.at("grayscale").get<bool>() ||
        pre.at("rescale").get<int>() != 255) {
      fail(Kind::kBadHeader, "unsupported preprocessing block " + pre.dump());
    }
    for (const json& e : header.at("params")) {
      manifest.emplace_back(e.at("name").get<std::string>(), Shape(e.at("shape").get<std::vector<std::size_t>>()));
    }
    validate_binary_arch(m.arch);
  } catch (const ModelFormatError&) {
    throw;
  } catch (const std::exception& e) {
    fail(Kind::kBadHeader, std::string("malformed model header: ") + e.what());
  }

  const auto declared = param_manifest(m.arch);
  if (declared.size() != manifest.size()) {
    fail(Kind::kManifestMismatch, "manifest lists " + std::to_string(manifest.size()) +
                                      " tensors, architecture declares " + std::to_string(declared.size()));
  }
  std::size_t floats = 0;
  for (std::size_t i = 0; i < declared.size(); ++i) {
    if (manifest[i].first != declared[i].name || manifest[i].second != declared[i].shape) {
      fail(Kind::kManifestMismatch, "manifest entry " + std::to_string(i) + " (" + manifest[i].first + " " +
                                        manifest[i].second.str() + ") does not match architecture (" +
                                        declared[i].name + " " + declared[i].shape.str() + ")");
    }
    floats += declared[i].shape.numel();
  }

  const std::size_t payload = bytes.size() - kPrefixBytes - header_len;
  if (payload != 4 * floats) {
    fail(Kind::kPayloadLength, "payload is " + std::to_string(payload) + " bytes, manifest needs " +
                                   std::to_string(4 * floats));
  }

  const std::uint8_t* p = bytes.data() + kPrefixBytes + header_len;
  for (const auto& [name, shape] : manifest) {
    std::vector<float> v(shape.numel());
    for (float& x : v) {
      x = std::bit_cast<float>(get_u32(p));
      p += 4;
    }
    try {
      m.params.add(name, Tensor(shape, std::move(v)));
    } catch (const NonFiniteError&) {
      fail(Kind::kBadHeader, "parameter " + name + " holds non-finite values");
    }
  }
  return m;
}

void save_model(const ArchSpec& arch, const ParamSet& params, const std::filesystem::path& path) {
  const auto bytes = serialize_model(arch, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Kind::kIo, "cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Kind::kIo, "error writing model file " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Kind::kIo, "cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes);
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace xrcn
