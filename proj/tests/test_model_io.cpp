#include <doctest.h>

#include <cstring>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "xrcn/error.hpp"
#include "xrcn/image.hpp"
#include "xrcn/model_io.hpp"
#include "xrcn/rng.hpp"

using namespace xrcn;
namespace fs = std::filesystem;

namespace {

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

void write_u32(std::vector<std::uint8_t>& b, std::size_t off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

ModelFormatError::Kind kind_of(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const ModelFormatError& e) {
    return e.kind();
  }
  FAIL("expected ModelFormatError");
  return ModelFormatError::Kind::kIo;
}

// Re-encodes the container around an edited header.
std::vector<std::uint8_t> with_header(const std::vector<std::uint8_t>& bytes, const nlohmann::json& header) {
  const std::uint32_t old_len = read_u32(bytes, 8);
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 12);
  write_u32(out, 8, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), bytes.begin() + 12 + old_len, bytes.end());
  return out;
}

nlohmann::json header_of(const std::vector<std::uint8_t>& bytes) {
  const std::uint32_t len = read_u32(bytes, 8);
  return nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
}

}  // namespace

TEST_CASE("container layout") {
  const ArchSpec arch = reference_arch();
  const ParamSet p = init_params(arch, 5);
  const auto bytes = serialize_model(arch, p);
  CHECK(std::memcmp(bytes.data(), "XRCN", 4) == 0);
  CHECK(read_u32(bytes, 4) == 1);
  const std::uint32_t len = read_u32(bytes, 8);
  CHECK(bytes.size() == 12 + len + 4 * 101665);

  const nlohmann::json h = header_of(bytes);
  CHECK(h.at("arch").get<std::string>() == arch.to_text());
  CHECK(h.at("class_names") == nlohmann::json::array({"NORMAL", "COVID-19"}));
  CHECK(h.at("preprocessing").at("resize") == 64);
  CHECK(h.at("preprocessing").at("grayscale") == true);
  CHECK(h.at("preprocessing").at("rescale") == 255);
  REQUIRE(h.at("params").size() == 8);
  CHECK(h.at("params")[0].at("name") == "0.weight");
  CHECK(h.at("params")[0].at("shape") == nlohmann::json::array({3, 3, 1, 8}));
  CHECK(h.at("params")[7].at("name") == "9.bias");

  // First payload value is little-endian float32 of 0.weight[0].
  float first;
  const std::uint8_t* q = bytes.data() + 12 + len;
  const std::uint32_t bits = q[0] | q[1] << 8 | q[2] << 16 | static_cast<std::uint32_t>(q[3]) << 24;
  std::memcpy(&first, &bits, 4);
  CHECK(first == p[0].value[0]);

  CHECK(serialize_model(arch, p) == bytes);
}

TEST_CASE("round trip is bit-exact") {
  const ArchSpec arch = reference_arch();
  const ParamSet p = init_params(arch, 6);
  const Model m = deserialize_model(serialize_model(arch, p));
  CHECK(m.arch.to_text() == arch.to_text());
  CHECK(m.params == p);

  const fs::path path = fs::temp_directory_path() / "xrcn_test_model_io.xrcn";
  save_model(arch, p, path);
  const Model loaded = load_model(path);
  CHECK(loaded.params == p);
  CHECK(read_file(path) == serialize_model(arch, p));
  fs::remove(path);
  try {
    load_model(path);
    FAIL("expected ModelFormatError");
  } catch (const ModelFormatError& e) {
    CHECK(e.kind() == ModelFormatError::Kind::kIo);
  }
}

TEST_CASE("round trip over random small architectures") {
  Rng pick(31);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t in = 1 + pick.below(20), hidden = 1 + pick.below(9), c = 1 + pick.below(3);
    ArchSpec arch;
    if (seed % 2 == 0) {
      arch.input_shape = Shape{in};
      arch.layers = {layer::Dense{in, hidden}, layer::ReLU{}, layer::Dense{hidden, 1}, layer::Sigmoid{}};
    } else {
      const std::size_t n = 6 + 2 * pick.below(3);
      const std::size_t flat = ((n - 2) / 2) * ((n - 2) / 2) * c;
      arch.input_shape = Shape{n, n, 1};
      arch.layers = {layer::Conv2D{3, 3, 1, c}, layer::ReLU{}, layer::MaxPool2{}, layer::Flatten{},
                     layer::Dense{flat, 1}, layer::Sigmoid{}};
    }
    ParamSet p = init_params(arch, seed);
    Rng rng(seed);
    for (auto& e : p)
      for (float& v : e.value.data()) v = static_cast<float>(rng.normal());
    const auto bytes = serialize_model(arch, p);
    const Model m = deserialize_model(bytes);
    CHECK(m.arch.to_text() == arch.to_text());
    CHECK(m.params == p);
    CHECK(serialize_model(m.arch, m.params) == bytes);
  }
}

TEST_CASE("corrupt containers are rejected by kind") {
  using K = ModelFormatError::Kind;
  const ArchSpec arch = reference_arch();
  const auto good = serialize_model(arch, init_params(arch, 1));

  auto bad = good;
  bad[0] = 'Y';
  CHECK(kind_of(bad) == K::kBadMagic);
  CHECK(kind_of(std::vector<std::uint8_t>{'X', 'R'}) == K::kBadMagic);

  bad = good;
  write_u32(bad, 4, 2);
  CHECK(kind_of(bad) == K::kUnsupportedVersion);

  bad = good;
  bad.resize(bad.size() - 4);
  CHECK(kind_of(bad) == K::kPayloadLength);
  bad = good;
  bad.push_back(0);
  CHECK(kind_of(bad) == K::kPayloadLength);

  bad = good;
  write_u32(bad, 8, static_cast<std::uint32_t>(good.size()));
  CHECK(kind_of(bad) == K::kBadHeader);
  bad = good;
  bad[12] = '!';
  CHECK(kind_of(bad) == K::kBadHeader);

  nlohmann::json h = header_of(good);
  h["params"][0]["shape"] = nlohmann::json::array({3, 3, 1, 9});
  CHECK(kind_of(with_header(good, h)) == K::kManifestMismatch);
  h = header_of(good);
  h["params"][1]["name"] = "0.beta";
  CHECK(kind_of(with_header(good, h)) == K::kManifestMismatch);
  h = header_of(good);
  h["arch"] = "input 64 64 1\nbogus 1\n";
  CHECK(kind_of(with_header(good, h)) == K::kBadHeader);
  h = header_of(good);
  h.erase("params");
  CHECK(kind_of(with_header(good, h)) == K::kBadHeader);

  // Non-finite payload values are rejected too.
  bad = good;
  write_u32(bad, bad.size() - 4, 0x7fc00000u);
  CHECK_THROWS_AS(deserialize_model(bad), ModelFormatError);
}
