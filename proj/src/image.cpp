#include "xrcn/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace xrcn {

namespace {

bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF; }

Image8 decode_png(std::span<const std::uint8_t> bytes, std::string_view context) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw DataError(std::string(context) + ": cannot decode PNG: " + img.message);
  }
  img.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw DataError(std::string(context) + ": cannot decode PNG: " + msg);
  }
  Image8 out{img.height, img.width, 3, {}};
  out.pixels.resize(out.height * out.width * 3);
  for (std::size_t i = 0; i < out.height * out.width; ++i) {
    std::copy_n(&rgba[i * 4], 3, &out.pixels[i * 3]);
  }
  png_image_free(&img);
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

// No C++ objects with destructors may live between setjmp and longjmp here.
bool decode_jpeg_raw(std::span<const std::uint8_t> bytes, Image8& out, std::vector<std::uint8_t>& buf,
                     char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.pub.emit_message = jpeg_silent;
  if (setjmp(jerr.jump)) {
    std::strncpy(message, jerr.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.height = cinfo.output_height;
  out.width = cinfo.output_width;
  out.channels = 3;
  buf.resize(out.height * out.width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image8 decode_jpeg(std::span<const std::uint8_t> bytes, std::string_view context) {
  Image8 out;
  std::vector<std::uint8_t> buf;
  char message[JMSG_LENGTH_MAX] = {0};
  if (!decode_jpeg_raw(bytes, out, buf, message)) {
    throw DataError(std::string(context) + ": cannot decode JPEG: " + message);
  }
  out.pixels = std::move(buf);
  return out;
}

bool encode_jpeg_raw(const Image8& img, int quality, unsigned char** mem, unsigned long* size, char* message) {
  jpeg_compress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.pub.emit_message = jpeg_silent;
  if (setjmp(jerr.jump)) {
    std::strncpy(message, jerr.message, JMSG_LENGTH_MAX);
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, mem, size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = static_cast<int>(img.channels);
  cinfo.in_color_space = img.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(img.pixels.data() + static_cast<std::size_t>(cinfo.next_scanline) *
                                                              img.width * img.channels);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

void check_image8(const Image8& img, const char* op) {
  if (img.height == 0 || img.width == 0 || (img.channels != 1 && img.channels != 3) ||
      img.pixels.size() != img.height * img.width * img.channels) {
    throw InvalidArgument(std::string(op) + ": inconsistent image buffer");
  }
}

}  // namespace

Image8 decode_image(std::span<const std::uint8_t> bytes, std::string_view context) {
  if (is_png(bytes)) return decode_png(bytes, context);
  if (is_jpeg(bytes)) return decode_jpeg(bytes, context);
  throw DataError(std::string(context) + ": not a PNG or JPEG file");
}

Tensor to_luma(const Image8& rgb) {
  check_image8(rgb, "to_luma");
  Tensor out(Shape{rgb.height, rgb.width, 1});
  for (std::size_t i = 0; i < rgb.height * rgb.width; ++i) {
    if (rgb.channels == 1) {
      out[i] = rgb.pixels[i];
      continue;
    }
    const std::uint8_t* p = &rgb.pixels[i * 3];
    // Integer weights keep gray inputs (R = G = B) exact.
    out[i] = static_cast<float>((299.0 * p[0] + 587.0 * p[1] + 114.0 * p[2]) / 1000.0);
  }
  return out;
}

Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w) {
  if (img.rank() != 3) throw ShapeError("resize_bilinear: expected [H,W,C], got " + img.shape().str());
  const std::size_t in_h = img.dim(0), in_w = img.dim(1), c = img.dim(2);
  Tensor out(Shape{out_h, out_w, c});

  struct Tap {
    std::size_t i0, i1;
    float t;
  };
  auto taps = [](std::size_t in, std::size_t outn) {
    std::vector<Tap> v(outn);
    const double scale = static_cast<double>(in) / static_cast<double>(outn);
    for (std::size_t o = 0; o < outn; ++o) {
      double s = (static_cast<double>(o) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      v[o] = {i0, std::min(i0 + 1, in - 1), static_cast<float>(s - static_cast<double>(i0))};
    }
    return v;
  };
  const auto ty = taps(in_h, out_h);
  const auto tx = taps(in_w, out_w);
  auto lerp = [](float a, float b, float t) { return a + (b - a) * t; };
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const float top = lerp(img.at(ty[y].i0, tx[x].i0, ch), img.at(ty[y].i0, tx[x].i1, ch), tx[x].t);
        const float bot = lerp(img.at(ty[y].i1, tx[x].i0, ch), img.at(ty[y].i1, tx[x].i1, ch), tx[x].t);
        out.at(y, x, ch) = lerp(top, bot, ty[y].t);
      }
    }
  }
  return out;
}

Tensor decode_and_resize(std::span<const std::uint8_t> bytes, std::string_view context, std::size_t size) {
  Tensor t = resize_bilinear(to_luma(decode_image(bytes, context)), size, size);
  for (float& v : t.data()) v = std::clamp(v / 255.0f, 0.0f, 1.0f);
  return t;
}

std::vector<std::uint8_t> encode_png(const Image8& img) {
  check_image8(img, "encode_png");
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw DataError(std::string("encode_png: ") + pi.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw DataError(std::string("encode_png: ") + pi.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const Image8& img, int quality) {
  check_image8(img, "encode_jpeg");
  unsigned char* mem = nullptr;
  unsigned long size = 0;
  char message[JMSG_LENGTH_MAX] = {0};
  const bool ok = encode_jpeg_raw(img, quality, &mem, &size, message);
  std::vector<std::uint8_t> out;
  if (ok) out.assign(mem, mem + size);
  std::free(mem);
  if (!ok) throw DataError(std::string("encode_jpeg: ") + message);
  return out;
}

Image8 to_gray8(const Tensor& img) {
  if (img.rank() != 3 || img.dim(2) != 1) throw ShapeError("to_gray8: expected [H,W,1], got " + img.shape().str());
  Image8 out{img.dim(0), img.dim(1), 1, std::vector<std::uint8_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("error reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("error writing " + path.string());
}

}  // namespace xrcn
