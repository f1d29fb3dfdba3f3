#include "paintlab/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "paintlab/error.hpp"

namespace paintlab {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw ConfigError("cannot open " + path.string());
  return f;
}

}  // namespace

Image to_image(const Tensor& t) {
  if (t.rank() != 4 || t.dim(0) != 1) throw ShapeError("to_image expects [1,C,H,W], got " + to_string(t.shape()));
  const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
  Image img(w, h, c);
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) img.at(y, x, k) = t[(k * h + y) * w + x];
  return img;
}

Tensor to_tensor(const Image& img) {
  std::vector<double> v(img.data.size());
  for (std::size_t k = 0; k < img.channels; ++k)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x)
        v[(k * img.height + y) * img.width + x] = img.at(y, x, k);
  return Tensor({1, img.channels, img.height, img.width}, std::move(v));
}

namespace {

// libpng reports errors by longjmp, so the setjmp frames below own no C++ objects.
bool encode_png(std::FILE* f, const png_byte* bytes, png_uint_32 width, png_uint_32 height, int channels) {
  static constexpr int kColor[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                   PNG_COLOR_TYPE_RGB_ALPHA};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, width, height, 8, kColor[channels - 1], PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < height; ++y)
    png_write_row(png, bytes + static_cast<std::size_t>(y) * width * static_cast<std::size_t>(channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct PngHeader {
  png_uint_32 width = 0, height = 0;
  int channels = 0;
};

// Two-phase read: first call with bytes == nullptr fills the header.
bool decode_png(std::FILE* f, PngHeader* header, png_byte* bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  header->width = png_get_image_width(png, info);
  header->height = png_get_image_height(png, info);
  header->channels = png_get_channels(png, info);
  if (bytes) {
    const std::size_t stride = static_cast<std::size_t>(header->width) * static_cast<std::size_t>(header->channels);
    for (png_uint_32 y = 0; y < header->height; ++y) png_read_row(png, bytes + y * stride, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

File open_png(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ConfigError(path.string() + " is not a PNG file");
  return f;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels < 1 || img.channels > 4 || img.width == 0 || img.height == 0)
    throw ShapeError("write_png needs a non-empty image with 1-4 channels");
  std::vector<png_byte> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = img.data[i];
    bytes[i] = static_cast<png_byte>(std::lround((std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0) * 255.0));
  }
  File f = open_file(path, "wb");
  if (!encode_png(f.get(), bytes.data(), static_cast<png_uint_32>(img.width),
                  static_cast<png_uint_32>(img.height), static_cast<int>(img.channels)))
    throw Error("failed writing " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  PngHeader header;
  if (!decode_png(open_png(path).get(), &header, nullptr)) throw ConfigError("corrupt PNG " + path.string());
  Image img(header.width, header.height, static_cast<std::size_t>(header.channels));
  std::vector<png_byte> bytes(img.data.size());
  if (!decode_png(open_png(path).get(), &header, bytes.data()))
    throw ConfigError("corrupt PNG " + path.string());
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

Image load_env_png(const std::filesystem::path& path) {
  Image img = read_png(path);
  for (double& v : img.data) v = std::pow(v, 2.2);
  return img;
}

void write_texture_set(const std::filesystem::path& dir, const TextureSet& tex) {
  std::filesystem::create_directories(dir);
  write_png(dir / "diffuse.png", to_image(tex.diffuse));
  Image rm = to_image(tex.rough_metal);
  Image rm3(rm.width, rm.height, 3);
  for (std::size_t y = 0; y < rm.height; ++y)
    for (std::size_t x = 0; x < rm.width; ++x)
      for (std::size_t c = 0; c < 2; ++c) rm3.at(y, x, c) = rm.at(y, x, c);
  write_png(dir / "rough_metal.png", rm3);
  Image n = to_image(tex.normal);
  for (double& v : n.data) v = (v + 1.0) / 2.0;
  write_png(dir / "normal.png", n);
}

TextureSet read_texture_set(const std::filesystem::path& dir) {
  const Image d = read_png(dir / "diffuse.png");
  const Image rm = read_png(dir / "rough_metal.png");
  Image n = read_png(dir / "normal.png");
  if (rm.width != d.width || rm.height != d.height || n.width != d.width || n.height != d.height)
    throw ConfigError("texture maps in " + dir.string() + " differ in size");
  Image rm2(rm.width, rm.height, 2);
  for (std::size_t y = 0; y < rm.height; ++y)
    for (std::size_t x = 0; x < rm.width; ++x)
      for (std::size_t c = 0; c < 2; ++c) rm2.at(y, x, c) = rm.at(y, x, c);
  for (std::size_t p = 0; p < n.width * n.height; ++p) {
    double* v = &n.data[p * 3];
    for (int c = 0; c < 3; ++c) v[c] = 2.0 * v[c] - 1.0;
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len == 0.0) {
      v[0] = v[1] = 0.0;
      v[2] = 1.0;
    } else {
      for (int c = 0; c < 3; ++c) v[c] /= len;
    }
  }
  return {to_tensor(d), to_tensor(rm2), to_tensor(n)};
}

Image hstack(const std::vector<Image>& images) {
  if (images.empty()) return {};
  const Image& first = images.front();
  Image out(first.width * images.size(), first.height, first.channels);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& im = images[i];
    if (im.width != first.width || im.height != first.height || im.channels != first.channels)
      throw ShapeError("hstack needs equally sized images");
    for (std::size_t y = 0; y < im.height; ++y)
      for (std::size_t x = 0; x < im.width; ++x)
        for (std::size_t c = 0; c < im.channels; ++c) out.at(y, i * first.width + x, c) = im.at(y, x, c);
  }
  return out;
}

}  // namespace paintlab
