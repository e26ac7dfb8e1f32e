// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "gelforce/error.hpp"

namespace gelforce {

namespace {

unsigned char to_byte(float v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  // libpng expects no return; the message is kept in the error pointer.
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  png_longjmp(png, 1);
}

bool ends_with_ci(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; });
}

}  // namespace

Image read_png(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw FormatError("cannot open image '" + path + "'");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng initialization failed");
  }
  Image img;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("bad PNG '" + path + "': " + err);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG pixel layout in '" + path + "'");
  }
  buf.resize(static_cast<std::size_t>(w) * h * 3);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  img = Image(w, h);
  std::transform(buf.begin(), buf.end(), img.rgb.begin(), [](unsigned char b) { return b / 255.0f; });
  return img;
}

void write_png(const std::string& path, const Image& img) {
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw FormatError("cannot open '" + path + "' for writing");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialization failed");
  }
  std::vector<unsigned char> buf(img.rgb.size());
  std::transform(img.rgb.begin(), img.rgb.end(), buf.begin(), to_byte);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * img.width * 3;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("writing PNG '" + path + "' failed: " + err);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image '" + path + "'");
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
      } else {
        t += c;
      }
    }
    return t;
  };
  if (token() != "P6") throw FormatError("'" + path + "' is not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw FormatError("bad PPM header in '" + path + "'");
  }
  if (w < 1 || h < 1 || maxval != 255) throw FormatError("unsupported PPM header in '" + path + "'");
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw FormatError("PPM '" + path + "' is truncated");
  }
  Image img(w, h);
  std::transform(buf.begin(), buf.end(), img.rgb.begin(), [](unsigned char b) { return b / 255.0f; });
  return img;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.rgb.size());
  std::transform(img.rgb.begin(), img.rgb.end(), buf.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

Image read_image(const std::string& path) {
  if (ends_with_ci(path, ".png")) return read_png(path);
  if (ends_with_ci(path, ".ppm")) return read_ppm(path);
  throw FormatError("unknown image format for '" + path + "' (expected .png or .ppm)");
}

void write_image(const std::string& path, const Image& img) {
  if (ends_with_ci(path, ".png")) return write_png(path, img);
  if (ends_with_ci(path, ".ppm")) return write_ppm(path, img);
  throw FormatError("unknown image format for '" + path + "' (expected .png or .ppm)");
}

}  // namespace gelforce
