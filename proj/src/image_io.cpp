// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "zdda/errors.hpp"
#include "zdda/rng.hpp"

namespace zdda {
namespace {

Image<float> from_rgb8(int width, int height,
                       const std::vector<std::uint8_t>& rgb) {
  Image<float> img;
  img.shape = ImageShape{height, width, 3};
  img.data.resize(img.shape.pixels());
  const int plane = img.shape.plane();
  constexpr float kScale = 1.0f / 255.0f;
  for (int p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c)
      img.data[c * plane + p] = kScale * rgb[std::size_t(p) * 3 + c];
  return img;
}

Image<float> read_png_file(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str()))
    throw FormatError(path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError(path.string() + ": " + msg);
  }
  return from_rgb8(static_cast<int>(png.width), static_cast<int>(png.height),
                   rgb);
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::string message;
};

void jpeg_error_throw(j_common_ptr cinfo) {
  char buf[JMSG_LENGTH_MAX];
  (*cinfo->err->format_message)(cinfo, buf);
  throw FormatError(std::string("jpeg: ") + buf);
}

Image<float> read_jpeg_file(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!f) throw FormatError("cannot open " + path.string());

  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_throw;
  jpeg_create_decompress(&cinfo);
  try {
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    std::vector<std::uint8_t> rgb(std::size_t(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row =
          rgb.data() + std::size_t(cinfo.output_scanline) * width * 3;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(width, height, rgb);
  } catch (...) {
    jpeg_destroy_decompress(&cinfo);
    throw;
  }
}

}  // namespace

Image<float> read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw FormatError("cannot open " + path.string());
  unsigned char sig[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(sig), 2);
  probe.close();
  if (sig[0] == 0x89 && sig[1] == 'P') return read_png_file(path);
  if (sig[0] == 0xff && sig[1] == 0xd8) return read_jpeg_file(path);
  throw FormatError(path.string() + ": not a PNG or JPEG file");
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
  if (static_cast<std::size_t>(width) * height * 3 != rgb.size())
    throw DimensionError("rgb buffer does not match width*height*3");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(width);
  png.height = static_cast<png_uint_32>(height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, rgb.data(), 0,
                               nullptr))
    throw FormatError(path.string() + ": " + png.message);
}

void write_png(const std::filesystem::path& path, const Image<float>& img) {
  const int plane = img.shape.plane();
  std::vector<std::uint8_t> rgb(std::size_t(plane) * 3);
  const auto quantize = [](float v) {
    return static_cast<std::uint8_t>(
        std::clamp<int>(static_cast<int>(std::lround(v * 255.0f)), 0, 255));
  };
  for (int p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c)
      rgb[std::size_t(p) * 3 + c] =
          quantize(img.data[(img.shape.channels == 1 ? 0 : c) * plane + p]);
  write_png_rgb8(path, img.shape.width, img.shape.height, rgb);
}

BackgroundCorpus load_background_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ResolutionError("background corpus directory not found: " +
                          dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ResolutionError("no PNG/JPEG images in " + dir.string());

  BackgroundCorpus corpus;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    Image<float> img = read_image(f);
    h = fnv1a64(img.data.data(), sizeof(float) * img.data.size(), h);
    corpus.images.push_back(std::move(img));
  }
  corpus.content_hash = h;
  return corpus;
}

}  // namespace zdda
