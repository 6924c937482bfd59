// Copyright 2026 The bowreid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bowreid/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "bowreid/error.hpp"

namespace bowreid {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_or_throw(const fs::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open image " + path.string());
  return f;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage read_jpeg(const fs::path& path) {
  auto file = open_or_throw(path);
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  RgbImage img;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError("cannot decode " + path.string() + ": " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img.height = static_cast<int>(cinfo.output_height);
  img.width = static_cast<int>(cinfo.output_width);
  img.rgb.resize(static_cast<std::size_t>(img.height) * img.width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixel(static_cast<int>(cinfo.output_scanline), 0);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

RgbImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot decode " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(image.height), static_cast<int>(image.width));
  if (!png_image_finish_read(&image, nullptr, img.rgb.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode " + path.string() + ": " + msg);
  }
  return img;
}

// Binary P6 with maxval 255.
RgbImage read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  auto next_token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };
  if (next_token() != "P6") throw DataError("cannot decode " + path.string() + ": not a P6 PPM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw DataError("cannot decode " + path.string() + ": bad PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw DataError("cannot decode " + path.string() + ": unsupported PPM header");
  }
  RgbImage img(h, w);
  if (!in.read(reinterpret_cast<char*>(img.rgb.data()),
               static_cast<std::streamsize>(img.rgb.size()))) {
    throw DataError("cannot decode " + path.string() + ": truncated PPM");
  }
  return img;
}

}  // namespace

RgbImage read_image(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw DataError("unsupported image format: " + path.string());
}

void write_ppm(const RgbImage& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
}

}  // namespace bowreid
