#include "alvc/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>

#include "alvc/errors.hpp"

namespace alvc {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d.png", index);
  return buf;
}

}  // namespace

Frame read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png read failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<png_byte> row(static_cast<size_t>(w) * 3);
  Frame f(static_cast<int>(h), static_cast<int>(w));
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        f.pix.at(0, c, static_cast<int>(y), static_cast<int>(x)) = row[x * 3 + c] / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return f;
}

void write_png(const std::string& path, const Frame& f) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot create " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, f.width(), f.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>(f.width()) * 3);
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        float v = f.pix.at(0, c, y, x);
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        row[static_cast<size_t>(x) * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

VideoSequence read_frame_dir(const std::string& dir, int max_frames) {
  VideoSequence seq;
  for (int i = 0;; ++i) {
    if (max_frames >= 0 && i >= max_frames) break;
    std::filesystem::path p = std::filesystem::path(dir) / frame_name(i);
    if (!std::filesystem::exists(p)) break;
    Frame f = read_png(p.string());
    f.index = i;
    if (!seq.frames.empty() && (f.height() != seq.height() || f.width() != seq.width()))
      throw IoError("frame size mismatch in " + dir + " at index " + std::to_string(i));
    seq.frames.push_back(std::move(f));
  }
  if (seq.frames.empty()) throw IoError("no frames found in " + dir);
  return seq;
}

void write_frame_dir(const std::string& dir, const VideoSequence& seq) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < seq.frames.size(); ++i)
    write_png((std::filesystem::path(dir) / frame_name(static_cast<int>(i))).string(), seq.frames[i]);
}

static constexpr float kFloMagic = 202021.25f;

FlowField read_flo(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  float magic = 0;
  int32_t w = 0, h = 0;
  if (std::fread(&magic, 4, 1, fp.get()) != 1 || magic != kFloMagic)
    throw IoError("bad flow file magic: " + path);
  if (std::fread(&w, 4, 1, fp.get()) != 1 || std::fread(&h, 4, 1, fp.get()) != 1)
    throw IoError("truncated flow file: " + path);
  FlowField f(h, w);
  std::vector<float> row(static_cast<size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    if (std::fread(row.data(), 4, row.size(), fp.get()) != row.size())
      throw IoError("truncated flow file: " + path);
    for (int x = 0; x < w; ++x) {
      f.vec.at(0, 0, y, x) = row[x * 2];
      f.vec.at(0, 1, y, x) = row[x * 2 + 1];
    }
  }
  return f;
}

void write_flo(const std::string& path, const FlowField& f) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot create " + path);
  float magic = kFloMagic;
  int32_t w = f.width(), h = f.height();
  std::fwrite(&magic, 4, 1, fp.get());
  std::fwrite(&w, 4, 1, fp.get());
  std::fwrite(&h, 4, 1, fp.get());
  std::vector<float> row(static_cast<size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[x * 2] = f.vec.at(0, 0, y, x);
      row[x * 2 + 1] = f.vec.at(0, 1, y, x);
    }
    std::fwrite(row.data(), 4, row.size(), fp.get());
  }
}

}  // namespace alvc
