#include "mad/frame_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>

#include "mad/error.hpp"
#include "mad/serialize.hpp"

namespace mad {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_raw_stream(const std::vector<FrameImage>& frames) {
  const std::uint32_t w = frames.empty() ? 0 : static_cast<std::uint32_t>(frames[0].width);
  const std::uint32_t h = frames.empty() ? 0 : static_cast<std::uint32_t>(frames[0].height);
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::string out(kRawMagic.begin(), kRawMagic.end());
  put_u32(out, w);
  put_u32(out, h);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  out.reserve(16 + frames.size() * plane * 3);
  for (const FrameImage& f : frames) {
    if (static_cast<std::uint32_t>(f.width) != w || static_cast<std::uint32_t>(f.height) != h) {
      throw Error(ErrorKind::kShape, "raw stream frames must share dimensions");
    }
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < plane; ++i) out.push_back(static_cast<char>(f.pixels[3 * i + c]));
    }
  }
  return out;
}

std::vector<FrameImage> decode_raw_stream(std::string_view bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kRawMagic.data(), 4) != 0) {
    throw Error(ErrorKind::kParse, "not a raw frame stream (bad magic)");
  }
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::uint32_t n = get_u32(bytes, 12);
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 16 + static_cast<std::size_t>(n) * plane * 3) {
    throw Error(ErrorKind::kParse, "raw frame stream length does not match header");
  }
  std::vector<FrameImage> frames;
  frames.reserve(n);
  std::size_t at = 16;
  for (std::uint32_t f = 0; f < n; ++f) {
    FrameImage img(static_cast<int>(w), static_cast<int>(h));
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < plane; ++i) img.pixels[3 * i + c] = static_cast<std::uint8_t>(bytes[at++]);
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

namespace {

struct PngIo {
  std::string* out = nullptr;
  std::string_view in;
  std::size_t at = 0;
  char message[256] = {0};
};

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  io->out->append(reinterpret_cast<const char*>(data), len);
}

void png_flush_noop(png_structp) {}

void png_consume(png_structp png, png_bytep data, png_size_t len) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  if (io->at + len > io->in.size()) png_error(png, "truncated PNG");
  std::memcpy(data, io->in.data() + io->at, len);
  io->at += len;
}

void png_fail(png_structp png, png_const_charp msg) {
  auto* io = static_cast<PngIo*>(png_get_error_ptr(png));
  std::snprintf(io->message, sizeof(io->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

// Kept free of objects with destructors: libpng reports errors by longjmp.
bool png_write_rows(PngIo& io, const FrameImage& image) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &io, png_fail, png_warn);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &io, png_append, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const std::size_t stride = 3 * static_cast<std::size_t>(image.width);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

bool png_read_rows(PngIo& io, FrameImage& img) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &io, png_fail, png_warn);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &io, png_consume);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const auto w = static_cast<int>(png_get_image_width(png, info));
  const auto h = static_cast<int>(png_get_image_height(png, info));
  img.width = w;
  img.height = h;
  img.pixels.assign(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  const std::size_t stride = 3 * static_cast<std::size_t>(w);
  for (int y = 0; y < h; ++y) png_read_row(png, img.pixels.data() + y * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace

std::string encode_png(const FrameImage& image) {
  std::string out;
  PngIo io;
  io.out = &out;
  if (!png_write_rows(io, image)) {
    throw Error(ErrorKind::kIo, std::string("PNG encode failed: ") + io.message);
  }
  return out;
}

FrameImage decode_png(std::string_view bytes) {
  PngIo io;
  io.in = bytes;
  FrameImage img;
  if (!png_read_rows(io, img)) {
    throw Error(ErrorKind::kParse, std::string("PNG decode failed: ") + io.message);
  }
  return img;
}

std::vector<std::filesystem::path> write_png_sequence(const std::filesystem::path& dir,
                                                      const std::vector<FrameImage>& frames) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%06zu.png", i);
    paths.push_back(dir / name);
    write_file_atomic(paths.back(), encode_png(frames[i]));
  }
  return paths;
}

}  // namespace mad
