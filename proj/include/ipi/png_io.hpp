#pragma once

// Grayscale PNG encode/decode (8- and 16-bit) on top of libpng, to and from
// memory so callers can digest the exact bytes they write.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ipi/errors.hpp"
#include "ipi/grid.hpp"

namespace ipi::png {

using Bytes = std::vector<std::uint8_t>;

/// Decoded grayscale raster; samples hold 8- or 16-bit values.
struct GrayImage {
  int bit_depth = 8;
  Image<std::uint16_t> pixels;
};

namespace detail {

inline void on_error(png_structp p, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(p));
  if (text) *text = msg;
  png_longjmp(p, 1);
}

inline void on_warning(png_structp, png_const_charp) {}

inline void write_to_vector(png_structp p, png_bytep data, png_size_t len) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(p));
  out->insert(out->end(), data, data + len);
}

inline void flush_noop(png_structp) {}

struct ReadCursor {
  const Bytes* in;
  std::size_t pos;
};

inline void read_from_vector(png_structp p, png_bytep data, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(p));
  if (cur->pos + len > cur->in->size()) png_error(p, "unexpected end of PNG data");
  std::memcpy(data, cur->in->data() + cur->pos, len);
  cur->pos += len;
}

// Rows of big-endian samples, as PNG stores them.
inline Bytes encode_rows(const Image<std::uint16_t>& img, int bit_depth) {
  std::string err;
  png_structp p = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
  if (!p) throw IoError("png: cannot create write struct");
  png_infop info = png_create_info_struct(p);
  Bytes out;
  std::vector<png_byte> row(img.cols() * (bit_depth == 16 ? 2 : 1));
  if (setjmp(png_jmpbuf(p))) {
    png_destroy_write_struct(&p, &info);
    throw IoError("png: encode failed: " + err);
  }
  png_set_write_fn(p, &out, write_to_vector, flush_noop);
  png_set_IHDR(p, info, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(p, info);
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) {
      const std::uint16_t v = img(r, c);
      if (bit_depth == 16) {
        row[2 * c] = static_cast<png_byte>(v >> 8);
        row[2 * c + 1] = static_cast<png_byte>(v & 0xFF);
      } else {
        row[c] = static_cast<png_byte>(v);
      }
    }
    png_write_row(p, row.data());
  }
  png_write_end(p, nullptr);
  png_destroy_write_struct(&p, &info);
  return out;
}

}  // namespace detail

inline Bytes encode_gray8(const Image<std::uint8_t>& img) {
  Image<std::uint16_t> wide(img.rows(), img.cols());
  std::copy(img.begin(), img.end(), wide.begin());
  return detail::encode_rows(wide, 8);
}

inline Bytes encode_gray16(const Image<std::uint16_t>& img) { return detail::encode_rows(img, 16); }

inline GrayImage decode(const Bytes& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw CorruptDatasetError("png: not a PNG stream");
  std::string err;
  png_structp p = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::on_error, detail::on_warning);
  if (!p) throw IoError("png: cannot create read struct");
  png_infop info = png_create_info_struct(p);
  detail::ReadCursor cur{&bytes, 0};
  GrayImage out;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(p))) {
    png_destroy_read_struct(&p, &info, nullptr);
    throw CorruptDatasetError("png: decode failed: " + err);
  }
  png_set_read_fn(p, &cur, detail::read_from_vector);
  png_read_info(p, info);
  const png_uint_32 w = png_get_image_width(p, info), h = png_get_image_height(p, info);
  const int depth = png_get_bit_depth(p, info);
  const int color = png_get_color_type(p, info);
  if (color != PNG_COLOR_TYPE_GRAY) png_error(p, "only grayscale PNGs are supported");
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(p);
  png_read_update_info(p, info);
  out.bit_depth = depth == 16 ? 16 : 8;
  out.pixels = Image<std::uint16_t>(std::size_t{h}, std::size_t{w});
  row.resize(png_get_rowbytes(p, info));
  for (png_uint_32 r = 0; r < h; ++r) {
    png_read_row(p, row.data(), nullptr);
    for (png_uint_32 c = 0; c < w; ++c)
      out.pixels(r, c) = out.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * c] << 8) | row[2 * c + 1]) : row[c];
  }
  png_read_end(p, nullptr);
  png_destroy_read_struct(&p, &info, nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Domain encodings

/// Mask as 8-bit {0, 255}.
inline Bytes encode_mask(const Mask& m) {
  Image<std::uint8_t> img(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) img.data()[i] = m.data()[i] ? 255 : 0;
  return encode_gray8(img);
}

/// Any nonzero sample is foreground.
inline Mask decode_mask(const Bytes& bytes) {
  const GrayImage g = decode(bytes);
  Mask m(g.pixels.rows(), g.pixels.cols());
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = g.pixels.data()[i] != 0;
  return m;
}

struct ScaledImage {
  Bytes bytes;
  double scale = 1.0;  ///< stored = round(value * scale)
};

/// Nonnegative real image as 16-bit PNG, scaled so its maximum maps to 65535.
inline ScaledImage encode_scaled16(const RealImage& img) {
  double mx = 0;
  for (double v : img) mx = std::max(mx, v);
  const double scale = mx > 0 ? 65535.0 / mx : 1.0;
  Image<std::uint16_t> q(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i)
    q.data()[i] = static_cast<std::uint16_t>(std::lround(std::clamp(img.data()[i] * scale, 0.0, 65535.0)));
  return {encode_gray16(q), scale};
}

inline RealImage decode_scaled(const Bytes& bytes, double scale) {
  const GrayImage g = decode(bytes);
  RealImage out(g.pixels.rows(), g.pixels.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = static_cast<double>(g.pixels.data()[i]) / scale;
  return out;
}

}  // namespace ipi::png
