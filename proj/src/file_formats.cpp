#include "pcf/file_formats.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace pcf {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::kIo, "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::kIo, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(s)]) << (8 * s);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  bool remaining_at_least(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::span<const std::uint8_t> peek(std::size_t n) {
    need(n);
    return bytes_.subspan(pos_, n);
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(Errc::kTruncatedFile, "unexpected end of data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_cfld(const CfldImage& image) {
  const std::size_t expected = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (image.data.size() != expected) throw Error(Errc::kLengthMismatch, "CFLD payload size mismatch");
  ByteWriter w;
  w.raw("CFLD", 4);
  w.u32(kCfldVersion);
  w.u32(image.width);
  w.u32(image.height);
  w.u32(image.channels);
  for (float v : image.data) w.f32(v);
  return w.take();
}

CfldImage decode_cfld(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.peek(4);
  if (std::memcmp(magic.data(), "CFLD", 4) != 0) throw Error(Errc::kBadMagic, "not a CFLD stream");
  r.skip(4);
  const std::uint32_t version = r.u32();
  if (version != kCfldVersion) throw Error(Errc::kBadMagic, "unsupported CFLD version " + std::to_string(version));
  CfldImage image;
  image.width = r.u32();
  image.height = r.u32();
  image.channels = r.u32();
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (!r.remaining_at_least(n * 4)) throw Error(Errc::kTruncatedFile, "CFLD payload truncated");
  image.data.resize(n);
  for (auto& v : image.data) v = r.f32();
  return image;
}

void write_cfld(const fs::path& path, const CfldImage& image) { write_file_atomic(path, encode_cfld(image)); }
CfldImage read_cfld(const fs::path& path) { return decode_cfld(read_file(path)); }

CfldImage to_cfld(const CoordField& field) {
  CfldImage image{static_cast<std::uint32_t>(field.width()), static_cast<std::uint32_t>(field.height()), 3, {}};
  image.data.reserve(field.valid.size() * 3);
  for (std::size_t k = 0; k < field.valid.size(); ++k) {
    image.data.push_back(static_cast<float>(field.lambda1[k]));
    image.data.push_back(static_cast<float>(field.lambda2[k]));
    image.data.push_back(field.valid[k] ? 1.0f : 0.0f);
  }
  return image;
}

CoordField coord_field_from_cfld(const CfldImage& image) {
  if (image.channels != 2 && image.channels != 3) {
    throw Error(Errc::kDimMismatch, "coordinate field needs 2 or 3 channels");
  }
  CoordField field(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t k = 0; k < field.valid.size(); ++k) {
    const float* px = image.data.data() + k * image.channels;
    const bool valid = image.channels == 2 || px[2] != 0.0f;
    field.valid[k] = valid;
    field.lambda1[k] = valid ? px[0] : 0.0;
    field.lambda2[k] = valid ? px[1] : 0.0;
  }
  return field;
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  ByteWriter w;
  w.f32(kFloMagic);
  w.i32(flow.width());
  w.i32(flow.height());
  for (std::size_t k = 0; k < flow.valid.size(); ++k) {
    if (flow.valid[k]) {
      w.f32(flow.u[k]);
      w.f32(flow.v[k]);
    } else {
      w.f32(kFloInvalid);
      w.f32(kFloInvalid);
    }
  }
  return w.take();
}

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.remaining_at_least(12)) throw Error(Errc::kTruncatedFile, ".flo header truncated");
  if (r.f32() != kFloMagic) throw Error(Errc::kBadMagic, "not a .flo stream");
  const std::int32_t width = r.i32();
  const std::int32_t height = r.i32();
  if (width < 0 || height < 0) throw Error(Errc::kBadMagic, "negative .flo dimensions");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (!r.remaining_at_least(n * 8)) throw Error(Errc::kTruncatedFile, ".flo payload truncated");
  FlowField flow(width, height);
  for (std::size_t k = 0; k < n; ++k) {
    const float u = r.f32();
    const float v = r.f32();
    if (std::abs(u) >= kFloInvalid || std::abs(v) >= kFloInvalid || !std::isfinite(u) || !std::isfinite(v)) {
      flow.valid[k] = 0;
      continue;
    }
    flow.u[k] = u;
    flow.v[k] = v;
  }
  return flow;
}

void write_flo(const fs::path& path, const FlowField& flow) { write_file_atomic(path, encode_flo(flow)); }
FlowField read_flo(const fs::path& path) { return decode_flo(read_file(path)); }

namespace {

struct PngWriteState {
  std::vector<std::uint8_t> out;
  std::string error;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->out.insert(state->out.end(), data, data + len);
}

void png_flush_cb(png_structp) {}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* error = static_cast<std::string*>(png_get_error_ptr(png));
  if (error) *error = msg;
  png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

// `rows` holds big-endian packed rows, `bytes_per_row` each.
std::vector<std::uint8_t> encode_png(int width, int height, int color_type, int bit_depth,
                                     const std::vector<std::uint8_t>& rows, std::size_t bytes_per_row) {
  PngWriteState state;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state.error, png_error_cb, png_warning_cb);
  if (!png) throw Error(Errc::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::kIo, "png_create_info_struct failed");
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
  for (int i = 0; i < height; ++i) {
    row_ptrs[static_cast<std::size_t>(i)] =
        const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(i) * bytes_per_row);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::kIo, "PNG encode failed: " + state.error);
  }
  png_set_write_fn(png, &state, png_write_cb, png_flush_cb);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(state.out);
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray8(const Grid<std::uint8_t>& image) {
  std::vector<std::uint8_t> rows(image.values().begin(), image.values().end());
  return encode_png(image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 8, rows,
                    static_cast<std::size_t>(image.width()));
}

std::vector<std::uint8_t> encode_png_gray16(const Grid<std::uint16_t>& image) {
  std::vector<std::uint8_t> rows;
  rows.reserve(image.size() * 2);
  for (std::uint16_t v : image.values()) {
    rows.push_back(static_cast<std::uint8_t>(v >> 8));
    rows.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return encode_png(image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 16, rows,
                    static_cast<std::size_t>(image.width()) * 2);
}

std::vector<std::uint8_t> encode_png_rgb8(int width, int height, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(Errc::kLengthMismatch, "RGB buffer size mismatch");
  }
  std::vector<std::uint8_t> rows(rgb.begin(), rgb.end());
  return encode_png(width, height, PNG_COLOR_TYPE_RGB, 8, rows, static_cast<std::size_t>(width) * 3);
}

namespace {

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  std::string error;
  std::vector<std::uint8_t> rows;
  std::vector<png_bytep> row_ptrs;
};

void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->bytes.size() - state->pos < len) png_error(png, "truncated PNG stream");
  std::memcpy(data, state->bytes.data() + state->pos, len);
  state->pos += len;
}

}  // namespace

PngImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error(Errc::kBadMagic, "not a PNG stream");
  PngReadState state{bytes, 0, {}, {}, {}};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state.error, png_error_cb, png_warning_cb);
  if (!png) throw Error(Errc::kIo, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::kIo, "png_create_info_struct failed");
  }
  PngImage image;
  auto& rows = state.rows;
  auto& row_ptrs = state.row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::kTruncatedFile, "PNG decode failed: " + state.error);
  }
  png_set_read_fn(png, &state, png_read_cb);
  png_read_info(png, info);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.channels = png_get_channels(png, info);
  image.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  rows.resize(row_bytes * static_cast<std::size_t>(image.height));
  row_ptrs.resize(static_cast<std::size_t>(image.height));
  for (int i = 0; i < image.height; ++i) row_ptrs[static_cast<std::size_t>(i)] = rows.data() + row_bytes * i;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t samples = static_cast<std::size_t>(image.width) * image.height * image.channels;
  image.data.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    image.data[s] = image.bit_depth == 16
                        ? static_cast<std::uint16_t>((rows[2 * s] << 8) | rows[2 * s + 1])
                        : rows[s];
  }
  return image;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  Grid<std::uint8_t> gray(mask.width(), mask.height());
  for (std::size_t k = 0; k < mask.size(); ++k) gray[k] = mask[k] ? 255 : 0;
  write_file_atomic(path, encode_png_gray8(gray));
}

Mask read_mask_png(const fs::path& path) {
  const PngImage image = decode_png(read_file(path));
  Mask mask(image.width, image.height, 0);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    mask[k] = image.data[k * static_cast<std::size_t>(image.channels)] != 0;
  }
  return mask;
}

}  // namespace pcf
