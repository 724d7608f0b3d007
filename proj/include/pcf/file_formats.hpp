#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcf/flowfield.hpp"
#include "pcf/geometry.hpp"

namespace pcf {

/// Writes via a sibling temp file and rename, so readers never observe a
/// partial file. Throws Error(kIo).
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// CFLD: "CFLD", u32 version (1), u32 width, u32 height, u32 channels, then
// row-major channel-interleaved f32. All little-endian.
inline constexpr std::uint32_t kCfldVersion = 1;

struct CfldImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;
};

std::vector<std::uint8_t> encode_cfld(const CfldImage& image);
CfldImage decode_cfld(std::span<const std::uint8_t> bytes);
void write_cfld(const std::filesystem::path& path, const CfldImage& image);
CfldImage read_cfld(const std::filesystem::path& path);

/// Three channels (l1, l2, validity).
CfldImage to_cfld(const CoordField& field);
/// Accepts two channels (all valid) or three (third is validity).
CoordField coord_field_from_cfld(const CfldImage& image);

// Middlebury .flo: f32 202021.25, i32 width, i32 height, interleaved f32
// (u, v). Invalid pixels are written as u = v = 1e9.
inline constexpr float kFloMagic = 202021.25f;
inline constexpr float kFloInvalid = 1e9f;

std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(std::span<const std::uint8_t> bytes);
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

// PNG output is deterministic: fixed zlib level, no time or text chunks.
std::vector<std::uint8_t> encode_png_gray8(const Grid<std::uint8_t>& image);
std::vector<std::uint8_t> encode_png_gray16(const Grid<std::uint16_t>& image);
/// `rgb` is row-major interleaved, 3 * width * height bytes.
std::vector<std::uint8_t> encode_png_rgb8(int width, int height, std::span<const std::uint8_t> rgb);

struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> data;
};
PngImage decode_png(std::span<const std::uint8_t> bytes);

/// Binary mask as 0/255 8-bit grayscale.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
/// Any nonzero first-channel sample counts as set.
Mask read_mask_png(const std::filesystem::path& path);

}  // namespace pcf
