#include "io_util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace pcftool {

namespace {

std::vector<std::uint8_t> as_bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

std::string num(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  try {
    pcf::write_file_atomic(path, as_bytes(text));
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create directory " + dir.string() + ": " + ec.message());
}

pcf::FlowField load_flow(const fs::path& path) {
  if (!fs::exists(path)) throw IoFailure("flow file not found: " + path.string());
  try {
    return pcf::read_flo(path);
  } catch (const pcf::Error& e) {
    throw IoFailure(path.string() + ": " + e.what());
  }
}

pcf::Mask load_mask(const fs::path& path) {
  if (!fs::exists(path)) throw IoFailure("mask file not found: " + path.string());
  try {
    return pcf::read_mask_png(path);
  } catch (const pcf::Error& e) {
    throw IoFailure(path.string() + ": " + e.what());
  }
}

pcf::CfldImage load_cfld(const fs::path& path) {
  if (!fs::exists(path)) throw IoFailure("field file not found: " + path.string());
  try {
    return pcf::read_cfld(path);
  } catch (const pcf::Error& e) {
    throw IoFailure(path.string() + ": " + e.what());
  }
}

CsvTable load_csv(const fs::path& path, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional) {
  if (!fs::exists(path)) throw IoFailure("CSV file not found: " + path.string());
  std::vector<std::uint8_t> bytes;
  try {
    bytes = pcf::read_file(path);
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  CsvTable table;
  if (!std::getline(in, line)) throw IoFailure(path.string() + ": empty CSV");
  table.header = split(line, ',');
  const std::size_t ncols = table.header.size();
  bool ok = ncols >= required.size() && ncols <= required.size() + optional.size();
  for (std::size_t c = 0; ok && c < ncols; ++c) {
    const auto& want = c < required.size() ? required[c] : optional[c - required.size()];
    ok = table.header[c] == want;
  }
  if (!ok) throw IoFailure(path.string() + ": unexpected CSV header '" + line + "'");

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line, ',');
    if (cells.size() != ncols) {
      throw IoFailure(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncols) +
                      " columns");
    }
    std::vector<double> row(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      const auto [ptr, ec] = std::from_chars(first, last, row[c]);
      if (ec != std::errc() || ptr != last || !std::isfinite(row[c])) {
        throw IoFailure(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cells[c] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::array<double, 4> write_coords_png(const fs::path& path, const pcf::CoordField& coords,
                                       const pcf::Grid<double>& conf) {
  const double inf = std::numeric_limits<double>::infinity();
  std::array<double, 4> range{inf, -inf, inf, -inf};
  for (std::size_t k = 0; k < coords.lambda1.size(); ++k) {
    range[0] = std::min(range[0], coords.lambda1[k]);
    range[1] = std::max(range[1], coords.lambda1[k]);
    range[2] = std::min(range[2], coords.lambda2[k]);
    range[3] = std::max(range[3], coords.lambda2[k]);
  }
  if (coords.lambda1.empty()) range = {0.0, 0.0, 0.0, 0.0};
  auto unit = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };

  std::vector<std::uint8_t> rgb(3 * coords.lambda1.size());
  for (std::size_t k = 0; k < coords.lambda1.size(); ++k) {
    rgb[3 * k] = to_byte(unit(coords.lambda1[k], range[0], range[1]));
    rgb[3 * k + 1] = to_byte(unit(coords.lambda2[k], range[2], range[3]));
    rgb[3 * k + 2] = to_byte(conf[k]);
  }
  try {
    pcf::write_file_atomic(path, pcf::encode_png_rgb8(coords.lambda1.width(), coords.lambda1.height(), rgb));
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }
  return range;
}

void write_unit_png(const fs::path& path, const pcf::Grid<double>& values) {
  pcf::Grid<std::uint8_t> img(values.width(), values.height());
  for (std::size_t k = 0; k < values.size(); ++k) img[k] = to_byte(values[k]);
  try {
    pcf::write_file_atomic(path, pcf::encode_png_gray8(img));
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }
}

void write_labels_png(const fs::path& path, const pcf::Grid<int>& labels) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{
      {230, 25, 75}, {60, 180, 75}, {0, 130, 200}, {255, 225, 25},
      {145, 30, 180}, {70, 240, 240}, {245, 130, 48}, {240, 50, 230},
  }};
  std::vector<std::uint8_t> rgb(3 * labels.size(), 0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] <= 0) continue;
    const auto& c = kPalette[static_cast<std::size_t>(labels[k] - 1) % kPalette.size()];
    std::copy(c.begin(), c.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * k));
  }
  try {
    pcf::write_file_atomic(path, pcf::encode_png_rgb8(labels.width(), labels.height(), rgb));
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }
}

}  // namespace pcftool
