#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <pcf/file_formats.hpp>
#include <pcf/flowfield.hpp>
#include <pcf/geometry.hpp>
#include <pcf/grid.hpp>

namespace pcftool {

namespace fs = std::filesystem;

/// Unreadable, unwritable or malformed files. Maps to exit status 3.
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that round-trips.
std::string num(double v);

void write_text(const fs::path& path, const std::string& text);
void ensure_dir(const fs::path& dir);

pcf::FlowField load_flow(const fs::path& path);
pcf::Mask load_mask(const fs::path& path);
pcf::CfldImage load_cfld(const fs::path& path);

/// Rows of a comma separated file whose header starts with `required`.
/// `optional` columns may follow; missing ones are absent from the rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable load_csv(const fs::path& path, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional = {});

/// R and G from l1 and l2 mapped affinely from [min, max] to [0, 255], B from
/// the confidence. Returns the observed ranges as {l1min, l1max, l2min, l2max}.
std::array<double, 4> write_coords_png(const fs::path& path, const pcf::CoordField& coords,
                                       const pcf::Grid<double>& conf);
/// round(255 * v) with v clamped to [0, 1].
void write_unit_png(const fs::path& path, const pcf::Grid<double>& values);
/// One fixed color per label, black for 0.
void write_labels_png(const fs::path& path, const pcf::Grid<int>& labels);

}  // namespace pcftool
