#pragma once

#include <array>
#include <span>
#include <vector>

#include "pcf/grid.hpp"

namespace pcf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) noexcept { return {s * p.x, s * p.y}; }
  bool operator==(const Point2&) const = default;
};

double norm(Point2 p) noexcept;
double squared_norm(Point2 p) noexcept;

/// Barycentric coordinate system. `a` is the origin; the weights returned by
/// bary_coords pair l1 with c, l2 with b and l3 with a.
struct Bcs {
  Point2 a;
  Point2 b;
  Point2 c;

  bool operator==(const Bcs&) const = default;
};

struct BarycentricCoord {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

/// |signed area| at or below this (pixels^2) makes a BCS degenerate.
inline constexpr double kAreaEpsilon = 1e-8;

/// Half the cross product (b - a) x (c - a); positive for counter-clockwise
/// order in a y-up frame.
double signed_area(Point2 a, Point2 b, Point2 c) noexcept;

bool is_degenerate(const Bcs& bcs) noexcept;

/// Signed-area barycentric coordinates, defined on the whole plane.
/// Throws Error(kDegenerateBcs) when |signed_area(a, b, c)| <= kAreaEpsilon.
BarycentricCoord bary_coords(Point2 p, const Bcs& bcs);

/// l1 * c + l2 * b + l3 * a.
Point2 reconstruct(const BarycentricCoord& coord, const Bcs& bcs) noexcept;

struct AffineMap {
  // Row-major [[m00, m01], [m10, m11]].
  std::array<double, 4> linear{1.0, 0.0, 0.0, 1.0};
  Point2 translation;

  static AffineMap identity() noexcept { return {}; }
  static AffineMap translate(double tx, double ty) noexcept { return {{1.0, 0.0, 0.0, 1.0}, {tx, ty}}; }

  double determinant() const noexcept { return linear[0] * linear[3] - linear[1] * linear[2]; }
  /// Throws Error(kInvalidArgument) when the linear part is singular.
  AffineMap inverse() const;
};

Point2 apply_affine(const AffineMap& m, Point2 p) noexcept;
Bcs apply_affine(const AffineMap& m, const Bcs& bcs) noexcept;

/// Per-pixel (l1, l2) of one BCS. l3 is implied by 1 - l1 - l2 and never
/// stored. Invalid pixels hold zero in both channels.
struct CoordField {
  Grid<double> lambda1;
  Grid<double> lambda2;
  Mask valid;

  CoordField() = default;
  CoordField(int width, int height)
      : lambda1(width, height), lambda2(width, height), valid(width, height, 0) {}

  int width() const noexcept { return valid.width(); }
  int height() const noexcept { return valid.height(); }
};

CoordField encode_field(int width, int height, const Bcs& bcs);
CoordField encode_field(int width, int height, const Bcs& bcs, const Mask& valid);

/// Replayable per-channel standardization: normalized = (v - mean) / std.
/// With zero variance only the mean is removed and std is reported as 0.
struct ZScore {
  double mean = 0.0;
  double std = 0.0;
  bool zero_variance = false;

  double apply(double v) const noexcept { return zero_variance ? v - mean : (v - mean) / std; }
};

/// Normalizes `values` in place over the entries flagged in `valid` (all
/// entries when `valid` is empty). Needs at least two valid entries.
ZScore zero_score_normalize(std::span<double> values, std::span<const std::uint8_t> valid = {});

/// Both channels of a sparse coordinate set, normalized independently.
std::array<ZScore, 2> zero_score_normalize(std::span<Point2> points);

/// Both channels of a dense field over its valid pixels.
std::array<ZScore, 2> zero_score_normalize(CoordField& field);

}  // namespace pcf
