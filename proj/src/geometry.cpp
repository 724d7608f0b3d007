#include "pcf/geometry.hpp"

#include <cmath>
#include <string>

namespace pcf {

double norm(Point2 p) noexcept { return std::hypot(p.x, p.y); }
double squared_norm(Point2 p) noexcept { return p.x * p.x + p.y * p.y; }

double signed_area(Point2 a, Point2 b, Point2 c) noexcept {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

bool is_degenerate(const Bcs& bcs) noexcept {
  return !(std::abs(signed_area(bcs.a, bcs.b, bcs.c)) > kAreaEpsilon);
}

BarycentricCoord bary_coords(Point2 p, const Bcs& bcs) {
  const double area = signed_area(bcs.a, bcs.b, bcs.c);
  if (!(std::abs(area) > kAreaEpsilon)) {
    throw Error(Errc::kDegenerateBcs, "triangle signed area " + std::to_string(area));
  }
  // Each numerator replaces the weighted vertex by p, keeping the orientation
  // of (a, b, c) so the three weights sum to one everywhere.
  const double l1 = signed_area(bcs.a, bcs.b, p) / area;
  const double l2 = signed_area(bcs.a, p, bcs.c) / area;
  return {l1, l2, 1.0 - l1 - l2};
}

Point2 reconstruct(const BarycentricCoord& coord, const Bcs& bcs) noexcept {
  return {coord.l1 * bcs.c.x + coord.l2 * bcs.b.x + coord.l3 * bcs.a.x,
          coord.l1 * bcs.c.y + coord.l2 * bcs.b.y + coord.l3 * bcs.a.y};
}

AffineMap AffineMap::inverse() const {
  const double det = determinant();
  if (det == 0.0 || !std::isfinite(det)) throw Error(Errc::kInvalidArgument, "affine map is singular");
  AffineMap inv;
  inv.linear = {linear[3] / det, -linear[1] / det, -linear[2] / det, linear[0] / det};
  inv.translation = {-(inv.linear[0] * translation.x + inv.linear[1] * translation.y),
                     -(inv.linear[2] * translation.x + inv.linear[3] * translation.y)};
  return inv;
}

Point2 apply_affine(const AffineMap& m, Point2 p) noexcept {
  return {m.linear[0] * p.x + m.linear[1] * p.y + m.translation.x,
          m.linear[2] * p.x + m.linear[3] * p.y + m.translation.y};
}

Bcs apply_affine(const AffineMap& m, const Bcs& bcs) noexcept {
  return {apply_affine(m, bcs.a), apply_affine(m, bcs.b), apply_affine(m, bcs.c)};
}

CoordField encode_field(int width, int height, const Bcs& bcs) {
  return encode_field(width, height, bcs, Mask(width, height, 1));
}

CoordField encode_field(int width, int height, const Bcs& bcs, const Mask& valid) {
  if (valid.width() != width || valid.height() != height) {
    throw Error(Errc::kDimMismatch, "validity mask does not match field dimensions");
  }
  if (is_degenerate(bcs)) throw Error(Errc::kDegenerateBcs, "cannot encode with a degenerate BCS");

  CoordField field(width, height);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      if (!valid(i, j)) continue;
      const auto coord = bary_coords({static_cast<double>(j), static_cast<double>(i)}, bcs);
      field.lambda1(i, j) = coord.l1;
      field.lambda2(i, j) = coord.l2;
      field.valid(i, j) = 1;
    }
  }
  return field;
}

ZScore zero_score_normalize(std::span<double> values, std::span<const std::uint8_t> valid) {
  if (!valid.empty() && valid.size() != values.size()) {
    throw Error(Errc::kLengthMismatch, "validity flags do not match values");
  }
  auto is_valid = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };

  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!is_valid(i)) continue;
    sum += values[i];
    ++n;
  }
  if (n < 2) throw Error(Errc::kInsufficientData, "zero-score normalization needs >= 2 valid entries");

  ZScore z;
  z.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!is_valid(i)) continue;
    const double d = values[i] - z.mean;
    ss += d * d;
  }
  z.std = std::sqrt(ss / static_cast<double>(n));
  if (z.std < 1e-12) {
    z.std = 0.0;
    z.zero_variance = true;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_valid(i)) values[i] = z.apply(values[i]);
  }
  return z;
}

std::array<ZScore, 2> zero_score_normalize(std::span<Point2> points) {
  std::vector<double> xs(points.size());
  std::vector<double> ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs[i] = points[i].x;
    ys[i] = points[i].y;
  }
  const std::array<ZScore, 2> z{zero_score_normalize(xs), zero_score_normalize(ys)};
  for (std::size_t i = 0; i < points.size(); ++i) points[i] = {xs[i], ys[i]};
  return z;
}

std::array<ZScore, 2> zero_score_normalize(CoordField& field) {
  return {zero_score_normalize(field.lambda1.values(), field.valid.values()),
          zero_score_normalize(field.lambda2.values(), field.valid.values())};
}

}  // namespace pcf
