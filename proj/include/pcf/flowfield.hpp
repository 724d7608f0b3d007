#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pcf/geometry.hpp"
#include "pcf/grid.hpp"

namespace pcf {

/// Dense backward flow on the target grid: target pixel q corresponds to the
/// source point q + (u(q), v(q)). Stored as f32 to match the .flo format, so
/// a write/read cycle is bit-exact. Invalid pixels carry u = v = 0.
struct FlowField {
  Grid<float> u;
  Grid<float> v;
  Mask valid;

  FlowField() = default;
  FlowField(int width, int height) : u(width, height), v(width, height), valid(width, height, 1) {}

  int width() const noexcept { return valid.width(); }
  int height() const noexcept { return valid.height(); }

  Point2 displacement(int row, int col) const { return {u(row, col), v(row, col)}; }
  void set(int row, int col, Point2 d) {
    u(row, col) = static_cast<float>(d.x);
    v(row, col) = static_cast<float>(d.y);
  }
  void invalidate(int row, int col) {
    valid(row, col) = 0;
    u(row, col) = 0.0f;
    v(row, col) = 0.0f;
  }
};

struct ScalarField {
  Grid<double> values;

  ScalarField() = default;
  ScalarField(int width, int height, double fill = 0.0) : values(width, height, fill) {}

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
};

/// Planar projective map, normalized so h(2,2) == 1 whenever it is nonzero.
class HomographyMap {
 public:
  HomographyMap() : m_(Eigen::Matrix3d::Identity()) {}
  /// Throws Error(kSingularHomography) when det(m) == 0 or m is not finite.
  explicit HomographyMap(const Eigen::Matrix3d& m);

  static HomographyMap identity() { return HomographyMap(); }
  static HomographyMap translation(double tx, double ty);
  static HomographyMap from_affine(const AffineMap& a);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  HomographyMap inverse() const;

  /// Perspective-divided image of p. Returns nullopt when p maps to infinity.
  std::optional<Point2> try_apply(Point2 p) const noexcept;
  /// Throws Error(kDegenerate) when p maps to infinity.
  Point2 apply(Point2 p) const;

  /// Row-major nine entries.
  std::array<double, 9> row_major() const noexcept;

 private:
  Eigen::Matrix3d m_;
};

/// Bilinear stencil inside a width x height grid. The upper corner indices are
/// clamped to the last row/column; their weight is then zero.
struct BilinearTap {
  int x0 = 0;
  int x1 = 0;
  int y0 = 0;
  int y1 = 0;
  double fx = 0.0;
  double fy = 0.0;
};

/// Nullopt when (x, y) lies outside [0, width-1] x [0, height-1].
std::optional<BilinearTap> bilinear_tap(double x, double y, int width, int height) noexcept;

/// Interpolated displacement at a continuous point, or nullopt when any corner
/// is invalid or the point is out of bounds.
std::optional<Point2> sample_flow(const FlowField& flow, Point2 p) noexcept;

/// C^r = X(C^s; Y): out(q) is src sampled bilinearly at q + Y(q). A pixel is
/// valid only if the flow is valid there and all four sample corners are
/// valid and inside src. Throws Error(kDimMismatch) when src and flow shapes
/// differ.
CoordField warp_field(const CoordField& src, const FlowField& flow);

/// Per-pixel |(dl1, dl2)| on jointly valid pixels, -1 elsewhere.
inline constexpr double kErrorSentinel = -1.0;
ScalarField error_map(const CoordField& ct, const CoordField& cr);

/// Output pixel (I, J) samples the input at (I / factor, J / factor). The
/// last input row/column pair is extended linearly past the border so affine
/// fields stay exact. Flow displacements are additionally scaled by factor.
CoordField upsample_bilinear(const CoordField& field, int factor);
FlowField upsample_bilinear(const FlowField& field, int factor);

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Y(q) = pi(h^-1 q) - q, where h maps source points to target points.
/// Occluder rectangles are invalidated; valid pixels get i.i.d. N(0,
/// noise_sigma^2) noise per component when noise_sigma > 0.
FlowField synth_flow_homography(const HomographyMap& h, int width, int height,
                                std::span<const Rect> occluders, double noise_sigma,
                                std::uint64_t seed);

enum class CorruptSide { kForward, kBackward };

/// A full synthetic scenario: forward flow (target -> source), backward flow
/// (source -> target) and the ground-truth mask of target pixels that are
/// unoccluded, uncorrupted and map inside the source image.
struct ScenarioSpec {
  int width = 64;
  int height = 64;
  HomographyMap homography;
  std::vector<Rect> occluders;
  double noise_sigma = 0.0;
  /// Quadrant 0..3 (TL, TR, BL, BR) whose patches may be corrupted.
  std::optional<int> corrupt_quadrant;
  double corrupt_fraction = 0.5;
  double corrupt_sigma = 8.0;
  /// Which flow receives the noise. Patches live on that flow's grid;
  /// `corrupted` is always reported on the target grid.
  CorruptSide corrupt_side = CorruptSide::kBackward;
  int patch_size = 8;
  std::uint64_t seed = 0;
};

struct SyntheticPair {
  FlowField forward;
  FlowField backward;
  Mask gt_clean;
  Mask corrupted;
};

SyntheticPair synth_flow_pair(const ScenarioSpec& spec);

}  // namespace pcf
