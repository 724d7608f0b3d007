#include "pcf/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>

#include "pcf/random.hpp"

namespace pcf {

HomographyMap::HomographyMap(const Eigen::Matrix3d& m) : m_(m) {
  const double det = m.determinant();
  if (!m.allFinite() || det == 0.0 || !std::isfinite(det)) {
    throw Error(Errc::kSingularHomography, "homography matrix is singular or not finite");
  }
  if (m_(2, 2) != 0.0) m_ /= m_(2, 2);
}

HomographyMap HomographyMap::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return HomographyMap(m);
}

HomographyMap HomographyMap::from_affine(const AffineMap& a) {
  Eigen::Matrix3d m;
  m << a.linear[0], a.linear[1], a.translation.x,
       a.linear[2], a.linear[3], a.translation.y,
       0.0, 0.0, 1.0;
  return HomographyMap(m);
}

HomographyMap HomographyMap::inverse() const { return HomographyMap(m_.inverse()); }

std::optional<Point2> HomographyMap::try_apply(Point2 p) const noexcept {
  const Eigen::Vector3d r = m_ * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(r.z()) < 1e-12) return std::nullopt;
  return Point2{r.x() / r.z(), r.y() / r.z()};
}

Point2 HomographyMap::apply(Point2 p) const {
  if (auto q = try_apply(p)) return *q;
  throw Error(Errc::kDegenerate, "point maps to infinity");
}

std::array<double, 9> HomographyMap::row_major() const noexcept {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = m_(r, c);
  return out;
}

std::optional<BilinearTap> bilinear_tap(double x, double y, int width, int height) noexcept {
  if (!(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1)) return std::nullopt;
  BilinearTap t;
  t.x0 = static_cast<int>(std::floor(x));
  t.y0 = static_cast<int>(std::floor(y));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  t.fx = x - t.x0;
  t.fy = y - t.y0;
  return t;
}

namespace {

template <typename T>
double interpolate(const Grid<T>& g, const BilinearTap& t) noexcept {
  const double top = (1.0 - t.fx) * static_cast<double>(g(t.y0, t.x0)) + t.fx * static_cast<double>(g(t.y0, t.x1));
  const double bottom = (1.0 - t.fx) * static_cast<double>(g(t.y1, t.x0)) + t.fx * static_cast<double>(g(t.y1, t.x1));
  return (1.0 - t.fy) * top + t.fy * bottom;
}

bool corners_valid(const Mask& valid, const BilinearTap& t) noexcept {
  return valid(t.y0, t.x0) && valid(t.y0, t.x1) && valid(t.y1, t.x0) && valid(t.y1, t.x1);
}

// Upsampling stencil: always uses an interior cell so the far border is a
// linear extrapolation of the last two samples.
BilinearTap extrapolating_tap(double x, double y, int width, int height) noexcept {
  auto axis = [](double v, int n, int& lo, int& hi, double& f) {
    if (n == 1) {
      lo = hi = 0;
      f = 0.0;
      return;
    }
    lo = std::clamp(static_cast<int>(std::floor(v)), 0, n - 2);
    hi = lo + 1;
    f = v - lo;
  };
  BilinearTap t;
  axis(x, width, t.x0, t.x1, t.fx);
  axis(y, height, t.y0, t.y1, t.fy);
  return t;
}

void check_factor(int factor) {
  if (factor < 1) throw Error(Errc::kInvalidArgument, "upsampling factor must be >= 1");
}

}  // namespace

std::optional<Point2> sample_flow(const FlowField& flow, Point2 p) noexcept {
  const auto tap = bilinear_tap(p.x, p.y, flow.width(), flow.height());
  if (!tap || !corners_valid(flow.valid, *tap)) return std::nullopt;
  return Point2{interpolate(flow.u, *tap), interpolate(flow.v, *tap)};
}

CoordField warp_field(const CoordField& src, const FlowField& flow) {
  if (src.width() != flow.width() || src.height() != flow.height()) {
    throw Error(Errc::kDimMismatch, "coordinate field and flow differ in size");
  }
  CoordField out(flow.width(), flow.height());
  for (int i = 0; i < flow.height(); ++i) {
    for (int j = 0; j < flow.width(); ++j) {
      if (!flow.valid(i, j)) continue;
      const double x = j + static_cast<double>(flow.u(i, j));
      const double y = i + static_cast<double>(flow.v(i, j));
      const auto tap = bilinear_tap(x, y, src.width(), src.height());
      if (!tap || !corners_valid(src.valid, *tap)) continue;
      out.lambda1(i, j) = interpolate(src.lambda1, *tap);
      out.lambda2(i, j) = interpolate(src.lambda2, *tap);
      out.valid(i, j) = 1;
    }
  }
  return out;
}

ScalarField error_map(const CoordField& ct, const CoordField& cr) {
  if (ct.width() != cr.width() || ct.height() != cr.height()) {
    throw Error(Errc::kDimMismatch, "error map inputs differ in size");
  }
  ScalarField out(ct.width(), ct.height(), kErrorSentinel);
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    if (!ct.valid[k] || !cr.valid[k]) continue;
    out.values[k] = std::hypot(ct.lambda1[k] - cr.lambda1[k], ct.lambda2[k] - cr.lambda2[k]);
  }
  return out;
}

CoordField upsample_bilinear(const CoordField& field, int factor) {
  check_factor(factor);
  if (factor == 1) return field;
  CoordField out(field.width() * factor, field.height() * factor);
  for (int i = 0; i < out.height(); ++i) {
    for (int j = 0; j < out.width(); ++j) {
      const auto t = extrapolating_tap(static_cast<double>(j) / factor, static_cast<double>(i) / factor,
                                       field.width(), field.height());
      if (!corners_valid(field.valid, t)) continue;
      out.lambda1(i, j) = interpolate(field.lambda1, t);
      out.lambda2(i, j) = interpolate(field.lambda2, t);
      out.valid(i, j) = 1;
    }
  }
  return out;
}

FlowField upsample_bilinear(const FlowField& field, int factor) {
  check_factor(factor);
  if (factor == 1) return field;
  FlowField out(field.width() * factor, field.height() * factor);
  for (int i = 0; i < out.height(); ++i) {
    for (int j = 0; j < out.width(); ++j) {
      const auto t = extrapolating_tap(static_cast<double>(j) / factor, static_cast<double>(i) / factor,
                                       field.width(), field.height());
      if (!corners_valid(field.valid, t)) {
        out.invalidate(i, j);
        continue;
      }
      out.set(i, j, {factor * interpolate(field.u, t), factor * interpolate(field.v, t)});
    }
  }
  return out;
}

FlowField synth_flow_homography(const HomographyMap& h, int width, int height,
                                std::span<const Rect> occluders, double noise_sigma,
                                std::uint64_t seed) {
  const HomographyMap inv = h.inverse();
  FlowField flow(width, height);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const Point2 q{static_cast<double>(j), static_cast<double>(i)};
      if (const auto p = inv.try_apply(q)) {
        flow.set(i, j, *p - q);
      } else {
        flow.invalidate(i, j);
      }
    }
  }
  for (const Rect& r : occluders) {
    for (int i = std::max(r.y, 0); i < std::min(r.y + r.h, height); ++i)
      for (int j = std::max(r.x, 0); j < std::min(r.x + r.w, width); ++j) flow.invalidate(i, j);
  }
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        if (!flow.valid(i, j)) continue;
        const double du = noise(rng);
        const double dv = noise(rng);
        flow.set(i, j, flow.displacement(i, j) + Point2{du, dv});
      }
    }
  }
  return flow;
}

namespace {

bool inside_any(std::span<const Rect> rects, int row, int col) noexcept {
  return std::any_of(rects.begin(), rects.end(), [&](const Rect& r) {
    return col >= r.x && col < r.x + r.w && row >= r.y && row < r.y + r.h;
  });
}

}  // namespace

SyntheticPair synth_flow_pair(const ScenarioSpec& spec) {
  const int w = spec.width;
  const int h = spec.height;
  if (w < 1 || h < 1) throw Error(Errc::kInvalidArgument, "scenario dimensions must be positive");
  if (spec.patch_size < 1) throw Error(Errc::kInvalidArgument, "patch size must be positive");

  SyntheticPair out;
  out.forward = synth_flow_homography(spec.homography, w, h, spec.occluders, spec.noise_sigma, spec.seed);
  out.backward = synth_flow_homography(spec.homography.inverse(), w, h, {}, spec.noise_sigma,
                                       derive_seed(spec.seed, 1));
  // A source pixel whose image falls on an occluder has no valid match.
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const auto q = spec.homography.try_apply({static_cast<double>(j), static_cast<double>(i)});
      if (!q) continue;
      const int qi = static_cast<int>(std::lround(q->y));
      const int qj = static_cast<int>(std::lround(q->x));
      if (inside_any(spec.occluders, qi, qj)) out.backward.invalidate(i, j);
    }
  }

  const HomographyMap inv = spec.homography.inverse();
  out.corrupted = Mask(w, h, 0);
  if (spec.corrupt_quadrant) {
    const int quadrant = *spec.corrupt_quadrant;
    if (quadrant < 0 || quadrant > 3) throw Error(Errc::kInvalidArgument, "quadrant must be in 0..3");
    const int x_begin = (quadrant % 2 == 0) ? 0 : w / 2;
    const int x_end = (quadrant % 2 == 0) ? w / 2 : w;
    const int y_begin = (quadrant < 2) ? 0 : h / 2;
    const int y_end = (quadrant < 2) ? h / 2 : h;
    const int p = spec.patch_size;
    FlowField& target = spec.corrupt_side == CorruptSide::kForward ? out.forward : out.backward;
    // Patches are laid out on the grid of the flow being corrupted.
    Mask hit(w, h, 0);

    std::mt19937_64 rng(derive_seed(spec.seed, 2));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.corrupt_sigma);
    for (int py = (y_begin / p) * p; py < y_end; py += p) {
      for (int px = (x_begin / p) * p; px < x_end; px += p) {
        if (coin(rng) >= spec.corrupt_fraction) continue;
        for (int i = std::max(py, y_begin); i < std::min(py + p, y_end); ++i) {
          for (int j = std::max(px, x_begin); j < std::min(px + p, x_end); ++j) {
            hit(i, j) = 1;
            if (!target.valid(i, j)) continue;
            const double du = noise(rng);
            const double dv = noise(rng);
            target.set(i, j, target.displacement(i, j) + Point2{du, dv});
          }
        }
      }
    }
    if (spec.corrupt_side == CorruptSide::kForward) {
      out.corrupted = hit;
    } else {
      // A target pixel is affected when any bilinear corner around its true
      // source point was corrupted.
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          const auto src = inv.try_apply({static_cast<double>(j), static_cast<double>(i)});
          if (!src) continue;
          const auto t = bilinear_tap(src->x, src->y, w, h);
          if (t && (hit(t->y0, t->x0) || hit(t->y0, t->x1) || hit(t->y1, t->x0) || hit(t->y1, t->x1))) {
            out.corrupted(i, j) = 1;
          }
        }
      }
    }
  }

  out.gt_clean = Mask(w, h, 0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!out.forward.valid(i, j) || out.corrupted(i, j)) continue;
      const auto p = inv.try_apply({static_cast<double>(j), static_cast<double>(i)});
      if (p && p->x >= 0.0 && p->y >= 0.0 && p->x <= w - 1 && p->y <= h - 1) out.gt_clean(i, j) = 1;
    }
  }
  return out;
}

}  // namespace pcf
