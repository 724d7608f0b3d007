#include "pcf/homography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "pcf/random.hpp"

namespace pcf {

namespace {

// Similarity taking the centroid to 0 and the mean distance to sqrt(2).
Eigen::Matrix3d hartley(std::span<const Point2> pts) {
  Point2 c;
  for (const auto& p : pts) c = c + p;
  c = (1.0 / static_cast<double>(pts.size())) * c;
  double mean_d = 0.0;
  for (const auto& p : pts) mean_d += norm(p - c);
  mean_d /= static_cast<double>(pts.size());
  const double s = mean_d > 0.0 ? std::sqrt(2.0) / mean_d : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1;
  return t;
}

Point2 project(const Eigen::Matrix3d& t, Point2 p) {
  const Eigen::Vector3d r = t * Eigen::Vector3d(p.x, p.y, 1.0);
  return {r.x() / r.z(), r.y() / r.z()};
}

bool collinear(Point2 a, Point2 b, Point2 c) {
  // Relative to the triangle's scale so the test is unit independent.
  const double scale = std::max({squared_norm(b - a), squared_norm(c - a), squared_norm(c - b)});
  return std::abs(signed_area(a, b, c)) <= 1e-6 * scale;
}

bool sample_degenerate(const std::array<Correspondence, 4>& s) {
  for (int skip = 0; skip < 4; ++skip) {
    std::array<int, 3> idx{};
    for (int k = 0, n = 0; k < 4; ++k) {
      if (k != skip) idx[n++] = k;
    }
    if (collinear(s[idx[0]].src, s[idx[1]].src, s[idx[2]].src)) return true;
    if (collinear(s[idx[0]].dst, s[idx[1]].dst, s[idx[2]].dst)) return true;
  }
  return false;
}

std::size_t score(const HomographyMap& h, std::span<const Correspondence> corr, double eps,
                  std::vector<std::uint8_t>& mask) {
  const HomographyMap h_inv = h.inverse();
  mask.assign(corr.size(), 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (symmetric_transfer_error(h, h_inv, corr[i]) < eps) {
      mask[i] = 1;
      ++n;
    }
  }
  return n;
}

}  // namespace

HomographyMap fit_homography_dlt(std::span<const Correspondence> corr) {
  if (corr.size() < 4) throw Error(Errc::kTooFewPoints, "homography needs at least 4 correspondences");
  std::vector<Point2> src;
  std::vector<Point2> dst;
  src.reserve(corr.size());
  dst.reserve(corr.size());
  for (const auto& c : corr) {
    src.push_back(c.src);
    dst.push_back(c.dst);
  }
  const Eigen::Matrix3d ts = hartley(src);
  const Eigen::Matrix3d td = hartley(dst);

  Eigen::MatrixXd a(2 * corr.size(), 9);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Point2 s = project(ts, src[i]);
    const Point2 d = project(td, dst[i]);
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -s.x, -s.y, -1, 0, 0, 0, d.x * s.x, d.x * s.y, d.x;
    a.row(r + 1) << 0, 0, 0, -s.x, -s.y, -1, d.y * s.x, d.y * s.y, d.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  // A null space wider than one dimension (e.g. collinear points) leaves H undetermined.
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 1e-10 * sv(0))) {
    throw Error(Errc::kDegenerate, "correspondences do not determine a homography");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d m = td.inverse() * hn * ts;
  if (!m.allFinite() || std::abs(m.determinant()) < 1e-12 * std::pow(m.norm(), 3)) {
    throw Error(Errc::kDegenerate, "correspondences do not determine a homography");
  }
  try {
    return HomographyMap(m);
  } catch (const Error&) {
    throw Error(Errc::kDegenerate, "correspondences do not determine a homography");
  }
}

double symmetric_transfer_error(const HomographyMap& h, const HomographyMap& h_inv, const Correspondence& c) {
  const auto fwd = h.try_apply(c.src);
  const auto bwd = h_inv.try_apply(c.dst);
  if (!fwd || !bwd) return std::numeric_limits<double>::infinity();
  return 0.5 * (norm(*fwd - c.dst) + norm(*bwd - c.src));
}

RansacResult estimate_homography_ransac(std::span<const Correspondence> corr, double eps, int iterations,
                                        std::uint64_t rng_seed) {
  if (corr.size() < 4) throw Error(Errc::kTooFewPoints, "RANSAC needs at least 4 correspondences");
  if (!(eps > 0.0) || iterations < 1) throw Error(Errc::kInvalidArgument, "eps and iterations must be positive");
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, corr.size() - 1);

  RansacResult best;
  bool found = false;
  std::vector<std::uint8_t> mask;
  for (int it = 0; it < iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = pick(rng);
        fresh = true;
        for (int m = 0; m < k; ++m) fresh = fresh && idx[m] != idx[k];
      }
    }
    const std::array<Correspondence, 4> sample{corr[idx[0]], corr[idx[1]], corr[idx[2]], corr[idx[3]]};
    if (sample_degenerate(sample)) continue;
    HomographyMap h;
    try {
      h = fit_homography_dlt(sample);
    } catch (const Error&) {
      continue;
    }
    const std::size_t n = score(h, corr, eps, mask);
    if (!found || n > best.inlier_count) {
      found = true;
      best.model = h;
      best.inliers = mask;
      best.inlier_count = n;
    }
  }
  if (!found) throw Error(Errc::kDegenerate, "every minimal sample was degenerate");

  if (best.inlier_count >= 4) {
    std::vector<Correspondence> in;
    for (std::size_t i = 0; i < corr.size(); ++i) {
      if (best.inliers[i]) in.push_back(corr[i]);
    }
    try {
      const HomographyMap refit = fit_homography_dlt(in);
      const std::size_t n = score(refit, corr, eps, mask);
      if (n >= best.inlier_count) {
        best.model = refit;
        best.inliers = mask;
        best.inlier_count = n;
      }
    } catch (const Error&) {
    }
  }
  return best;
}

void MultiHomogConfig::validate() const {
  if (!(eps_local > 0.0 && eps_local < eps_global)) {
    throw Error(Errc::kInvalidArgument, "need 0 < eps_local < eps_global");
  }
  if (min_inliers < 4) throw Error(Errc::kInvalidArgument, "min_inliers must be at least 4");
  if (max_models < 1) throw Error(Errc::kInvalidArgument, "max_models must be at least 1");
  if (ransac_iters < 1) throw Error(Errc::kInvalidArgument, "ransac_iters must be at least 1");
}

MultiHomogResult multi_homography_classify(std::span<const Correspondence> corr, const MultiHomogConfig& cfg) {
  cfg.validate();
  if (corr.size() < cfg.min_inliers) throw Error(Errc::kTooFewPoints, "fewer correspondences than min_inliers");
  MultiHomogResult out;
  out.labels.assign(corr.size(), 0);

  for (int t = 1; t <= cfg.max_models; ++t) {
    std::vector<std::size_t> free_idx;
    std::vector<Correspondence> free;
    for (std::size_t i = 0; i < corr.size(); ++i) {
      if (out.labels[i] != 0) continue;
      free_idx.push_back(i);
      free.push_back(corr[i]);
    }
    if (free.size() < cfg.min_inliers) break;
    const double eps = t == 1 ? cfg.eps_global : cfg.eps_local;
    RansacResult r;
    try {
      r = estimate_homography_ransac(free, eps, cfg.ransac_iters,
                                     derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(t)));
    } catch (const Error& e) {
      if (e.code() == Errc::kDegenerate) break;
      throw;
    }
    if (r.inlier_count < cfg.min_inliers) break;
    for (std::size_t k = 0; k < free.size(); ++k) {
      if (r.inliers[k]) out.labels[free_idx[k]] = t;
    }
    out.models.push_back(r.model);
  }
  return out;
}

std::vector<Correspondence> flow_correspondences(const FlowField& flow, int stride, const Mask& mask) {
  if (stride < 1) throw Error(Errc::kInvalidArgument, "stride must be positive");
  if (!mask.empty() && !mask.same_shape(flow.valid)) throw Error(Errc::kDimMismatch, "mask does not match flow");
  std::vector<Correspondence> out;
  for (int i = 0; i < flow.height(); i += stride) {
    for (int j = 0; j < flow.width(); j += stride) {
      if (!flow.valid(i, j) || (!mask.empty() && !mask(i, j))) continue;
      const Point2 q{static_cast<double>(j), static_cast<double>(i)};
      out.push_back({q + flow.displacement(i, j), q});
    }
  }
  return out;
}

Grid<int> label_flow(const FlowField& flow, const MultiHomogResult& result, const MultiHomogConfig& cfg) {
  Grid<int> labels(flow.width(), flow.height(), 0);
  std::vector<HomographyMap> inverses;
  for (const auto& h : result.models) inverses.push_back(h.inverse());
  for (int i = 0; i < flow.height(); ++i) {
    for (int j = 0; j < flow.width(); ++j) {
      if (!flow.valid(i, j)) continue;
      const Point2 q{static_cast<double>(j), static_cast<double>(i)};
      const Correspondence c{q + flow.displacement(i, j), q};
      for (std::size_t t = 0; t < result.models.size(); ++t) {
        const double eps = t == 0 ? cfg.eps_global : cfg.eps_local;
        if (symmetric_transfer_error(result.models[t], inverses[t], c) < eps) {
          labels(i, j) = static_cast<int>(t) + 1;
          break;
        }
      }
    }
  }
  return labels;
}

}  // namespace pcf
