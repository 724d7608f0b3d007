#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcf/flowfield.hpp"
#include "pcf/geometry.hpp"

namespace pcf {

/// A source point and the target point it matches.
struct Correspondence {
  Point2 src;
  Point2 dst;
};

/// Hartley-normalized DLT over all given correspondences (at least four).
/// Errors: kTooFewPoints, kDegenerate when the points do not constrain a
/// non-singular homography.
HomographyMap fit_homography_dlt(std::span<const Correspondence> corr);

/// Mean of |H src - dst| and |H^-1 dst - src|; +inf if either side maps to
/// infinity.
double symmetric_transfer_error(const HomographyMap& h, const HomographyMap& h_inv, const Correspondence& c);

struct RansacResult {
  HomographyMap model;
  std::vector<std::uint8_t> inliers;
  std::size_t inlier_count = 0;
};

/// Four-point RANSAC. A hypothesis replaces the incumbent only with strictly
/// more inliers (error < eps), so ties go to the first found. The winner is
/// refit on its inliers and kept if that does not lose inliers.
/// Errors: kTooFewPoints, kDegenerate when every minimal sample was collinear.
RansacResult estimate_homography_ransac(std::span<const Correspondence> corr, double eps, int iterations,
                                        std::uint64_t rng_seed);

struct MultiHomogConfig {
  double eps_global = 8.0;
  double eps_local = 3.0;
  std::size_t min_inliers = 30;
  int max_models = 5;
  int ransac_iters = 1000;
  std::uint64_t rng_seed = 0;

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

struct MultiHomogResult {
  /// 0 = unassigned, t = inlier of model t (1-based).
  std::vector<int> labels;
  std::vector<HomographyMap> models;
};

/// Peels off one homography per round from the still-unassigned
/// correspondences: threshold eps_global in the first round and eps_local
/// afterwards, stopping when the best model has fewer than min_inliers.
/// Throws Error(kTooFewPoints) with fewer than min_inliers correspondences.
MultiHomogResult multi_homography_classify(std::span<const Correspondence> corr, const MultiHomogConfig& cfg);

/// Correspondences (q + Y(q), q) at valid pixels on a stride grid, optionally
/// restricted to pixels set in `mask`.
std::vector<Correspondence> flow_correspondences(const FlowField& flow, int stride, const Mask& mask = {});

/// Dense labels: each valid pixel gets the first model whose transfer error
/// is under that round's threshold, 0 otherwise.
Grid<int> label_flow(const FlowField& flow, const MultiHomogResult& result, const MultiHomogConfig& cfg);

}  // namespace pcf
