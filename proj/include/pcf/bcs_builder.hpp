#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pcf/flowfield.hpp"
#include "pcf/geometry.hpp"
#include "pcf/grid.hpp"

namespace pcf {

using DensityMap = Grid<std::uint32_t>;

struct FlowDensity {
  DensityMap source;  // G^s: how often each source pixel is referenced
  DensityMap target;  // G^t: G^s looked up through the flow
};

/// gs(p) counts valid target pixels q with round(q + Y(q)) == p (in bounds);
/// gt(q) = gs(round(q + Y(q))) for valid q whose rounded source is in bounds,
/// 0 otherwise. Rounding is half away from zero. Throws Error(kEmptyFlow)
/// when no pixel is valid.
FlowDensity flow_density(const FlowField& flow);

/// Same-size K x K box average of `density` with zero padding (divisor K^2).
Grid<double> average_pool(const DensityMap& density, int k);

/// Row-major-first argmax of the pooled density over pixels not set in
/// `exclusion` (an empty mask excludes nothing). Throws Error(kNoCandidate)
/// when every admissible pooled value is zero.
Point2 select_origin(const DensityMap& gt, int k, const Mask& exclusion = {});

struct BuilderConfig {
  int k = 9;
  int max_reselect = 5;
  std::uint64_t rng_seed = 0;
  /// Mean probe confidence below this counts as a failed system.
  double probe_threshold = 0.2;
  /// Auxiliary-vertex sampling attempts before giving up.
  int max_vertex_attempts = 32;

  double vertex_radius() const noexcept { return (k - 1) / 2.0; }
  /// Throws Error(kInvalidArgument).
  void validate() const;
};

struct BcsPair {
  Bcs source;
  Bcs target;

  bool operator==(const BcsPair&) const = default;
};

/// Target origin at the pooled density peak, two more target vertices drawn
/// uniformly (seeded) from the disk of radius (k-1)/2 around it, and source
/// vertices v + Y(v) with the flow sampled bilinearly.
///
/// Candidates outside the image, on invalid flow, closer than one pixel to
/// another vertex, or yielding a degenerate source or target triangle are
/// redrawn, up to cfg.max_vertex_attempts times.
///
/// Errors: kNoCandidate (from select_origin), kInvalidFlowAtVertex when the
/// origin itself has no usable flow or the attempts ran out on invalid flow,
/// kDegenerateAfterRetries otherwise.
BcsPair build_bcs_pair(const FlowField& flow, const BuilderConfig& cfg, const Mask& exclusion = {});

/// Sets every pixel within `radius` of `center` (inclusive).
void mask_disk(Mask& mask, Point2 center, double radius);

/// Returns the mean confidence a BcsPair achieves.
using ConfidenceProbe = std::function<double(const BcsPair&)>;

struct ReselectionResult {
  /// Empty on fallback: the caller should emit an all-zero confidence map
  /// with Cartesian coordinates.
  std::optional<BcsPair> pair;
  /// Build attempts made, including ones that raised a builder error.
  int builds = 0;
  /// Origins tried, in order (only attempts that got past origin selection).
  std::vector<Point2> origins;

  bool fallback() const noexcept { return !pair.has_value(); }
};

/// Builds a pair and probes it; when the probe reports less than
/// cfg.probe_threshold the disk of radius (k-1)/2 around the origin is masked
/// and the build is repeated, at most cfg.max_reselect extra times. Builder
/// errors count as failed attempts; running out of candidate origins ends
/// the search early. Never throws for pipeline failures; a fallback is a
/// value.
ReselectionResult build_with_reselection(const FlowField& flow, const BuilderConfig& cfg,
                                         const ConfidenceProbe& probe, const Mask& exclusion = {});

}  // namespace pcf
