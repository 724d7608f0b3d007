#include "pcf/bcs_builder.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pcf/random.hpp"

namespace pcf {

namespace {

// Rounded source pixel of target pixel (i, j), or nullopt if out of bounds.
std::optional<std::pair<int, int>> rounded_source(const FlowField& flow, int i, int j) {
  const long si = std::lround(i + static_cast<double>(flow.v(i, j)));
  const long sj = std::lround(j + static_cast<double>(flow.u(i, j)));
  if (si < 0 || sj < 0 || si >= flow.height() || sj >= flow.width()) return std::nullopt;
  return std::pair<int, int>{static_cast<int>(si), static_cast<int>(sj)};
}

void check_kernel(int k) {
  if (k < 1 || k % 2 == 0) throw Error(Errc::kInvalidArgument, "pooling kernel must be a positive odd integer");
}

// Same-size K x K window sums with zero padding, via an integral image.
Grid<std::uint64_t> window_sums(const DensityMap& density, int k) {
  check_kernel(k);
  const int w = density.width();
  const int h = density.height();
  Grid<std::uint64_t> integral(w + 1, h + 1, 0);
  for (int i = 0; i < h; ++i) {
    std::uint64_t row = 0;
    for (int j = 0; j < w; ++j) {
      row += density(i, j);
      integral(i + 1, j + 1) = integral(i, j + 1) + row;
    }
  }
  const int r = k / 2;
  Grid<std::uint64_t> sums(w, h, 0);
  for (int i = 0; i < h; ++i) {
    const int i0 = std::max(i - r, 0);
    const int i1 = std::min(i + r + 1, h);
    for (int j = 0; j < w; ++j) {
      const int j0 = std::max(j - r, 0);
      const int j1 = std::min(j + r + 1, w);
      sums(i, j) = integral(i1, j1) + integral(i0, j0) - integral(i0, j1) - integral(i1, j0);
    }
  }
  return sums;
}

}  // namespace

FlowDensity flow_density(const FlowField& flow) {
  FlowDensity out{DensityMap(flow.width(), flow.height(), 0), DensityMap(flow.width(), flow.height(), 0)};
  if (count_set(flow.valid) == 0) throw Error(Errc::kEmptyFlow, "flow has no valid pixels");
  for (int i = 0; i < flow.height(); ++i) {
    for (int j = 0; j < flow.width(); ++j) {
      if (!flow.valid(i, j)) continue;
      if (const auto s = rounded_source(flow, i, j)) ++out.source(s->first, s->second);
    }
  }
  for (int i = 0; i < flow.height(); ++i) {
    for (int j = 0; j < flow.width(); ++j) {
      if (!flow.valid(i, j)) continue;
      if (const auto s = rounded_source(flow, i, j)) out.target(i, j) = out.source(s->first, s->second);
    }
  }
  return out;
}

Grid<double> average_pool(const DensityMap& density, int k) {
  const auto sums = window_sums(density, k);
  Grid<double> pooled(density.width(), density.height());
  const double area = static_cast<double>(k) * k;
  for (std::size_t n = 0; n < sums.size(); ++n) pooled[n] = static_cast<double>(sums[n]) / area;
  return pooled;
}

Point2 select_origin(const DensityMap& gt, int k, const Mask& exclusion) {
  if (!exclusion.empty() && !exclusion.same_shape(gt)) {
    throw Error(Errc::kDimMismatch, "exclusion mask does not match density map");
  }
  // Comparing integer window sums is equivalent to comparing averages.
  const auto sums = window_sums(gt, k);
  std::uint64_t best = 0;
  std::optional<Point2> origin;
  for (int i = 0; i < gt.height(); ++i) {
    for (int j = 0; j < gt.width(); ++j) {
      if (!exclusion.empty() && exclusion(i, j)) continue;
      if (sums(i, j) > best) {
        best = sums(i, j);
        origin = Point2{static_cast<double>(j), static_cast<double>(i)};
      }
    }
  }
  if (!origin) throw Error(Errc::kNoCandidate, "no admissible pixel with positive pooled density");
  return *origin;
}

void BuilderConfig::validate() const {
  if (k < 3 || k % 2 == 0) throw Error(Errc::kInvalidArgument, "k must be odd and >= 3");
  if (max_reselect < 0) throw Error(Errc::kInvalidArgument, "max_reselect must be >= 0");
  if (max_vertex_attempts < 1) throw Error(Errc::kInvalidArgument, "max_vertex_attempts must be >= 1");
  if (!(probe_threshold >= 0.0 && probe_threshold <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "probe_threshold must lie in [0, 1]");
  }
}

BcsPair build_bcs_pair(const FlowField& flow, const BuilderConfig& cfg, const Mask& exclusion) {
  cfg.validate();
  const auto density = flow_density(flow);
  const Point2 origin = select_origin(density.target, cfg.k, exclusion);
  const auto origin_flow = sample_flow(flow, origin);
  if (!origin_flow) throw Error(Errc::kInvalidFlowAtVertex, "flow is invalid at the selected origin");

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = cfg.vertex_radius();
  auto draw = [&]() {
    const double r = radius * std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    return origin + Point2{r * std::cos(theta), r * std::sin(theta)};
  };

  bool last_failure_invalid_flow = false;
  for (int attempt = 0; attempt < cfg.max_vertex_attempts; ++attempt) {
    const Point2 b = draw();
    const Point2 c = draw();
    const auto flow_b = sample_flow(flow, b);
    const auto flow_c = sample_flow(flow, c);
    if (!flow_b || !flow_c) {
      last_failure_invalid_flow = true;
      continue;
    }
    last_failure_invalid_flow = false;
    if (norm(b - origin) < 1.0 || norm(c - origin) < 1.0 || norm(b - c) < 1.0) continue;
    BcsPair pair;
    pair.target = {origin, b, c};
    pair.source = {origin + *origin_flow, b + *flow_b, c + *flow_c};
    if (is_degenerate(pair.target) || is_degenerate(pair.source)) continue;
    return pair;
  }
  if (last_failure_invalid_flow) {
    throw Error(Errc::kInvalidFlowAtVertex, "auxiliary vertices kept landing on invalid flow");
  }
  throw Error(Errc::kDegenerateAfterRetries,
              "no non-degenerate triangle after " + std::to_string(cfg.max_vertex_attempts) + " attempts");
}

void mask_disk(Mask& mask, Point2 center, double radius) {
  const int i0 = std::max(0, static_cast<int>(std::floor(center.y - radius)));
  const int i1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(center.y + radius)));
  const int j0 = std::max(0, static_cast<int>(std::floor(center.x - radius)));
  const int j1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(center.x + radius)));
  const double r2 = radius * radius;
  for (int i = i0; i <= i1; ++i) {
    for (int j = j0; j <= j1; ++j) {
      const double dx = j - center.x;
      const double dy = i - center.y;
      if (dx * dx + dy * dy <= r2) mask(i, j) = 1;
    }
  }
}

ReselectionResult build_with_reselection(const FlowField& flow, const BuilderConfig& cfg,
                                         const ConfidenceProbe& probe, const Mask& exclusion) {
  cfg.validate();
  Mask excluded = exclusion.empty() ? Mask(flow.width(), flow.height(), 0) : exclusion;
  if (!excluded.same_shape(flow.valid)) throw Error(Errc::kDimMismatch, "exclusion mask does not match flow");

  ReselectionResult result;
  for (int attempt = 0; attempt <= cfg.max_reselect; ++attempt) {
    BuilderConfig attempt_cfg = cfg;
    if (attempt > 0) attempt_cfg.rng_seed = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(attempt));

    Point2 origin;
    try {
      origin = select_origin(flow_density(flow).target, cfg.k, excluded);
    } catch (const Error& e) {
      if (e.code() == Errc::kNoCandidate || e.code() == Errc::kEmptyFlow) break;
      throw;
    }
    ++result.builds;
    result.origins.push_back(origin);
    try {
      BcsPair pair = build_bcs_pair(flow, attempt_cfg, excluded);
      if (probe(pair) >= cfg.probe_threshold) {
        result.pair = pair;
        return result;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::kInvalidFlowAtVertex && e.code() != Errc::kDegenerateAfterRetries) throw;
    }
    mask_disk(excluded, origin, cfg.vertex_radius());
  }
  return result;
}

}  // namespace pcf
