#include "pcf/pcf_set.hpp"

#include <limits>

#include "pcf/random.hpp"

namespace pcf {

namespace {

void or_into(Mask& acc, const Mask& m) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = (acc[k] || m[k]) ? 1 : 0;
}

// Valid pixels not yet covered.
Mask uncovered(const Mask& valid, const Mask& covered) {
  Mask out(valid.width(), valid.height(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (valid[k] && !covered[k]) ? 1 : 0;
  return out;
}

std::uint64_t system_seed(std::uint64_t base, int system) {
  if (system == 0) return base;
  return derive_seed(base, std::numeric_limits<std::uint64_t>::max() - static_cast<std::uint64_t>(system));
}

}  // namespace

Pcf assemble_pcf(const CoordField& coords, const ConfidenceField& conf, PcfMode mode, double threshold) {
  if (!coords.valid.same_shape(conf.m)) throw Error(Errc::kDimMismatch, "coords and confidence differ in size");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(Errc::kInvalidArgument, "threshold must lie in [0, 1]");
  Pcf out{coords, conf, mode, threshold};
  for (std::size_t k = 0; k < conf.m.size(); ++k) {
    const double m = conf.m[k];
    if (mode == PcfMode::kSoft) {
      out.coords.lambda1[k] *= m;
      out.coords.lambda2[k] *= m;
      continue;
    }
    const bool keep = m >= threshold;
    out.confidence.m[k] = keep ? 1.0 : 0.0;
    if (!keep) {
      out.coords.lambda1[k] = 0.0;
      out.coords.lambda2[k] = 0.0;
    }
  }
  return out;
}

Mask reliable_mask(const ConfidenceField& conf, double threshold) {
  Mask out(conf.width(), conf.height(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = conf.m[k] >= threshold ? 1 : 0;
  return out;
}

CoordField cartesian_field(int width, int height) {
  CoordField out(width, height);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      out.lambda1(i, j) = j;
      out.lambda2(i, j) = i;
      out.valid(i, j) = 1;
    }
  }
  return out;
}

void PcfSetConfig::validate() const {
  builder.validate();
  gmm.validate();
  if (patch_size < 4) throw Error(Errc::kInvalidArgument, "patch_size must be at least 4");
  if (max_systems < 1) throw Error(Errc::kInvalidArgument, "max_systems must be at least 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(Errc::kInvalidArgument, "threshold must lie in [0, 1]");
  if (!(min_gain >= 0.0)) throw Error(Errc::kInvalidArgument, "min_gain must be non-negative");
}

BcsConfidence bcs_confidence(const FlowField& flow_fwd, const FlowField& flow_bwd, const BcsPair& pair,
                             const PcfSetConfig& cfg) {
  if (!flow_fwd.valid.same_shape(flow_bwd.valid)) throw Error(Errc::kDimMismatch, "flows differ in size");
  const int w = flow_fwd.width();
  const int h = flow_fwd.height();
  BcsConfidence out;
  out.remapped = warp_field(encode_field(w, h, pair.source), flow_fwd);
  out.valid = Mask(w, h, 0);
  Grid<Point2> residuals(w, h);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!out.remapped.valid(i, j)) continue;
      const Point2 q{static_cast<double>(j), static_cast<double>(i)};
      const Point2 p = q + flow_fwd.displacement(i, j);
      const auto back = sample_flow(flow_bwd, p);
      if (!back) continue;
      const double l1 = out.remapped.lambda1(i, j);
      const double l2 = out.remapped.lambda2(i, j);
      residuals(i, j) = reconstruct({l1, l2, 1.0 - l1 - l2}, pair.target) - (p + *back);
      out.valid(i, j) = 1;
    }
  }
  out.estimate = confidence_from_residuals(residuals, out.valid, cfg.patch_size, cfg.gmm, cfg.optimizer);
  for (std::size_t k = 0; k < out.valid.size(); ++k) {
    if (!out.valid[k]) out.estimate.confidence.m[k] = 0.0;
  }
  return out;
}

bool PcfSet::all_fallback() const noexcept {
  for (const auto& e : entries) {
    if (!e.fallback()) return false;
  }
  return true;
}

PcfSet build_pcf_set(const FlowField& flow_fwd, const FlowField& flow_bwd, const PcfSetConfig& cfg) {
  cfg.validate();
  if (!flow_fwd.valid.same_shape(flow_bwd.valid)) throw Error(Errc::kDimMismatch, "flows differ in size");
  const int w = flow_fwd.width();
  const int h = flow_fwd.height();

  PcfSet set;
  set.union_reliable = Mask(w, h, 0);
  Mask origin_disks(w, h, 0);
  const double total = static_cast<double>(w) * h;

  for (int n = 0; n < cfg.max_systems; ++n) {
    Mask exclusion = set.union_reliable;
    or_into(exclusion, origin_disks);

    // The probe computes the full confidence; keep the last one so the
    // accepted pair is not fitted twice.
    std::optional<std::pair<BcsPair, BcsConfidence>> last;
    auto masked_confidence = [&](const BcsPair& pair) -> const BcsConfidence& {
      if (!last || !(last->first == pair)) {
        last.emplace(pair, bcs_confidence(flow_fwd, flow_bwd, pair, cfg));
        auto& conf = last->second.estimate.confidence.m;
        for (std::size_t k = 0; k < conf.size(); ++k) {
          if (set.union_reliable[k]) conf[k] = 0.0;
        }
      }
      return last->second;
    };
    auto probe = [&](const BcsPair& pair) {
      const auto& bc = masked_confidence(pair);
      return bc.estimate.confidence.mean_over(uncovered(bc.valid, set.union_reliable));
    };

    BuilderConfig bcfg = cfg.builder;
    bcfg.rng_seed = system_seed(cfg.builder.rng_seed, n);
    const auto sel = build_with_reselection(flow_fwd, bcfg, probe, exclusion);

    PcfEntry entry;
    entry.builds = sel.builds;
    entry.origins = sel.origins;
    for (const auto& o : sel.origins) mask_disk(origin_disks, o, bcfg.vertex_radius());
    if (sel.pair) {
      const auto& bc = masked_confidence(*sel.pair);
      entry.bcs = *sel.pair;
      entry.pcf = assemble_pcf(bc.remapped, bc.estimate.confidence, PcfMode::kHard, cfg.threshold);
      entry.mean_confidence = bc.estimate.confidence.mean_over(bc.valid);
      entry.params = bc.estimate.params;
    } else {
      entry.pcf = assemble_pcf(cartesian_field(w, h), ConfidenceField(w, h, 0.0), PcfMode::kHard, cfg.threshold);
    }
    entry.reliable = reliable_mask(entry.pcf.confidence, cfg.threshold);

    const auto before = count_set(set.union_reliable);
    or_into(set.union_reliable, entry.reliable);
    const auto gain = static_cast<double>(count_set(set.union_reliable) - before);
    set.entries.push_back(std::move(entry));
    if (gain < cfg.min_gain * total) break;
  }
  return set;
}

double coverage_iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw Error(Errc::kDimMismatch, "masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    inter += (a[k] && b[k]) ? 1 : 0;
    uni += (a[k] || b[k]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> cumulative_iou(const PcfSet& set, const Mask& gt) {
  std::vector<double> out;
  if (set.entries.empty()) return out;
  Mask acc(gt.width(), gt.height(), 0);
  for (const auto& e : set.entries) {
    if (!e.reliable.same_shape(gt)) throw Error(Errc::kDimMismatch, "entry mask does not match ground truth");
    or_into(acc, e.reliable);
    out.push_back(coverage_iou(acc, gt));
  }
  return out;
}

}  // namespace pcf
