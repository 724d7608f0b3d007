#pragma once

#include <optional>
#include <vector>

#include "pcf/bcs_builder.hpp"
#include "pcf/flowfield.hpp"
#include "pcf/geometry.hpp"
#include "pcf/probmodel.hpp"

namespace pcf {

enum class PcfMode { kHard, kSoft };

struct Pcf {
  CoordField coords;
  ConfidenceField confidence;
  PcfMode mode = PcfMode::kHard;
  double threshold = 0.5;
};

/// Soft: coords scaled by the confidence. Hard: coords kept where
/// confidence >= threshold and zeroed elsewhere, confidence binarized.
/// Errors: kDimMismatch, kInvalidArgument for a threshold outside [0, 1].
Pcf assemble_pcf(const CoordField& coords, const ConfidenceField& conf, PcfMode mode = PcfMode::kHard,
                 double threshold = 0.5);

Mask reliable_mask(const ConfidenceField& conf, double threshold = 0.5);

/// l1 = x, l2 = y at every pixel, all valid.
CoordField cartesian_field(int width, int height);

/// Confidence of one BCS pair against a flow pair. With p = q + Y_fwd(q),
/// the remapped coordinate C^r(q) is placed in the target frame through the
/// target BCS and compared with where the backward flow sends p:
/// r(q) = reconstruct(C^r(q), target) - (p + Y_bwd(p)).
/// Working in target pixels keeps the residual scale independent of the
/// triangle's size; it grows with forward/backward disagreement and with
/// departure of the flow from the BCS pair's affine map.
struct BcsConfidence {
  CoordField remapped;
  /// Pixels with a usable residual: forward flow valid, C^r defined, and the
  /// backward flow defined at the source point.
  Mask valid;
  ConfidenceEstimate estimate;
};

struct PcfSetConfig {
  BuilderConfig builder;
  GmmConstraints gmm;
  OptimizerConfig optimizer;
  int patch_size = 8;
  int max_systems = 2;
  double threshold = 0.5;
  /// Stop once a system adds fewer than this fraction of all pixels.
  double min_gain = 0.01;

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

BcsConfidence bcs_confidence(const FlowField& flow_fwd, const FlowField& flow_bwd, const BcsPair& pair,
                             const PcfSetConfig& cfg);

struct PcfEntry {
  /// Empty for a fallback entry (Cartesian coords, zero confidence).
  std::optional<BcsPair> bcs;
  Pcf pcf;
  /// Per-patch mixture parameters; empty for a fallback entry.
  GmmParamField params;
  Mask reliable;
  /// Mean confidence over the entry's usable pixels.
  double mean_confidence = 0.0;
  int builds = 0;
  std::vector<Point2> origins;

  bool fallback() const noexcept { return !bcs.has_value(); }
};

struct PcfSet {
  std::vector<PcfEntry> entries;
  Mask union_reliable;

  bool all_fallback() const noexcept;
};

/// Adds one system at a time. Each system's origin avoids the reliable union
/// so far and the disks around earlier origins; its confidence is zeroed
/// inside the union so reliable masks stay disjoint. Stops after
/// cfg.max_systems entries or after an entry that grows the union by less
/// than cfg.min_gain of the image.
/// Errors: kDimMismatch when the flows differ in size, kInvalidArgument.
PcfSet build_pcf_set(const FlowField& flow_fwd, const FlowField& flow_bwd, const PcfSetConfig& cfg);

/// |A & B| / |A | B|, 1 when both are empty. Throws Error(kDimMismatch).
double coverage_iou(const Mask& a, const Mask& b);

/// IoU of the union of the first n entries' reliable masks, n = 1..size.
std::vector<double> cumulative_iou(const PcfSet& set, const Mask& gt);

}  // namespace pcf
