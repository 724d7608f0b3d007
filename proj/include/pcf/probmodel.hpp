#pragma once

#include <array>
#include <span>
#include <vector>

#include "pcf/flowfield.hpp"
#include "pcf/geometry.hpp"
#include "pcf/grid.hpp"

namespace pcf {

/// Variance ranges of the two mixture components and the confidence radius.
/// Defaults are the published hyperparameters.
struct GmmConstraints {
  double delta_plus = 1.0;
  double delta_minus = 11.0;
  double margin = 2.0;
  double radius = 1.0;

  double sigma_minus_floor() const noexcept { return delta_plus + margin; }
  /// Throws Error(kInvalidArgument) unless 0 < delta_plus,
  /// delta_plus + margin < delta_minus, margin > 0 and radius > 0.
  void validate() const;
};

/// Reliable (+) and erroneous (-) components share the mean; alpha_minus is
/// 1 - alpha_plus.
struct GmmParams {
  double alpha_plus = 0.5;
  double sigma_plus_sq = 0.5;
  double sigma_minus_sq = 7.0;

  /// 0 <= a <= 1, 0 <= s+ <= d+ < d+ + margin <= s- < d-.
  bool satisfies(const GmmConstraints& c) const noexcept;
};

/// Unconstrained parameters fed through constrain().
struct RawParams {
  double alpha = 0.0;
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;
};

double logistic(double z) noexcept;

/// Isotropic 2D normal density. Throws Error(kNonPositiveVariance).
double gaussian2d(Point2 x, Point2 mu, double sigma_sq);

double gmm_pdf(Point2 x, Point2 mu, const GmmParams& params);

/// alpha = logistic(a), s+ = d+ logistic(sp),
/// s- = (d+ + margin) + (d- - d+ - margin) logistic(sm).
GmmParams constrain(const RawParams& raw, const GmmConstraints& c);

/// Mass of the mixture inside the disk |x - mu| < radius:
/// 1 - e^{-R^2/2s-} + alpha (e^{-R^2/2s-} - e^{-R^2/2s+}). s+ = 0 is the
/// limit e^{-inf} = 0.
double confidence(const GmmParams& params, double radius);

/// D = exp(-gamma / d) with d the pixel distance to `origin`; 0 at d = 0.
ScalarField distance_map(int width, int height, Point2 origin, double gamma = 0.03);

struct Sample {
  Point2 x;
  Point2 mu;
};

/// Smallest density fed to log(); keeps far outliers finite.
inline constexpr double kLogClamp = 1e-300;

/// Mean negative log-likelihood. Throws Error(kEmptySamples).
double nll(std::span<const Sample> samples, const GmmParams& params);

struct NllGradient {
  double value = 0.0;
  /// d(mean NLL) / d(raw alpha, raw sigma_plus, raw sigma_minus).
  std::array<double, 3> grad{};
};

/// Mean NLL at constrain(raw) and its analytic gradient w.r.t. raw. The
/// likelihood is evaluated in log space without the kLogClamp floor, so it
/// agrees with nll() except for samples whose density underflows.
NllGradient nll_gradient(std::span<const double> squared_residuals, const RawParams& raw,
                         const GmmConstraints& c);
NllGradient nll_gradient(std::span<const Sample> samples, const RawParams& raw, const GmmConstraints& c);

/// Adam on the raw parameters, starting at zero. The lowest-NLL iterate is
/// returned, so the result never scores worse than the start.
struct OptimizerConfig {
  double learning_rate = 0.05;
  int iterations = 500;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

inline constexpr std::size_t kMinFitSamples = 8;

struct FitResult {
  GmmParams params;
  RawParams raw;
  double initial_nll = 0.0;
  double final_nll = 0.0;
};

/// Errors: kEmptySamples below kMinFitSamples, kNonFinite if the loss or
/// its gradient stops being finite.
FitResult fit_gmm(std::span<const double> squared_residuals, const GmmConstraints& c,
                  const OptimizerConfig& opt = {});
GmmParams fit_params(std::span<const Sample> samples, const GmmConstraints& c, const OptimizerConfig& opt = {});

/// Parameters per patch_size x patch_size block (the last row/column of
/// patches may be partial). Unfitted patches keep default parameters.
struct GmmParamField {
  int patch_size = 8;
  int width = 0;
  int height = 0;
  Grid<GmmParams> cells;
  Mask fitted;
};

/// Per-pixel confidence in [0, 1].
struct ConfidenceField {
  Grid<double> m;

  ConfidenceField() = default;
  ConfidenceField(int width, int height, double fill = 0.0) : m(width, height, fill) {}

  int width() const noexcept { return m.width(); }
  int height() const noexcept { return m.height(); }
  double mean_over(const Mask& where) const;
};

struct ConfidenceEstimate {
  GmmParamField params;
  ConfidenceField confidence;
};

/// Fits one GMM per patch to the residual vectors flagged valid and
/// broadcasts its confidence to every pixel of the patch. Patches with fewer
/// than kMinFitSamples valid residuals get confidence 0.
ConfidenceEstimate confidence_from_residuals(const Grid<Point2>& residuals, const Mask& valid, int patch_size,
                                             const GmmConstraints& c, const OptimizerConfig& opt = {});

/// Residual r(q) = p + Y_bwd(p) - q with p = q + Y_fwd(q) (forward-backward
/// round trip, pixels), valid where both flows are usable.
void forward_backward_residuals(const FlowField& flow_fwd, const FlowField& flow_bwd, Grid<Point2>& residuals,
                                Mask& valid);

/// Throws Error(kDimMismatch) when the flows differ in size,
/// Error(kInvalidArgument) when patch_size < 4.
ConfidenceEstimate confidence_field_from_flow_pair(const FlowField& flow_fwd, const FlowField& flow_bwd,
                                                   int patch_size, const GmmConstraints& c,
                                                   const OptimizerConfig& opt = {});

}  // namespace pcf
