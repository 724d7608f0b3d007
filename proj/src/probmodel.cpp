#include "pcf/probmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace pcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double log_add(double a, double b) noexcept {
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log of the isotropic 2D normal density at squared distance s.
double log_gauss(double s, double sigma_sq) noexcept { return -s / (2.0 * sigma_sq) - std::log(kTwoPi * sigma_sq); }

// exp(-R^2 / 2 s) with the s = 0 limit.
double tail(double radius, double sigma_sq) noexcept {
  if (sigma_sq <= 0.0) return 0.0;
  return std::exp(-radius * radius / (2.0 * sigma_sq));
}

bool finite(const NllGradient& g) noexcept {
  return std::isfinite(g.value) && std::isfinite(g.grad[0]) && std::isfinite(g.grad[1]) && std::isfinite(g.grad[2]);
}

std::vector<double> squared_offsets(std::span<const Sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(squared_norm(s.x - s.mu));
  return out;
}

}  // namespace

void GmmConstraints::validate() const {
  if (!(delta_plus > 0.0)) throw Error(Errc::kInvalidArgument, "delta_plus must be positive");
  if (!(margin > 0.0)) throw Error(Errc::kInvalidArgument, "margin must be positive");
  if (!(delta_plus + margin < delta_minus)) {
    throw Error(Errc::kInvalidArgument, "delta_plus + margin must be below delta_minus");
  }
  if (!(radius > 0.0)) throw Error(Errc::kInvalidArgument, "radius must be positive");
}

bool GmmParams::satisfies(const GmmConstraints& c) const noexcept {
  return alpha_plus >= 0.0 && alpha_plus <= 1.0 && sigma_plus_sq >= 0.0 && sigma_plus_sq <= c.delta_plus &&
         c.delta_plus < c.sigma_minus_floor() && c.sigma_minus_floor() <= sigma_minus_sq &&
         sigma_minus_sq < c.delta_minus;
}

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double gaussian2d(Point2 x, Point2 mu, double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw Error(Errc::kNonPositiveVariance, "variance must be positive");
  return std::exp(-squared_norm(x - mu) / (2.0 * sigma_sq)) / (kTwoPi * sigma_sq);
}

double gmm_pdf(Point2 x, Point2 mu, const GmmParams& params) {
  const double a = params.alpha_plus;
  double out = 0.0;
  if (a > 0.0) out += a * gaussian2d(x, mu, params.sigma_plus_sq);
  if (a < 1.0) out += (1.0 - a) * gaussian2d(x, mu, params.sigma_minus_sq);
  return out;
}

GmmParams constrain(const RawParams& raw, const GmmConstraints& c) {
  GmmParams p;
  p.alpha_plus = logistic(raw.alpha);
  p.sigma_plus_sq = c.delta_plus * logistic(raw.sigma_plus);
  const double span = c.delta_minus - c.sigma_minus_floor();
  // logistic() can round to exactly 1 for large inputs; keep s- below delta_minus.
  p.sigma_minus_sq = std::min(c.sigma_minus_floor() + span * logistic(raw.sigma_minus),
                              std::nextafter(c.delta_minus, 0.0));
  return p;
}

double confidence(const GmmParams& params, double radius) {
  const double em = tail(radius, params.sigma_minus_sq);
  const double ep = tail(radius, params.sigma_plus_sq);
  return std::clamp(1.0 - em + params.alpha_plus * (em - ep), 0.0, 1.0);
}

ScalarField distance_map(int width, int height, Point2 origin, double gamma) {
  if (!(gamma > 0.0)) throw Error(Errc::kInvalidArgument, "gamma must be positive");
  ScalarField out(width, height);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double d = norm(Point2{static_cast<double>(j), static_cast<double>(i)} - origin);
      out.values(i, j) = d > 0.0 ? std::exp(-gamma / d) : 0.0;
    }
  }
  return out;
}

double nll(std::span<const Sample> samples, const GmmParams& params) {
  if (samples.empty()) throw Error(Errc::kEmptySamples, "nll needs at least one sample");
  double sum = 0.0;
  for (const auto& s : samples) sum -= std::log(std::max(gmm_pdf(s.x, s.mu, params), kLogClamp));
  return sum / static_cast<double>(samples.size());
}

NllGradient nll_gradient(std::span<const double> squared_residuals, const RawParams& raw,
                         const GmmConstraints& c) {
  if (squared_residuals.empty()) throw Error(Errc::kEmptySamples, "nll needs at least one sample");
  const GmmParams p = constrain(raw, c);
  const double log_a = std::log(p.alpha_plus);
  const double log_b = std::log1p(-p.alpha_plus);
  const double sp = p.sigma_plus_sq;
  const double sm = p.sigma_minus_sq;

  double value = 0.0;
  double g_plus = 0.0;   // d/d s+ of the summed NLL
  double g_minus = 0.0;  // d/d s-
  double w_sum = 0.0;    // summed responsibility of the reliable component
  for (const double s : squared_residuals) {
    const double lp = log_a + log_gauss(s, sp);
    const double lm = log_b + log_gauss(s, sm);
    // Exact in log space, so no clamp is needed here; clamping would flatten
    // the loss for far outliers and stall the fit.
    const double ll = log_add(lp, lm);
    value -= ll;
    const double wp = std::exp(lp - ll);
    const double wm = std::exp(lm - ll);
    w_sum += wp;
    g_plus -= wp * (s / (2.0 * sp * sp) - 1.0 / sp);
    g_minus -= wm * (s / (2.0 * sm * sm) - 1.0 / sm);
  }
  const double n = static_cast<double>(squared_residuals.size());
  const double lsp = logistic(raw.sigma_plus);
  const double lsm = logistic(raw.sigma_minus);
  NllGradient out;
  out.value = value / n;
  out.grad[0] = p.alpha_plus - w_sum / n;
  out.grad[1] = g_plus / n * c.delta_plus * lsp * (1.0 - lsp);
  out.grad[2] = g_minus / n * (c.delta_minus - c.sigma_minus_floor()) * lsm * (1.0 - lsm);
  return out;
}

NllGradient nll_gradient(std::span<const Sample> samples, const RawParams& raw, const GmmConstraints& c) {
  return nll_gradient(squared_offsets(samples), raw, c);
}

FitResult fit_gmm(std::span<const double> squared_residuals, const GmmConstraints& c, const OptimizerConfig& opt) {
  if (squared_residuals.size() < kMinFitSamples) {
    throw Error(Errc::kEmptySamples, "fit needs at least " + std::to_string(kMinFitSamples) + " samples");
  }
  c.validate();
  std::array<double, 3> x{};
  std::array<double, 3> m{};
  std::array<double, 3> v{};
  auto to_raw = [](const std::array<double, 3>& a) { return RawParams{a[0], a[1], a[2]}; };

  FitResult result;
  NllGradient g = nll_gradient(squared_residuals, to_raw(x), c);
  if (!finite(g)) throw Error(Errc::kNonFinite, "loss is not finite at the initial parameters");
  result.initial_nll = g.value;
  result.final_nll = g.value;
  result.raw = to_raw(x);

  double b1t = 1.0;
  double b2t = 1.0;
  for (int it = 0; it < opt.iterations; ++it) {
    b1t *= opt.beta1;
    b2t *= opt.beta2;
    for (int k = 0; k < 3; ++k) {
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g.grad[k];
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g.grad[k] * g.grad[k];
      const double mh = m[k] / (1.0 - b1t);
      const double vh = v[k] / (1.0 - b2t);
      x[k] -= opt.learning_rate * mh / (std::sqrt(vh) + opt.epsilon);
    }
    g = nll_gradient(squared_residuals, to_raw(x), c);
    if (!finite(g)) throw Error(Errc::kNonFinite, "loss diverged during fitting");
    if (g.value < result.final_nll) {
      result.final_nll = g.value;
      result.raw = to_raw(x);
    }
  }
  result.params = constrain(result.raw, c);
  return result;
}

GmmParams fit_params(std::span<const Sample> samples, const GmmConstraints& c, const OptimizerConfig& opt) {
  return fit_gmm(squared_offsets(samples), c, opt).params;
}

double ConfidenceField::mean_over(const Mask& where) const {
  if (!where.same_shape(m)) throw Error(Errc::kDimMismatch, "mask does not match confidence field");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (!where[k]) continue;
    sum += m[k];
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

ConfidenceEstimate confidence_from_residuals(const Grid<Point2>& residuals, const Mask& valid, int patch_size,
                                             const GmmConstraints& c, const OptimizerConfig& opt) {
  if (!residuals.same_shape(valid)) throw Error(Errc::kDimMismatch, "residuals and mask differ in size");
  if (patch_size < 1) throw Error(Errc::kInvalidArgument, "patch_size must be positive");
  c.validate();
  const int w = residuals.width();
  const int h = residuals.height();
  const int pw = (w + patch_size - 1) / patch_size;
  const int ph = (h + patch_size - 1) / patch_size;

  ConfidenceEstimate out;
  out.params.patch_size = patch_size;
  out.params.width = w;
  out.params.height = h;
  out.params.cells = Grid<GmmParams>(pw, ph);
  out.params.fitted = Mask(pw, ph, 0);
  out.confidence = ConfidenceField(w, h, 0.0);

  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(patch_size) * patch_size);
  for (int pi = 0; pi < ph; ++pi) {
    for (int pj = 0; pj < pw; ++pj) {
      const int i0 = pi * patch_size;
      const int j0 = pj * patch_size;
      const int i1 = std::min(i0 + patch_size, h);
      const int j1 = std::min(j0 + patch_size, w);
      s.clear();
      for (int i = i0; i < i1; ++i) {
        for (int j = j0; j < j1; ++j) {
          if (valid(i, j)) s.push_back(squared_norm(residuals(i, j)));
        }
      }
      if (s.size() < kMinFitSamples) continue;
      const GmmParams params = fit_gmm(s, c, opt).params;
      out.params.cells(pi, pj) = params;
      out.params.fitted(pi, pj) = 1;
      const double conf = confidence(params, c.radius);
      for (int i = i0; i < i1; ++i) {
        for (int j = j0; j < j1; ++j) out.confidence.m(i, j) = conf;
      }
    }
  }
  return out;
}

void forward_backward_residuals(const FlowField& flow_fwd, const FlowField& flow_bwd, Grid<Point2>& residuals,
                                Mask& valid) {
  if (!flow_fwd.valid.same_shape(flow_bwd.valid)) throw Error(Errc::kDimMismatch, "flows differ in size");
  residuals = Grid<Point2>(flow_fwd.width(), flow_fwd.height());
  valid = Mask(flow_fwd.width(), flow_fwd.height(), 0);
  for (int i = 0; i < flow_fwd.height(); ++i) {
    for (int j = 0; j < flow_fwd.width(); ++j) {
      if (!flow_fwd.valid(i, j)) continue;
      const Point2 q{static_cast<double>(j), static_cast<double>(i)};
      const Point2 p = q + flow_fwd.displacement(i, j);
      const auto back = sample_flow(flow_bwd, p);
      if (!back) continue;
      residuals(i, j) = p + *back - q;
      valid(i, j) = 1;
    }
  }
}

ConfidenceEstimate confidence_field_from_flow_pair(const FlowField& flow_fwd, const FlowField& flow_bwd,
                                                   int patch_size, const GmmConstraints& c,
                                                   const OptimizerConfig& opt) {
  if (!flow_fwd.valid.same_shape(flow_bwd.valid)) throw Error(Errc::kDimMismatch, "flows differ in size");
  if (patch_size < 4) throw Error(Errc::kInvalidArgument, "patch_size must be at least 4");
  Grid<Point2> residuals;
  Mask valid;
  forward_backward_residuals(flow_fwd, flow_bwd, residuals, valid);
  auto out = confidence_from_residuals(residuals, valid, patch_size, c, opt);
  for (std::size_t k = 0; k < valid.size(); ++k) {
    if (!valid[k]) out.confidence.m[k] = 0.0;
  }
  return out;
}

}  // namespace pcf
