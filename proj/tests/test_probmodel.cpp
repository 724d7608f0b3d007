#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <pcf/probmodel.hpp>

#include "oracles.hpp"

using pcf::GmmConstraints;
using pcf::GmmParams;
using pcf::Point2;
using pcf::RawParams;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> squared(const std::vector<Point2>& xs) {
  std::vector<double> out;
  for (const auto& x : xs) out.push_back(pcf::squared_norm(x));
  return out;
}

GmmParams random_valid_params(std::mt19937_64& rng, const GmmConstraints& c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), std::max(1e-3, c.delta_plus * u(rng)),
          c.sigma_minus_floor() + (c.delta_minus - c.sigma_minus_floor()) * u(rng) * 0.999};
}

// Radially symmetric 2D Laplacian with E|x|^2 = 2 v, the same second moment
// as the isotropic Gaussian of per-axis variance v.
double log_laplace(double s, double v) {
  const double b = std::sqrt(v / 3.0);
  return -std::sqrt(s) / b - std::log(2.0 * kPi * b * b);
}

double laplace_disk_mass(double v, double radius) {
  const double b = std::sqrt(v / 3.0);
  return 1.0 - (1.0 + radius / b) * std::exp(-radius / b);
}

double laplace_nll(const std::vector<double>& s, const RawParams& raw, const GmmConstraints& c) {
  const GmmParams p = pcf::constrain(raw, c);
  double total = 0.0;
  for (double x : s) {
    const double a = std::log(p.alpha_plus) + log_laplace(x, p.sigma_plus_sq);
    const double b = std::log1p(-p.alpha_plus) + log_laplace(x, p.sigma_minus_sq);
    const double hi = std::max(a, b);
    total -= hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  }
  return total / double(s.size());
}

// The same Adam schedule as the library, on central-difference gradients.
GmmParams fit_laplace(const std::vector<double>& s, const GmmConstraints& c) {
  const pcf::OptimizerConfig opt;
  std::array<double, 3> x{}, m{}, v{};
  std::array<double, 3> best_x{};
  double best = laplace_nll(s, {}, c);
  auto raw = [](const std::array<double, 3>& a) { return RawParams{a[0], a[1], a[2]}; };
  for (int t = 1; t <= opt.iterations; ++t) {
    std::array<double, 3> g{};
    for (int k = 0; k < 3; ++k) {
      auto hi = x, lo = x;
      hi[k] += 1e-6;
      lo[k] -= 1e-6;
      g[k] = (laplace_nll(s, raw(hi), c) - laplace_nll(s, raw(lo), c)) / 2e-6;
    }
    for (int k = 0; k < 3; ++k) {
      m[k] = opt.beta1 * m[k] + (1 - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1 - opt.beta2) * g[k] * g[k];
      const double mh = m[k] / (1 - std::pow(opt.beta1, t));
      const double vh = v[k] / (1 - std::pow(opt.beta2, t));
      x[k] -= opt.learning_rate * mh / (std::sqrt(vh) + opt.epsilon);
    }
    const double f = laplace_nll(s, raw(x), c);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return pcf::constrain(raw(best_x), c);
}

}  // namespace

TEST(Gaussian2d, Examples) {
  EXPECT_NEAR(pcf::gaussian2d({0, 0}, {0, 0}, 1.0), 1.0 / (2 * kPi), 1e-15);
  const double peak = pcf::gaussian2d({0, 0}, {0, 0}, 3.0);
  EXPECT_NEAR(pcf::gaussian2d({std::sqrt(6.0), 0}, {0, 0}, 3.0), peak * std::exp(-1.0), 1e-15);
  const double ref = std::exp(-0.5) / (50 * kPi);
  EXPECT_NEAR(pcf::gaussian2d({4, 6}, {1, 2}, 25.0), ref, 1e-15);
  EXPECT_NEAR(ref, 0.003861, 1e-6);
}

TEST(Gaussian2d, NonPositiveVariance) {
  for (double v : {0.0, -1.0}) {
    try {
      pcf::gaussian2d({0, 0}, {0, 0}, v);
      FAIL();
    } catch (const pcf::Error& e) {
      EXPECT_EQ(e.code(), pcf::Errc::kNonPositiveVariance);
    }
  }
}

TEST(GmmPdf, Examples) {
  const Point2 x{0.7, -0.2}, mu{0.1, 0.3};
  EXPECT_DOUBLE_EQ(pcf::gmm_pdf(x, mu, {1.0, 0.6, 5.0}), pcf::gaussian2d(x, mu, 0.6));
  EXPECT_DOUBLE_EQ(pcf::gmm_pdf(x, mu, {0.0, 0.6, 5.0}), pcf::gaussian2d(x, mu, 5.0));
  EXPECT_NEAR(pcf::gmm_pdf(mu, mu, {0.5, 1.0, 4.0}), 5.0 / (16 * kPi), 1e-15);
}

TEST(Constrain, RawZero) {
  const auto p = pcf::constrain({}, {});
  EXPECT_DOUBLE_EQ(p.alpha_plus, 0.5);
  EXPECT_DOUBLE_EQ(p.sigma_plus_sq, 0.5);
  EXPECT_DOUBLE_EQ(p.sigma_minus_sq, 7.0);
}

TEST(Constrain, Saturation) {
  const GmmConstraints c;
  EXPECT_DOUBLE_EQ(pcf::constrain({800, 0, 0}, c).alpha_plus, 1.0);
  EXPECT_DOUBLE_EQ(pcf::constrain({0, 0, -800}, c).sigma_minus_sq, 3.0);
  const auto top = pcf::constrain({0, 800, 800}, c);
  EXPECT_TRUE(top.satisfies(c));
  EXPECT_LT(top.sigma_minus_sq, c.delta_minus);
  EXPECT_LE(top.sigma_plus_sq, c.delta_plus);
}

TEST(Constrain, ChainHoldsForRandomRaws) {
  const GmmConstraints c;
  std::mt19937_64 rng(1);
  std::cauchy_distribution<double> heavy(0.0, 5.0);
  for (int n = 0; n < 100000; ++n) {
    const RawParams r{heavy(rng), heavy(rng), heavy(rng)};
    ASSERT_TRUE(pcf::constrain(r, c).satisfies(c)) << r.alpha << " " << r.sigma_plus << " " << r.sigma_minus;
  }
}

TEST(Constraints, Validate) {
  EXPECT_NO_THROW(GmmConstraints{}.validate());
  EXPECT_THROW((GmmConstraints{1.0, 2.5, 2.0, 1.0}.validate()), pcf::Error);
  EXPECT_THROW((GmmConstraints{0.0, 11.0, 2.0, 1.0}.validate()), pcf::Error);
  EXPECT_THROW((GmmConstraints{1.0, 11.0, 2.0, 0.0}.validate()), pcf::Error);
}

TEST(Confidence, Examples) {
  EXPECT_NEAR(pcf::confidence({1.0, 1.0, 11.0}, 1.0), 1 - std::exp(-0.5), 1e-15);
  EXPECT_NEAR(pcf::confidence({0.0, 1.0, 11.0}, 1.0), 1 - std::exp(-1.0 / 22), 1e-15);
  const double mixed = 0.5 * (1 - std::exp(-0.5)) + 0.5 * (1 - std::exp(-1.0 / 22));
  EXPECT_NEAR(pcf::confidence({0.5, 1.0, 11.0}, 1.0), mixed, 1e-15);
  EXPECT_NEAR(mixed, 0.21896, 1e-5);
  EXPECT_NEAR(pcf::confidence({0.5, 1.0, 11.0}, 1.0), oracle::disk_mass_quadrature({0.5, 1.0, 11.0}, 1.0), 1e-6);
}

TEST(Confidence, ZeroTightVarianceLimit) {
  const double c = pcf::confidence({0.7, 0.0, 9.0}, 1.0);
  EXPECT_NEAR(c, 0.7 + 0.3 * (1 - std::exp(-1.0 / 18)), 1e-15);
}

TEST(Confidence, MatchesQuadrature) {
  const GmmConstraints c;
  std::mt19937_64 rng(2);
  for (int n = 0; n < 100; ++n) {
    const auto p = random_valid_params(rng, c);
    EXPECT_NEAR(pcf::confidence(p, 1.0), oracle::disk_mass_quadrature(p, 1.0), 1e-3);
  }
}

TEST(Confidence, Monotonicity) {
  const GmmConstraints c;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    const auto p = random_valid_params(rng, c);
    const double base = pcf::confidence(p, 1.0);
    auto q = p;
    q.alpha_plus = std::min(1.0, p.alpha_plus + 0.1 * u(rng));
    EXPECT_GE(pcf::confidence(q, 1.0), base);
    EXPECT_GE(pcf::confidence(p, 1.0 + u(rng)), base);
    q = p;
    q.sigma_plus_sq = std::min(c.delta_plus, p.sigma_plus_sq + 0.2 * u(rng));
    EXPECT_LE(pcf::confidence(q, 1.0), base);
    q = p;
    q.sigma_minus_sq = std::min(c.delta_minus, p.sigma_minus_sq + u(rng));
    EXPECT_LE(pcf::confidence(q, 1.0), base);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
  }
}

TEST(DistanceMap, Examples) {
  const auto d = pcf::distance_map(9, 7, {3, 2});
  EXPECT_EQ(d.values(2, 3), 0.0);
  EXPECT_NEAR(d.values(2, 4), std::exp(-0.03), 1e-15);
  EXPECT_NEAR(d.values(2, 4), 0.97045, 1e-5);
  EXPECT_NEAR(d.values(6, 6), std::exp(-0.03 / 5.0), 1e-15);
  const auto far = pcf::distance_map(400, 1, {0, 0});
  for (int j = 2; j < 400; ++j) EXPECT_GT(far.values(0, j), far.values(0, j - 1));
  EXPECT_GT(far.values(0, 399), 0.9999);
}

TEST(Nll, SingleSampleAtMean) {
  const std::vector<pcf::Sample> s{{{2, 3}, {2, 3}}};
  EXPECT_NEAR(pcf::nll(s, {1.0, 1.0, 7.0}), std::log(2 * kPi), 1e-12);
  EXPECT_NEAR(std::log(2 * kPi), 1.83788, 1e-5);
}

TEST(Nll, OrderAndDuplicates) {
  std::vector<pcf::Sample> s{{{0, 0}, {0.5, 0}}, {{1, 1}, {0, 0}}, {{3, -2}, {0, 0}}};
  const GmmParams p{0.6, 0.4, 6.0};
  const double base = pcf::nll(s, p);
  std::reverse(s.begin(), s.end());
  EXPECT_NEAR(pcf::nll(s, p), base, 1e-14);
  const std::vector<pcf::Sample> one{s[0]};
  const std::vector<pcf::Sample> two{s[0], s[0]};
  EXPECT_DOUBLE_EQ(pcf::nll(one, p), pcf::nll(two, p));
  EXPECT_THROW(pcf::nll(std::span<const pcf::Sample>{}, p), pcf::Error);
}

TEST(Nll, ClampKeepsFarOutliersFinite) {
  const std::vector<pcf::Sample> s{{{1e4, 0}, {0, 0}}};
  const double v = pcf::nll(s, {1.0, 0.1, 7.0});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -std::log(pcf::kLogClamp), 1e-9);
}

TEST(NllGradient, ValueAgreesWithNll) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 2.0);
  std::vector<pcf::Sample> s;
  for (int n = 0; n < 50; ++n) s.push_back({{z(rng), z(rng)}, {0, 0}});
  const RawParams raw{0.3, -0.4, 0.8};
  const auto g = pcf::nll_gradient(s, raw, {});
  EXPECT_NEAR(g.value, pcf::nll(s, pcf::constrain(raw, {})), 1e-12);
}

TEST(NllGradient, MatchesCentralDifferences) {
  const GmmConstraints c;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ur(-3.0, 3.0);
  std::uniform_real_distribution<double> spread(0.2, 4.0);
  for (int n = 0; n < 50; ++n) {
    std::normal_distribution<double> z(0.0, spread(rng));
    std::vector<double> s;
    for (int k = 0; k < 40; ++k) {
      const double x = z(rng), y = z(rng);
      s.push_back(x * x + y * y);
    }
    const RawParams raw{ur(rng), ur(rng), ur(rng)};
    const auto g = pcf::nll_gradient(s, raw, c);
    for (int k = 0; k < 3; ++k) {
      RawParams hi = raw, lo = raw;
      double* hp = k == 0 ? &hi.alpha : k == 1 ? &hi.sigma_plus : &hi.sigma_minus;
      double* lp = k == 0 ? &lo.alpha : k == 1 ? &lo.sigma_plus : &lo.sigma_minus;
      *hp += 1e-5;
      *lp -= 1e-5;
      const double fd =
          (pcf::nll_gradient(s, hi, c).value - pcf::nll_gradient(s, lo, c).value) / 2e-5;
      EXPECT_LE(std::abs(g.grad[k] - fd), 1e-5 * std::max(std::abs(fd), 1e-3)) << "instance " << n << " k " << k;
    }
  }
}

TEST(FitGmm, AllSamplesAtMean) {
  const std::vector<double> s(32, 0.0);
  const auto r = pcf::fit_gmm(s, {});
  EXPECT_GE(r.params.alpha_plus, 0.99);
  EXPECT_LT(r.params.sigma_plus_sq, 0.01);
  EXPECT_LE(r.final_nll, r.initial_nll);
}

TEST(FitGmm, FarSamplesGoToWideComponent) {
  // Eight copies of distance-100 offsets; the mean NLL equals that of two.
  std::vector<pcf::Sample> s;
  for (int k = 0; k < 8; ++k) s.push_back({{k % 2 ? 100.0 : 0.0, k % 2 ? 0.0 : 100.0}, {0, 0}});
  const auto p = pcf::fit_params(s, {});
  EXPECT_LE(p.alpha_plus, 0.01);
  // alpha = 0 beats alpha = 1 analytically at this distance
  EXPECT_LT(pcf::nll(s, {0.0, 1.0, 10.9}), pcf::nll(s, {1.0, 1.0, 10.9}));
}

TEST(FitGmm, PlantedRecovery) {
  const GmmParams truth{0.7, 0.8, 9.0};
  const auto r = pcf::fit_gmm(squared(oracle::sample_mixture(truth, 10000, 12345)), {});
  EXPECT_NEAR(r.params.alpha_plus, 0.7, 0.05);
  EXPECT_NEAR(r.params.sigma_plus_sq, 0.8, 0.15 * 0.8);
  EXPECT_NEAR(r.params.sigma_minus_sq, 9.0, 0.15 * 9.0);
  EXPECT_TRUE(r.params.satisfies({}));
  EXPECT_LE(r.final_nll, r.initial_nll);
}

TEST(FitGmm, DeterministicAndNeverWorse) {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(0.2);
  for (int n = 0; n < 10; ++n) {
    std::vector<double> s;
    for (int k = 0; k < 64; ++k) s.push_back(e(rng));
    const auto a = pcf::fit_gmm(s, {});
    const auto b = pcf::fit_gmm(s, {});
    EXPECT_EQ(a.params.alpha_plus, b.params.alpha_plus);
    EXPECT_EQ(a.params.sigma_minus_sq, b.params.sigma_minus_sq);
    EXPECT_LE(a.final_nll, a.initial_nll);
    EXPECT_TRUE(a.params.satisfies({}));
  }
}

TEST(FitGmm, TooFewSamples) {
  try {
    pcf::fit_gmm(std::vector<double>(7, 0.0), {});
    FAIL();
  } catch (const pcf::Error& e) {
    EXPECT_EQ(e.code(), pcf::Errc::kEmptySamples);
  }
}

// A tight population and one where a fifth of the residuals are moved to
// distance 10. The Gaussian model separates the two populations' disk-mass
// confidence by more than a Laplacian mixture under identical constraints.
TEST(FitGmm, GaussianMoreDiscriminativeThanLaplacian) {
  const GmmConstraints c;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> tight(0.0, 0.1);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  std::vector<double> clean, dirty;
  for (int n = 0; n < 400; ++n) {
    const double x = tight(rng), y = tight(rng);
    clean.push_back(x * x + y * y);
  }
  for (int n = 0; n < 400; ++n) {
    double x = tight(rng), y = tight(rng);
    if (n % 5 == 0) {
      const double t = angle(rng);
      x += 10 * std::cos(t);
      y += 10 * std::sin(t);
    }
    dirty.push_back(x * x + y * y);
  }
  const auto g_clean = pcf::fit_gmm(clean, c).params;
  const auto g_dirty = pcf::fit_gmm(dirty, c).params;
  const auto l_clean = fit_laplace(clean, c);
  const auto l_dirty = fit_laplace(dirty, c);
  auto lap_conf = [&](const GmmParams& p) {
    return p.alpha_plus * laplace_disk_mass(p.sigma_plus_sq, c.radius) +
           (1 - p.alpha_plus) * laplace_disk_mass(p.sigma_minus_sq, c.radius);
  };
  const double gauss_gap = pcf::confidence(g_clean, c.radius) - pcf::confidence(g_dirty, c.radius);
  const double lap_gap = lap_conf(l_clean) - lap_conf(l_dirty);
  EXPECT_GT(gauss_gap, lap_gap);
  EXPECT_NEAR(g_dirty.alpha_plus, 0.8, 0.02);
  EXPECT_NEAR(l_dirty.alpha_plus, 0.8, 0.02);
}

TEST(ConfidenceField, MutuallyInverseFlows) {
  pcf::ScenarioSpec spec;
  spec.width = 48;
  spec.height = 48;
  spec.homography = pcf::HomographyMap::translation(3, 2);
  const auto pair = pcf::synth_flow_pair(spec);
  const auto est = pcf::confidence_field_from_flow_pair(pair.forward, pair.backward, 8, {});
  int fitted = 0;
  for (int pi = 0; pi < est.params.fitted.height(); ++pi) {
    for (int pj = 0; pj < est.params.fitted.width(); ++pj) {
      if (!est.params.fitted(pi, pj)) continue;
      ++fitted;
      EXPECT_GE(est.confidence.m(pi * 8 + 4, pj * 8 + 4), 0.39);
    }
  }
  EXPECT_GE(fitted, 25);
}

TEST(ConfidenceField, NoisyBackwardFlow) {
  const int n = 32;
  pcf::FlowField fwd(n, n);
  pcf::FlowField bwd = pcf::synth_flow_homography(pcf::HomographyMap::identity(), n, n, {}, 20.0, 5);
  const auto est = pcf::confidence_field_from_flow_pair(fwd, bwd, 8, {});
  for (double v : est.confidence.m.values()) EXPECT_LE(v, 0.05);
}

TEST(ConfidenceField, OccludedPatchIsZero) {
  const int n = 32;
  const std::vector<pcf::Rect> occ{{8, 8, 8, 8}};
  const auto fwd = pcf::synth_flow_homography(pcf::HomographyMap::identity(), n, n, occ, 0.0, 0);
  const pcf::FlowField bwd(n, n);
  const auto est = pcf::confidence_field_from_flow_pair(fwd, bwd, 8, {});
  for (int i = 8; i < 16; ++i)
    for (int j = 8; j < 16; ++j) EXPECT_EQ(est.confidence.m(i, j), 0.0);
  EXPECT_EQ(est.params.fitted(1, 1), 0);
  EXPECT_GT(est.confidence.m(0, 0), 0.39);
}

TEST(ConfidenceField, Errors) {
  EXPECT_THROW(pcf::confidence_field_from_flow_pair(pcf::FlowField(8, 8), pcf::FlowField(9, 8), 8, {}),
               pcf::Error);
  try {
    pcf::confidence_field_from_flow_pair(pcf::FlowField(8, 8), pcf::FlowField(8, 8), 3, {});
    FAIL();
  } catch (const pcf::Error& e) {
    EXPECT_EQ(e.code(), pcf::Errc::kInvalidArgument);
  }
}

TEST(ConfidenceField, PartialEdgePatches) {
  const pcf::Grid<Point2> r(10, 10);
  const pcf::Mask valid(10, 10, 1);
  const auto est = pcf::confidence_from_residuals(r, valid, 4, {});
  EXPECT_EQ(est.params.cells.width(), 3);
  // the 2x2 corner patch has only 4 samples
  EXPECT_EQ(est.params.fitted(2, 2), 0);
  EXPECT_EQ(est.confidence.m(9, 9), 0.0);
  EXPECT_EQ(est.params.fitted(2, 0), 1);
  EXPECT_GT(est.confidence.m(9, 0), 0.39);
}
