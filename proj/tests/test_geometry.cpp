#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <pcf/geometry.hpp>

#include "oracles.hpp"

using pcf::Bcs;
using pcf::Point2;

namespace {

Bcs random_bcs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (;;) {
    Bcs t{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    if (std::abs(pcf::signed_area(t.a, t.b, t.c)) > 1.0) return t;
  }
}

}  // namespace

TEST(SignedArea, UnitRightTriangle) { EXPECT_DOUBLE_EQ(pcf::signed_area({0, 0}, {1, 0}, {0, 1}), 0.5); }

TEST(SignedArea, OrientationFlipNegates) { EXPECT_DOUBLE_EQ(pcf::signed_area({0, 0}, {0, 1}, {1, 0}), -0.5); }

TEST(SignedArea, MatchesShoelace) {
  const Point2 a{0, 0}, b{2, 0}, c{1, 3};
  EXPECT_DOUBLE_EQ(pcf::signed_area(a, b, c), oracle::shoelace(a, b, c));
  EXPECT_DOUBLE_EQ(pcf::signed_area(a, b, c), 3.0);
}

TEST(SignedArea, AntisymmetricUnderSwap) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 100; ++n) {
    const Bcs t = random_bcs(rng);
    const double s = pcf::signed_area(t.a, t.b, t.c);
    EXPECT_NEAR(pcf::signed_area(t.b, t.a, t.c), -s, 1e-9);
    EXPECT_NEAR(pcf::signed_area(t.a, t.c, t.b), -s, 1e-9);
    EXPECT_NEAR(s, oracle::shoelace(t.a, t.b, t.c), 1e-9);
  }
}

TEST(BaryCoords, Centroid) {
  const Bcs t{{1, 2}, {7, 3}, {2, 9}};
  const Point2 g{(1 + 7 + 2) / 3.0, (2 + 3 + 9) / 3.0};
  const auto l = pcf::bary_coords(g, t);
  EXPECT_NEAR(l.l1, 1.0 / 3, 1e-12);
  EXPECT_NEAR(l.l2, 1.0 / 3, 1e-12);
  EXPECT_NEAR(l.l3, 1.0 / 3, 1e-12);
}

TEST(BaryCoords, VertexCPairsWithLambda1) {
  const Bcs t{{1, 2}, {7, 3}, {2, 9}};
  const auto l = pcf::bary_coords(t.c, t);
  EXPECT_NEAR(l.l1, 1.0, 1e-12);
  EXPECT_NEAR(l.l2, 0.0, 1e-12);
  EXPECT_NEAR(l.l3, 0.0, 1e-12);
}

TEST(BaryCoords, MatchesLinearSystem) {
  const Bcs t{{0, 0}, {1, 0}, {0, 1}};
  const Point2 p{0.25, 0.25};
  const auto l = pcf::bary_coords(p, t);
  const auto ref = oracle::bary_linear_system(p, t);
  EXPECT_NEAR(l.l1, ref[0], 1e-12);
  EXPECT_NEAR(l.l2, ref[1], 1e-12);
  EXPECT_NEAR(l.l3, ref[2], 1e-12);
  EXPECT_NEAR(l.l1, 0.25, 1e-12);
  EXPECT_NEAR(l.l2, 0.25, 1e-12);
  EXPECT_NEAR(l.l3, 0.5, 1e-12);
}

TEST(BaryCoords, RandomAgainstLinearSystem) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  for (int n = 0; n < 500; ++n) {
    const Bcs t = random_bcs(rng);
    const Point2 p{u(rng), u(rng)};
    const auto l = pcf::bary_coords(p, t);
    const auto ref = oracle::bary_linear_system(p, t);
    EXPECT_NEAR(l.l1, ref[0], 1e-8);
    EXPECT_NEAR(l.l2, ref[1], 1e-8);
    EXPECT_NEAR(l.l3, ref[2], 1e-8);
  }
}

TEST(BaryCoords, DegenerateThrows) {
  const Bcs collinear{{0, 0}, {1, 1}, {2, 2}};
  try {
    pcf::bary_coords({0, 0}, collinear);
    FAIL();
  } catch (const pcf::Error& e) {
    EXPECT_EQ(e.code(), pcf::Errc::kDegenerateBcs);
  }
  EXPECT_TRUE(pcf::is_degenerate(collinear));
  EXPECT_TRUE(pcf::is_degenerate({{0, 0}, {1e-5, 0}, {0, 1e-4}}));
}

TEST(BaryCoords, PartitionOfUnityAndReconstruction) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (int n = 0; n < 2000; ++n) {
    const Bcs t = random_bcs(rng);
    const Point2 p{u(rng), u(rng)};
    const auto l = pcf::bary_coords(p, t);
    EXPECT_NEAR(l.l1 + l.l2 + l.l3, 1.0, 1e-9);
    const Point2 r = pcf::reconstruct(l, t);
    EXPECT_NEAR(r.x, p.x, 1e-9);
    EXPECT_NEAR(r.y, p.y, 1e-9);
  }
}

TEST(BaryCoords, ScaleInvariance) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> scale(0.05, 20.0);
  for (int n = 0; n < 1000; ++n) {
    const Bcs t = random_bcs(rng);
    const Point2 p{u(rng), u(rng)};
    const double s = scale(rng);
    const auto l0 = pcf::bary_coords(p, t);
    const auto l1 = pcf::bary_coords(s * p, Bcs{s * t.a, s * t.b, s * t.c});
    EXPECT_NEAR(l0.l1, l1.l1, 1e-9);
    EXPECT_NEAR(l0.l2, l1.l2, 1e-9);
    EXPECT_NEAR(l0.l3, l1.l3, 1e-9);
  }
}

TEST(BaryCoords, AffineInvariance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> lin(-3.0, 3.0);
  int cases = 0;
  while (cases < 1000) {
    pcf::AffineMap m{{lin(rng), lin(rng), lin(rng), lin(rng)}, {u(rng), u(rng)}};
    if (std::abs(m.determinant()) < 0.1) continue;
    const Bcs t = random_bcs(rng);
    const Point2 p{u(rng), u(rng)};
    const auto l0 = pcf::bary_coords(p, t);
    const auto l1 = pcf::bary_coords(pcf::apply_affine(m, p), pcf::apply_affine(m, t));
    EXPECT_NEAR(l0.l1, l1.l1, 1e-9);
    EXPECT_NEAR(l0.l2, l1.l2, 1e-9);
    EXPECT_NEAR(l0.l3, l1.l3, 1e-9);
    ++cases;
  }
}

TEST(Affine, Examples) {
  EXPECT_EQ(pcf::apply_affine(pcf::AffineMap::identity(), Point2{3, 4}), (Point2{3, 4}));
  EXPECT_EQ(pcf::apply_affine(pcf::AffineMap::translate(1, 2), Point2{0, 0}), (Point2{1, 2}));
  EXPECT_EQ(pcf::apply_affine(pcf::AffineMap{{2, 0, 0, 2}, {0, 0}}, Point2{1, 1}), (Point2{2, 2}));
}

TEST(Affine, InverseRoundTrip) {
  const pcf::AffineMap m{{1.5, -0.3, 0.2, 0.9}, {4, -7}};
  const auto inv = m.inverse();
  const Point2 p{12.5, -3.25};
  const Point2 q = pcf::apply_affine(inv, pcf::apply_affine(m, p));
  EXPECT_NEAR(q.x, p.x, 1e-12);
  EXPECT_NEAR(q.y, p.y, 1e-12);
  EXPECT_THROW((pcf::AffineMap{{1, 2, 2, 4}, {0, 0}}.inverse()), pcf::Error);
}

TEST(EncodeField, SinglePixelAtCentroid) {
  const Bcs t{{-1, -1}, {2, -1}, {-1, 2}};  // centroid (0, 0)
  const auto f = pcf::encode_field(1, 1, t);
  EXPECT_NEAR(f.lambda1(0, 0), 1.0 / 3, 1e-12);
  EXPECT_NEAR(f.lambda2(0, 0), 1.0 / 3, 1e-12);
  EXPECT_EQ(f.valid(0, 0), 1);
}

TEST(EncodeField, OutsideTriangleValue) {
  const Bcs t{{0, 0}, {3, 0}, {0, 3}};
  const auto f = pcf::encode_field(4, 4, t);
  const auto ref = oracle::bary_linear_system({3, 3}, t);
  EXPECT_NEAR(f.lambda1(3, 3), ref[0], 1e-12);
  EXPECT_NEAR(f.lambda2(3, 3), ref[1], 1e-12);
  EXPECT_NEAR(f.lambda1(3, 3), 1.0, 1e-12);
  EXPECT_NEAR(f.lambda2(3, 3), 1.0, 1e-12);
  EXPECT_NEAR(1.0 - f.lambda1(3, 3) - f.lambda2(3, 3), -1.0, 1e-12);
}

TEST(EncodeField, PixelConventionXIsColumn) {
  const Bcs t{{0, 0}, {1, 0}, {0, 1}};
  const auto f = pcf::encode_field(5, 3, t);
  // l1 pairs with c = (0, 1) so it equals y = row; l2 pairs with b so it equals x = column.
  EXPECT_NEAR(f.lambda1(2, 4), 2.0, 1e-12);
  EXPECT_NEAR(f.lambda2(2, 4), 4.0, 1e-12);
}

TEST(EncodeField, ChannelsArePlanes) {
  const Bcs t{{3.2, 1.1}, {17.5, 4.0}, {6.0, 20.25}};
  const int w = 23, h = 17;
  const auto f = pcf::encode_field(w, h, t);
  Eigen::MatrixXd a(w * h, 3);
  Eigen::VectorXd y1(w * h), y2(w * h);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int r = i * w + j;
      a.row(r) << i, j, 1.0;
      y1(r) = f.lambda1(i, j);
      y2(r) = f.lambda2(i, j);
    }
  }
  for (const auto* y : {&y1, &y2}) {
    const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(*y);
    EXPECT_LT((a * coef - *y).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EncodeField, InvalidPixelsZeroed) {
  const Bcs t{{0, 0}, {4, 0}, {0, 4}};
  pcf::Mask valid(3, 3, 1);
  valid(1, 2) = 0;
  const auto f = pcf::encode_field(3, 3, t, valid);
  EXPECT_EQ(f.valid(1, 2), 0);
  EXPECT_EQ(f.lambda1(1, 2), 0.0);
  EXPECT_EQ(f.lambda2(1, 2), 0.0);
  EXPECT_EQ(f.valid(2, 2), 1);
  EXPECT_THROW(pcf::encode_field(3, 3, {{0, 0}, {1, 1}, {2, 2}}), pcf::Error);
}

TEST(ZeroScore, SymmetricPair) {
  std::vector<double> v{-1.0, 1.0};
  const auto z = pcf::zero_score_normalize(v);
  EXPECT_DOUBLE_EQ(v[0], -1.0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_DOUBLE_EQ(z.mean, 0.0);
  EXPECT_DOUBLE_EQ(z.std, 1.0);
}

TEST(ZeroScore, ConstantFallsBackToCentering) {
  std::vector<double> v{5.0, 5.0, 5.0};
  const auto z = pcf::zero_score_normalize(v);
  EXPECT_TRUE(z.zero_variance);
  EXPECT_EQ(z.std, 0.0);
  for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(ZeroScore, HandComputed) {
  std::vector<double> v{0.0, 2.0, 4.0};
  const auto z = pcf::zero_score_normalize(v);
  EXPECT_NEAR(z.std, std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_NEAR(v[0], -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(v[1], 0.0, 1e-12);
  EXPECT_NEAR(v[2], std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(z.apply(4.0), std::sqrt(1.5), 1e-12);
}

TEST(ZeroScore, MaskedEntriesUntouched) {
  std::vector<double> v{0.0, 100.0, 2.0, 4.0};
  const std::vector<std::uint8_t> valid{1, 0, 1, 1};
  pcf::zero_score_normalize(v, valid);
  EXPECT_EQ(v[1], 100.0);
  EXPECT_NEAR(v[0] + v[2] + v[3], 0.0, 1e-12);
}

TEST(ZeroScore, NeedsTwoEntries) {
  std::vector<double> v{1.0};
  try {
    pcf::zero_score_normalize(v);
    FAIL();
  } catch (const pcf::Error& e) {
    EXPECT_EQ(e.code(), pcf::Errc::kInsufficientData);
  }
}

TEST(ZeroScore, DenseFieldPerChannel) {
  auto f = pcf::encode_field(8, 6, {{0, 0}, {5, 1}, {2, 7}});
  pcf::zero_score_normalize(f);
  for (const auto* ch : {&f.lambda1, &f.lambda2}) {
    double sum = 0.0, sq = 0.0;
    for (double x : ch->values()) {
      sum += x;
      sq += x * x;
    }
    const double n = static_cast<double>(ch->size());
    EXPECT_NEAR(sum / n, 0.0, 1e-12);
    EXPECT_NEAR(sq / n, 1.0, 1e-12);
  }
}
