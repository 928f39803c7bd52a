#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "procrustes/geodata.hpp"
#include "test_util.hpp"

using namespace procrustes;
using namespace testutil;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ConfigError;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double a) { return a < 0.0 ? a + kTwoPi : a; }

// Kolmogorov–Smirnov statistic of samples against U[0, 2π).
double ks_uniform(std::vector<double> s) {
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = s[i] / kTwoPi;
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST(TorusParams, ScalingExamples) {
  const TorusParams t = TorusParams::t2(2.0, 0.5);
  EXPECT_EQ(scale_minor_radius(t, 1.0).effective_radii(), t.effective_radii());
  const auto r = scale_minor_radius(t, 0.4).effective_radii();
  EXPECT_DOUBLE_EQ(r[0], 2.0);
  EXPECT_NEAR(r[1], 0.2, 1e-15);
  const auto a = scale_minor_radius(scale_minor_radius(t, 0.5), 0.6).effective_radii();
  const auto b = scale_minor_radius(t, 0.3).effective_radii();
  EXPECT_NEAR(a[1], b[1], 1e-15);
  EXPECT_EQ(code_of([&] { (void)scale_minor_radius(t, 0.0); }), ErrorCode::InvalidScale);
  EXPECT_EQ(code_of([&] { (void)scale_minor_radius(t, 1.5); }), ErrorCode::InvalidScale);
}

TEST(TorusParams, ThreeTorusScalesInnermostTube) {
  const auto r = scale_minor_radius(TorusParams::t3(2.0, 0.8, 0.4), 0.25).effective_radii();
  EXPECT_DOUBLE_EQ(r[0], 2.0);
  EXPECT_DOUBLE_EQ(r[1], 0.8);
  EXPECT_DOUBLE_EQ(r[2], 0.1);
}

TEST(TorusParams, Validation) {
  EXPECT_EQ(code_of([] { TorusParams{4, {2.0, 1.0, 0.5, 0.1}, 1.0}.validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { TorusParams::t2(1.0, 2.0).validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { TorusParams::t2(2.0, -1.0).validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { TorusParams::t3(2.0, 0.8, 0.9).validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { (void)sample_torus(TorusParams::t2(2.0, 0.5), 1, 0); }), ErrorCode::InvalidParams);
}

TEST(SampleTorus, PointsOnSurface) {
  const TorusParams t2 = TorusParams::t2(2.0, 0.5);
  const PointCloud c2 = sample_torus(t2, 1000, 1);
  ASSERT_EQ(c2.dim(), 3);
  for (Index i = 0; i < c2.size(); ++i) {
    const Vector p = c2.points.row(i).transpose();
    const double planar = std::hypot(p(0), p(1)) - 2.0;
    EXPECT_NEAR(planar * planar + p(2) * p(2), 0.25, 1e-9);
  }
  const TorusParams t3 = scale_minor_radius(TorusParams::t3(2.0, 0.8, 0.4), 0.6);
  const PointCloud c3 = sample_torus(t3, 1000, 2);
  ASSERT_EQ(c3.dim(), 4);
  for (Index i = 0; i < c3.size(); ++i)
    EXPECT_NEAR(torus_implicit_residual(t3, c3.points.row(i).transpose()), 0.0, 1e-9);
}

TEST(SampleTorus, DeterministicPerSeed) {
  const TorusParams t = TorusParams::t2(2.0, 0.8);
  EXPECT_EQ(sample_torus(t, 50, 7).points, sample_torus(scale_minor_radius(t, 1.0), 50, 7).points);
  EXPECT_NE(sample_torus(t, 50, 7).points, sample_torus(t, 50, 8).points);
}

TEST(SampleTorus, ThreeTorusCollapsesOntoTwoTorus) {
  const TorusParams base = TorusParams::t3(2.0, 0.8, 0.4);
  const PointCloud ref = sample_torus(TorusParams::t2(2.0, 0.8), 20000, 3);
  for (double c : {0.5, 0.1, 0.01}) {
    const TorusParams t = scale_minor_radius(base, c);
    const double r2 = t.effective_radii()[2];
    const PointCloud cloud = sample_torus(t, 200, 4);
    double hausdorff = 0.0;
    for (Index i = 0; i < cloud.size(); ++i) {
      const Vector p = cloud.points.row(i).transpose();
      // Exact distance to the T2 surface: the tube radius.
      const double s = std::hypot(std::hypot(p(0), p(1)) - 2.0, p(2));
      EXPECT_NEAR(std::hypot(s - 0.8, p(3)), r2, 1e-12);
      double nearest = 1e300;
      for (Index j = 0; j < ref.size(); ++j) {
        Vector q = Vector::Zero(4);
        q.head(3) = ref.points.row(j).transpose();
        nearest = std::min(nearest, (p - q).norm());
      }
      hausdorff = std::max(hausdorff, nearest);
    }
    EXPECT_LE(hausdorff, r2 + 0.12) << "c=" << c;  // slack covers the gaps of the 20k reference sample
  }
}

TEST(SampleTorus, AnglesUniform) {
  const double critical = 1.628 / std::sqrt(1e4);  // 1% level
  const PointCloud c2 = sample_torus(TorusParams::t2(2.0, 0.8), 10000, 5);
  std::vector<double> u, v;
  for (Index i = 0; i < c2.size(); ++i) {
    const auto p = c2.points.row(i);
    u.push_back(wrap(std::atan2(p(1), p(0))));
    v.push_back(wrap(std::atan2(p(2), std::hypot(p(0), p(1)) - 2.0)));
  }
  EXPECT_LT(ks_uniform(u), critical);
  EXPECT_LT(ks_uniform(v), critical);

  const PointCloud c3 = sample_torus(TorusParams::t3(2.0, 0.8, 0.4), 10000, 6);
  std::vector<double> u3, v3, w3;
  for (Index i = 0; i < c3.size(); ++i) {
    const auto p = c3.points.row(i);
    const double planar = std::hypot(p(0), p(1)) - 2.0;
    u3.push_back(wrap(std::atan2(p(1), p(0))));
    v3.push_back(wrap(std::atan2(p(2), planar)));
    w3.push_back(wrap(std::atan2(p(3), std::hypot(planar, p(2)) - 0.8)));
  }
  EXPECT_LT(ks_uniform(u3), critical);
  EXPECT_LT(ks_uniform(v3), critical);
  EXPECT_LT(ks_uniform(w3), critical);
}

TEST(MedianBandwidth, Examples) {
  PointCloud two;
  two.points = Matrix::Zero(2, 2);
  two.points(1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(median_bandwidth(two), 1.0);

  CounterRng rng(7);
  PointCloud square;
  square.points.resize(100, 2);
  for (Index i = 0; i < 100; ++i) square.points.row(i) << rng.uniform(), rng.uniform();
  std::vector<double> all;
  for (Index i = 0; i < 100; ++i)
    for (Index j = i + 1; j < 100; ++j) all.push_back((square.points.row(i) - square.points.row(j)).squaredNorm());
  std::sort(all.begin(), all.end());
  const double oracle = 0.5 * (all[all.size() / 2 - 1] + all[all.size() / 2]);  // even count
  EXPECT_DOUBLE_EQ(median_bandwidth(square), oracle);

  PointCloud scaled = square;
  scaled.points *= 3.0;
  EXPECT_NEAR(median_bandwidth(scaled), 9.0 * median_bandwidth(square), 1e-12);

  PointCloud same;
  same.points = Matrix::Ones(5, 3);
  EXPECT_EQ(code_of([&] { (void)median_bandwidth(same); }), ErrorCode::DegenerateCloud);
}

TEST(DiffusionOperator, Examples) {
  PointCloud same;
  same.points = Matrix::Ones(6, 2);
  const DiffusionOperator flat = diffusion_operator(same, 1.0);
  EXPECT_LE(max_abs(flat.matrix.matrix() - Matrix::Constant(6, 6, 1.0 / 6.0)), 1e-14);
  EXPECT_NEAR(flat.matrix.spectrum().max_value(), 1.0, 1e-12);

  PointCloud far;
  far.points = Matrix::Zero(2, 1);
  far.points(1, 0) = 100.0;
  EXPECT_LE(max_abs(diffusion_operator(far, 1.0).matrix.matrix() - Matrix::Identity(2, 2)), 1e-12);

  PointCloud circle;
  circle.points.resize(50, 2);
  for (Index i = 0; i < 50; ++i) {
    const double t = kTwoPi * static_cast<double>(i) / 50.0;
    circle.points.row(i) << std::cos(t), std::sin(t);
  }
  const DiffusionOperator op = diffusion_operator(circle, median_bandwidth(circle));
  EXPECT_NEAR(op.matrix.spectrum().max_value(), 1.0, 1e-10);
  EXPECT_GE(op.matrix.spectrum().min_value(), 0.0);
}

TEST(DiffusionOperator, Errors) {
  PointCloud one;
  one.points = Matrix::Zero(1, 2);
  EXPECT_EQ(code_of([&] { (void)diffusion_operator(one, 1.0); }), ErrorCode::DegenerateCloud);
  const PointCloud c = sample_torus(TorusParams::t2(2.0, 0.8), 10, 1);
  EXPECT_EQ(code_of([&] { (void)diffusion_operator(c, 0.0); }), ErrorCode::InvalidBandwidth);
  EXPECT_EQ(code_of([&] { (void)diffusion_operator(c, -1.0); }), ErrorCode::InvalidBandwidth);
  EXPECT_EQ(code_of([&] { (void)diffusion_operator(c, 1.0, Index{0}); }), ErrorCode::InvalidParams);
}

TEST(DiffusionOperator, SpectrumRangeAndEntries) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PointCloud c = sample_torus(TorusParams::t3(2.0, 0.8, 0.4), 120, seed);
    const DiffusionOperator op = diffusion_operator(c, median_bandwidth(c));
    EXPECT_GE(op.matrix.spectrum().min_value(), -1e-10);
    EXPECT_LE(op.matrix.spectrum().max_value(), 1.0 + 1e-10);
    EXPECT_GE(op.matrix.matrix().minCoeff(), -1e-12);
    EXPECT_EQ(op.matrix.matrix(), op.matrix.matrix().transpose());
  }
}

TEST(DiffusionOperator, RigidMotionInvariance) {
  CounterRng rng(8);
  const PointCloud c = sample_torus(TorusParams::t2(2.0, 0.8), 150, 9);
  PointCloud moved = c;
  const Matrix q = random_orthogonal(3, rng);
  const Vector shift = gaussian(3, 1, rng);
  moved.points = (c.points * q.transpose()).rowwise() + shift.transpose();
  const Vector a = diffusion_operator(c, median_bandwidth(c)).matrix.spectrum().values;
  const Vector b = diffusion_operator(moved, median_bandwidth(moved)).matrix.spectrum().values;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DiffusionOperator, NearestNeighbourKernel) {
  const PointCloud c = sample_torus(TorusParams::t2(2.0, 0.8), 60, 10);
  const double eps = median_bandwidth(c);
  const Matrix dense = diffusion_operator(c, eps).matrix.matrix();
  EXPECT_LE(max_abs(diffusion_operator(c, eps, Index{60}).matrix.matrix() - dense), 1e-14);
  const DiffusionOperator sparse = diffusion_operator(c, eps, Index{8});
  EXPECT_EQ(sparse.matrix.matrix(), sparse.matrix.matrix().transpose());
  // Each row keeps at least its 8 nearest neighbours.
  for (Index i = 0; i < 60; ++i) EXPECT_GE((sparse.matrix.matrix().row(i).array() > 0.0).count(), 8);
  EXPECT_LE(sparse.matrix.spectrum().max_value(), 1.0 + 1e-10);
}
