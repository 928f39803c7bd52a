#pragma once

// Tori point clouds and diffusion operators built from point clouds.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "procrustes/error.hpp"
#include "procrustes/random.hpp"
#include "procrustes/spd_core.hpp"

namespace procrustes {

/// Torus T₂ ⊂ R³ with radii (R, r) or T₃ ⊂ R⁴ with radii (R, r₁, r₂).
/// `minor_scale` c multiplies the innermost tube radius (r for T₂, r₂ for
/// T₃), so T₃ collapses onto T₂ and T₂ onto a circle as c → 0.
struct TorusParams {
  int intrinsic_dim = 2;
  std::vector<double> radii{2.0, 0.8};
  double minor_scale = 1.0;

  static TorusParams t2(double major, double minor) { return TorusParams{2, {major, minor}, 1.0}; }
  static TorusParams t3(double major, double minor1, double minor2) {
    return TorusParams{3, {major, minor1, minor2}, 1.0};
  }

  [[nodiscard]] Index ambient_dim() const noexcept { return intrinsic_dim + 1; }

  /// Radii after applying the minor scale.
  [[nodiscard]] std::vector<double> effective_radii() const {
    std::vector<double> r = radii;
    r.back() *= minor_scale;
    return r;
  }

  void validate() const {
    if (intrinsic_dim != 2 && intrinsic_dim != 3) fail(ErrorCode::InvalidParams, "torus dimension must be 2 or 3");
    if (radii.size() != static_cast<std::size_t>(intrinsic_dim))
      fail(ErrorCode::InvalidParams, "torus needs one major and dim-1 minor radii");
    for (double r : radii)
      if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorCode::InvalidParams, "torus radii must be positive");
    if (!(minor_scale > 0.0 && minor_scale <= 1.0)) fail(ErrorCode::InvalidScale, "minor scale must lie in (0, 1]");
    if (!(radii[1] < radii[0])) fail(ErrorCode::InvalidParams, "minor radius must be below the major radius");
    if (intrinsic_dim == 3 && !(radii[2] < std::min(radii[1], radii[0] - radii[1])))
      fail(ErrorCode::InvalidParams, "inner tube radius must stay below the T2 curvature radii");
  }
};

inline TorusParams scale_minor_radius(const TorusParams& params, double c) {
  if (!(c > 0.0 && c <= 1.0)) fail(ErrorCode::InvalidScale, "scale must lie in (0, 1]");
  TorusParams out = params;
  out.minor_scale *= c;
  return out;
}

struct PointCloud {
  Matrix points;  // N×d
  std::optional<TorusParams> params;  // nullopt: external data
  std::uint64_t seed = 0;

  [[nodiscard]] Index size() const noexcept { return points.rows(); }
  [[nodiscard]] Index dim() const noexcept { return points.cols(); }
};

/// Residual of the implicit surface equation; zero on the torus.
///   T₂: (√(x²+y²) − R)² + z² − r²
///   T₃: (s − r₁)² + x₄² − r₂², s = √((√(x²+y²) − R)² + z²)
inline double torus_implicit_residual(const TorusParams& params, const Eigen::Ref<const Vector>& p) {
  const std::vector<double> r = params.effective_radii();
  const double planar = std::hypot(p(0), p(1)) - r[0];
  if (params.intrinsic_dim == 2) return planar * planar + p(2) * p(2) - r[1] * r[1];
  const double s = std::hypot(planar, p(2)) - r[1];
  return s * s + p(3) * p(3) - r[2] * r[2];
}

/// Angles uniform on [0, 2π)^dim. T₂: ((R + r cos v) cos u, (R + r cos v) sin u, r sin v).
/// T₃: a tube of radius r₂ around T₂(R, r₁) in R⁴, offset along the T₂ unit
/// normal n(u, v) and the fourth axis: (T₂(u, v) + r₂ cos w · n(u, v), r₂ sin w).
inline PointCloud sample_torus(const TorusParams& params, Index n, std::uint64_t seed) {
  params.validate();
  if (n < 2) fail(ErrorCode::InvalidParams, "need at least two samples");
  const std::vector<double> r = params.effective_radii();
  CounterRng rng(seed);
  PointCloud cloud;
  cloud.params = params;
  cloud.seed = seed;
  cloud.points.resize(n, params.ambient_dim());
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    const double u = kTwoPi * rng.uniform();
    const double v = kTwoPi * rng.uniform();
    const double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
    const double ring = r[0] + r[1] * cv;
    double x = ring * cu, y = ring * su, z = r[1] * sv;
    if (params.intrinsic_dim == 3) {
      const double w = kTwoPi * rng.uniform();
      const double offset = r[2] * std::cos(w);
      x += offset * cv * cu;
      y += offset * cv * su;
      z += offset * sv;
      cloud.points(i, 3) = r[2] * std::sin(w);
    }
    cloud.points(i, 0) = x;
    cloud.points(i, 1) = y;
    cloud.points(i, 2) = z;
  }
  return cloud;
}

/// N×N matrix of squared Euclidean distances.
inline Matrix pairwise_sq_distances(const Matrix& points) {
  const Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) d(i, j) = d(j, i) = (points.row(i) - points.row(j)).squaredNorm();
  return d;
}

/// Median of the pairwise squared distances over i < j.
inline double median_bandwidth(const PointCloud& cloud) {
  const Index n = cloud.size();
  if (n < 2) fail(ErrorCode::DegenerateCloud, "need at least two points");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) values.push_back((cloud.points.row(i) - cloud.points.row(j)).squaredNorm());
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double med = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) fail(ErrorCode::DegenerateCloud, "all pairwise distances vanish");
  return med;
}

enum class Normalization { Symmetric };

struct DiffusionOperator {
  SpdMatrix matrix;
  double bandwidth;
  Normalization normalization = Normalization::Symmetric;
};

/// S = D^{-1/2} W D^{-1/2} with W_ij = exp(−‖xᵢ − xⱼ‖²/ε) and D = diag(W·1).
/// With `k_affinity`, each row keeps its k nearest neighbours (self
/// included) and the kernel is symmetrized by max(W, Wᵀ). Eigenvalues are
/// clipped at zero.
inline DiffusionOperator diffusion_operator(const PointCloud& cloud, double epsilon,
                                            std::optional<Index> k_affinity = std::nullopt) {
  const Index n = cloud.size();
  if (n < 2) fail(ErrorCode::DegenerateCloud, "need at least two points");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorCode::InvalidBandwidth, "bandwidth must be positive");
  const Matrix d2 = pairwise_sq_distances(cloud.points);
  Matrix w = (-d2 / epsilon).array().exp().matrix();

  if (k_affinity) {
    const Index k = *k_affinity;
    if (k < 1 || k > n) fail(ErrorCode::InvalidParams, "affinity neighbour count out of range");
    Matrix sparse = Matrix::Zero(n, n);
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d2(i, a) < d2(i, b); });
      for (Index t = 0; t < k; ++t) {
        const Index j = order[static_cast<std::size_t>(t)];
        sparse(i, j) = w(i, j);
      }
    }
    w = sparse.cwiseMax(sparse.transpose());
  }

  const Vector deg = w.rowwise().sum();
  const Vector isq = deg.array().rsqrt();
  const Matrix s = symmetrize(isq.asDiagonal() * w * isq.asDiagonal());
  Spectrum spec = detail::eig_unchecked(s);
  if (spec.min_value() >= 0.0) return DiffusionOperator{SpdMatrix::symmetrized(s), epsilon};
  spec.values = spec.values.cwiseMax(0.0);
  return DiffusionOperator{SpdMatrix::symmetrized(spec.reconstruct()), epsilon};
}

}  // namespace procrustes
