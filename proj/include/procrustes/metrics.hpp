#pragma once

// Distances between SPD matrices: Bures-Wasserstein and its Mahalanobis
// generalization, the alpha-Procrustes family (closed form and a brute-force
// minimization over the orthogonal group), generalized Log-Euclidean and
// truncated Log-HS / GLES distances, the Gaussian 2-Wasserstein distance
// under a Mahalanobis ground cost, and robust GBW.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "procrustes/error.hpp"
#include "procrustes/random.hpp"
#include "procrustes/spd_core.hpp"

namespace procrustes {

struct DistanceResult {
  double value = 0.0;
  /// Named trace terms; when present value² = trace_X + trace_Y − 2·cross_term
  /// (+ mean_term for Gaussian distances).
  std::optional<std::map<std::string, double>> breakdown;

  [[nodiscard]] double term(const std::string& name) const { return breakdown.value().at(name); }
};

namespace detail {

/// tr(A^{1/2}) for a symmetric PSD-up-to-rounding A. A is symmetrized and
/// its eigenvalues clipped at zero before the root.
inline double trace_sqrt_psd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "eigensolver failed in trace square root");
  double acc = 0.0;
  for (Index i = 0; i < solver.eigenvalues().size(); ++i) acc += std::sqrt(std::max(solver.eigenvalues()(i), 0.0));
  return acc;
}

inline DistanceResult from_terms(double tx, double ty, double cross, double scale = 1.0) {
  DistanceResult r;
  r.value = std::sqrt(std::max(tx + ty - 2.0 * cross, 0.0)) * scale;
  const double s2 = scale * scale;
  r.breakdown = std::map<std::string, double>{{"trace_X", tx * s2}, {"trace_Y", ty * s2}, {"cross_term", cross * s2}};
  return r;
}

inline void require_same_dim(const SpdMatrix& x, const SpdMatrix& y) {
  if (x.dim() != y.dim()) fail(ErrorCode::DimensionMismatch, "operands have different dimensions");
}

inline DistanceResult zero_distance() {
  DistanceResult r;
  r.breakdown = std::map<std::string, double>{{"trace_X", 0.0}, {"trace_Y", 0.0}, {"cross_term", 0.0}};
  return r;
}

}  // namespace detail

/// d²_GBW = tr(M⁻¹X) + tr(M⁻¹Y) − 2 tr(X^{1/2} M⁻¹ Y M⁻¹ X^{1/2})^{1/2}.
/// A diagonal-form weight is taken in the ambient basis, i.e. M = diag(ω + ρ).
inline DistanceResult generalized_bw(const SpdMatrix& x, const SpdMatrix& y, const MetricWeight& w) {
  detail::require_same_dim(x, y);
  const Matrix minv = w.inverse(x.dim());
  const double tx = (minv * x.matrix()).trace();
  const double ty = (minv * y.matrix()).trace();
  if (x.matrix() == y.matrix()) {
    DistanceResult r = detail::zero_distance();
    r.breakdown = std::map<std::string, double>{{"trace_X", tx}, {"trace_Y", ty}, {"cross_term", tx}};
    return r;
  }
  const Matrix xh = spd_sqrt(x).matrix();
  const double cross = detail::trace_sqrt_psd(xh * minv * y.matrix() * minv * xh);
  return detail::from_terms(tx, ty, cross);
}

/// d²_BW = tr X + tr Y − 2 tr(X^{1/2} Y X^{1/2})^{1/2}.
inline DistanceResult bures_wasserstein(const SpdMatrix& x, const SpdMatrix& y) {
  detail::require_same_dim(x, y);
  return generalized_bw(x, y, MetricWeight::identity(x.dim()));
}

/// Closed form of min_O ‖(X^α − Y^α O)/α‖_{M⁻¹}:
/// (1/α)[tr(M⁻¹X^{2α}) + tr(M⁻¹Y^{2α}) − 2 tr(X^α M⁻¹ Y^{2α} M⁻¹ X^α)^{1/2}]^{1/2}.
/// The breakdown terms already include the 1/α² factor.
inline DistanceResult alpha_procrustes_closed(const SpdMatrix& x, const SpdMatrix& y, double alpha,
                                              const MetricWeight& w) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::InvalidAlpha, "alpha must be positive and finite");
  detail::require_same_dim(x, y);
  const Matrix minv = w.inverse(x.dim());
  const Matrix x2a = spd_power(x, 2.0 * alpha).matrix();
  const Matrix y2a = spd_power(y, 2.0 * alpha).matrix();
  const double tx = (minv * x2a).trace();
  const double ty = (minv * y2a).trace();
  if (x.matrix() == y.matrix()) return detail::from_terms(tx, ty, tx, 1.0 / alpha);
  const Matrix xa = spd_power(x, alpha).matrix();
  const double cross = detail::trace_sqrt_psd(xa * minv * y2a * minv * xa);
  return detail::from_terms(tx, ty, cross, 1.0 / alpha);
}

namespace detail {

inline Matrix rotation2(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

/// Haar-distributed orthogonal matrix from the QR of a Gaussian matrix.
inline Matrix random_orthogonal(Index n, CounterRng& rng) {
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

inline Matrix givens(Index n, Index i, Index j, double t) {
  Matrix g = Matrix::Identity(n, n);
  g(i, i) = std::cos(t);
  g(j, j) = std::cos(t);
  g(i, j) = -std::sin(t);
  g(j, i) = std::sin(t);
  return g;
}

template <typename F>
double golden_section_min(F&& f, double lo, double hi, double tol, double& arg) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  arg = fc < fd ? c : d;
  return std::min(fc, fd);
}

}  // namespace detail

/// Direct minimization of ‖(X^α − Y^α O)/α‖_{M⁻¹} over O ∈ O(n), n ≤ 4.
/// Test oracle: dense angle grid for n = 2, random orthogonal sampling for
/// n = 3, 4, followed in both cases by Givens-coordinate golden-section
/// refinement within each connected component of O(n).
inline DistanceResult alpha_procrustes_numeric(const SpdMatrix& x, const SpdMatrix& y, double alpha,
                                               const MetricWeight& w, std::int64_t search_budget,
                                               std::uint64_t seed = 0x5EED) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::InvalidAlpha, "alpha must be positive and finite");
  detail::require_same_dim(x, y);
  const Index n = x.dim();
  if (n > 4) fail(ErrorCode::DimensionTooLarge, "numeric Procrustes oracle supports n <= 4");
  if (search_budget < 1) fail(ErrorCode::InvalidParams, "search budget must be positive");

  const Matrix xa = spd_power(x, alpha).matrix();
  const Matrix ya = spd_power(y, alpha).matrix();
  auto objective = [&](const Matrix& o) { return mahalanobis_norm((xa - ya * o) / alpha, w); };

  DistanceResult result;
  if (n == 1) {
    result.value = std::min(objective(Matrix::Identity(1, 1)), objective(-Matrix::Identity(1, 1)));
    return result;
  }

  // Starting points, one per component (det = +1, det = −1).
  Matrix reflect = Matrix::Identity(n, n);
  reflect(n - 1, n - 1) = -1.0;
  Matrix best[2] = {Matrix::Identity(n, n), reflect};
  double best_val[2] = {objective(best[0]), objective(best[1])};

  if (n == 2) {
    for (std::int64_t s = 0; s < search_budget; ++s) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(search_budget);
      const Matrix r = detail::rotation2(theta);
      for (int comp = 0; comp < 2; ++comp) {
        const Matrix o = comp == 0 ? r : Matrix(r * reflect);
        const double v = objective(o);
        if (v < best_val[comp]) {
          best_val[comp] = v;
          best[comp] = o;
        }
      }
    }
  } else {
    CounterRng rng(seed);
    for (std::int64_t s = 0; s < search_budget; ++s) {
      const Matrix o = detail::random_orthogonal(n, rng);
      const int comp = o.determinant() > 0.0 ? 0 : 1;
      const double v = objective(o);
      if (v < best_val[comp]) {
        best_val[comp] = v;
        best[comp] = o;
      }
    }
  }

  // Givens-coordinate refinement: O ← O·G(i, j, t) with t from golden
  // section, shrinking the bracket until a sweep no longer improves.
  for (int comp = 0; comp < 2; ++comp) {
    double radius = n == 2 ? 4.0 * std::numbers::pi / static_cast<double>(search_budget) + 1e-3 : 0.5;
    for (int sweep = 0; sweep < 400 && radius > 1e-12; ++sweep) {
      double improvement = 0.0;
      for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
          double t = 0.0;
          const Matrix base = best[comp];
          const double v = detail::golden_section_min(
              [&](double s) { return objective(base * detail::givens(n, i, j, s)); }, -radius, radius,
              radius * 1e-6, t);
          if (v < best_val[comp]) {
            improvement += best_val[comp] - v;
            best_val[comp] = v;
            best[comp] = base * detail::givens(n, i, j, t);
          }
        }
      }
      if (improvement <= 1e-15 * std::max(1.0, best_val[comp])) radius *= 0.5;
    }
  }
  result.value = std::min(best_val[0], best_val[1]);
  return result;
}

/// ‖log X − log Y‖_{M⁻¹}.
inline DistanceResult generalized_log_euclidean(const SpdMatrix& x, const SpdMatrix& y, const MetricWeight& w) {
  detail::require_same_dim(x, y);
  const Matrix lx = spd_log(x);
  const Matrix ly = spd_log(y);
  const Matrix minv = w.inverse(x.dim());
  DistanceResult r;
  r.value = x.matrix() == y.matrix() ? 0.0 : mahalanobis_norm(lx - ly, w);
  r.breakdown = std::map<std::string, double>{{"trace_X", (lx * minv * lx).trace()},
                                              {"trace_Y", (ly * minv * ly).trace()},
                                              {"cross_term", (lx * minv * ly).trace()}};
  return r;
}

/// Truncated generalized Log-Euclidean Signature distance:
/// d² = Σ_{i≤K} [log(λᵢˣ + δ) − log(λᵢʸ + γ)]² / (ωᵢ + ρ)².
inline DistanceResult gles_distance(const Vector& spec_x, double delta, const Vector& spec_y, double gamma,
                                    const MetricWeight& w, Index k) {
  if (!w.is_diagonal()) fail(ErrorCode::InvalidWeight, "GLES takes a diagonal-form weight");
  if (k < 0 || k > spec_x.size() || k > spec_y.size() || k > w.omega().size())
    fail(ErrorCode::IndexOutOfRange, "truncation K exceeds a spectrum or the weight vector");
  double tx = 0.0, ty = 0.0, cross = 0.0, sq = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double ax = spec_x(i) + delta;
    const double ay = spec_y(i) + gamma;
    if (!(ax > 0.0) || !(ay > 0.0))
      fail(ErrorCode::NonPositiveShiftedEigenvalue, "eigenvalue + shift must be positive at index " + std::to_string(i));
    const double lx = std::log(ax), ly = std::log(ay);
    const double denom = w.omega()(i) + w.rho();
    const double wt = 1.0 / (denom * denom);
    tx += wt * lx * lx;
    ty += wt * ly * ly;
    cross += wt * lx * ly;
    sq += wt * (lx - ly) * (lx - ly);
  }
  DistanceResult r;
  r.value = std::sqrt(sq);
  r.breakdown = std::map<std::string, double>{{"trace_X", tx}, {"trace_Y", ty}, {"cross_term", cross}};
  return r;
}

/// ‖log(X + δI) − log(Y + γI)‖_{M⁻¹} on rank-paired truncated spectra.
inline DistanceResult generalized_log_hs(const ExtendedOperator& tx, const ExtendedOperator& ty,
                                         const MetricWeight& w) {
  if (tx.truncation() != ty.truncation())
    fail(ErrorCode::DimensionMismatch, "extended operators have different truncation lengths");
  if (!w.is_diagonal()) fail(ErrorCode::InvalidWeight, "Log-HS distance takes a diagonal-form weight");
  if (w.omega().size() < tx.truncation()) fail(ErrorCode::DimensionMismatch, "weight vector shorter than truncation");
  if (!tx.is_definite() || !ty.is_definite())
    fail(ErrorCode::NonPositiveShiftedEigenvalue, "shifted spectra must be strictly positive");
  return gles_distance(tx.eigenvalues(), tx.shift(), ty.eigenvalues(), ty.shift(), w, tx.truncation());
}

/// 2-Wasserstein distance between N(m1, X) and N(m2, Y) with ground cost
/// ‖x − y‖_{M⁻¹}: [(m1−m2)ᵀM⁻¹(m1−m2) + d²_GBW(X, Y)]^{1/2}.
inline DistanceResult gaussian_w2_generalized(const Vector& m1, const SpdMatrix& x, const Vector& m2,
                                              const SpdMatrix& y, const MetricWeight& w) {
  detail::require_same_dim(x, y);
  if (m1.size() != x.dim() || m2.size() != x.dim())
    fail(ErrorCode::DimensionMismatch, "mean vectors must match the covariance dimension");
  const Vector dm = m1 - m2;
  const double mean_term = std::max(dm.dot(w.inverse(x.dim()) * dm), 0.0);
  DistanceResult cov = generalized_bw(x, y, w);
  DistanceResult r;
  r.value = std::sqrt(mean_term + cov.value * cov.value);
  r.breakdown = cov.breakdown;
  (*r.breakdown)["mean_term"] = mean_term;
  return r;
}

// ---------------------------------------------------------------------------
// Robust GBW

/// C̃ = {Ω : 0 ⪯ Ω ⪯ I, tr Ω = k}, the convex hull of rank-k projectors.
class OmegaConstraintSet {
 public:
  OmegaConstraintSet(Index dim, Index budget) : dim_(dim), budget_(budget) {
    if (dim < 1) fail(ErrorCode::InvalidParams, "constraint set dimension must be positive");
    if (budget > dim) fail(ErrorCode::InfeasibleBudget, "trace budget exceeds dimension");
    if (budget < 1) fail(ErrorCode::InvalidParams, "trace budget must be at least 1");
  }

  [[nodiscard]] Index dim() const noexcept { return dim_; }
  [[nodiscard]] Index budget() const noexcept { return budget_; }

  [[nodiscard]] bool contains(const Matrix& omega, double tol = 1e-9) const {
    if (omega.rows() != dim_ || !is_symmetric(omega)) return false;
    const Spectrum s = detail::eig_unchecked(omega);
    return s.min_value() >= -tol && s.max_value() <= 1.0 + tol &&
           std::abs(s.values.sum() - static_cast<double>(budget_)) <= tol;
  }

 private:
  Index dim_;
  Index budget_;
};

/// Euclidean projection of v onto {u ∈ [0,1]ⁿ : Σu = k}: uᵢ = clip(vᵢ − τ, 0, 1)
/// with τ found by bisection, then solved exactly on the final active set.
inline Vector project_capped_simplex(const Vector& v, double k) {
  const Index n = v.size();
  auto clipped_sum = [&](double tau) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += std::clamp(v(i) - tau, 0.0, 1.0);
    return s;
  };
  double lo = v.minCoeff() - 1.0;  // sum = n
  double hi = v.maxCoeff();        // sum = 0
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (clipped_sum(mid) > k ? lo : hi) = mid;
  }
  double tau = 0.5 * (lo + hi);
  double free_sum = 0.0, ones = 0.0, free_count = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double u = v(i) - tau;
    if (u >= 1.0) {
      ones += 1.0;
    } else if (u > 0.0) {
      free_sum += v(i);
      free_count += 1.0;
    }
  }
  if (free_count > 0.0) {
    const double exact = (free_sum + ones - k) / free_count;
    if (std::abs(exact - tau) < 1e-9 * std::max(1.0, std::abs(tau))) tau = exact;
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = std::clamp(v(i) - tau, 0.0, 1.0);
  return out;
}

/// Frobenius-nearest element of C̃ to the symmetric matrix S.
inline SpdMatrix project_to_omega_set(const Matrix& s, const OmegaConstraintSet& c) {
  if (s.rows() != c.dim() || s.cols() != c.dim()) fail(ErrorCode::DimensionMismatch, "projection operand dimension");
  const Spectrum spec = sym_eig(s);
  const Vector proj = project_capped_simplex(spec.values, static_cast<double>(c.budget()));
  return SpdMatrix::symmetrized(spec.vectors * proj.asDiagonal() * spec.vectors.transpose());
}

struct RobustGbwOptions {
  double step = 1.0;
  int max_iter = 500;
  double tol = 1e-8;
  double backtrack = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct RobustGbwSolution {
  double distance_sq = 0.0;
  SpdMatrix omega_star = SpdMatrix::identity(1);
  int iterations = 0;
  std::vector<double> ascent_trace;
};

/// Ω ↦ tr(ΩX) + tr(ΩY) − 2 tr(X^{1/2} Ω Y Ω X^{1/2})^{1/2}, i.e. d²_GBW with M⁻¹ = Ω.
class RobustGbwObjective {
 public:
  RobustGbwObjective(const SpdMatrix& x, const SpdMatrix& y)
      : x_(x.matrix()), y_(y.matrix()), xh_(spd_sqrt(x).matrix()), yh_(spd_sqrt(y).matrix()) {
    if (x.dim() != y.dim()) fail(ErrorCode::DimensionMismatch, "operands have different dimensions");
  }

  [[nodiscard]] double value(const Matrix& omega) const {
    const double lin = (omega * x_).trace() + (omega * y_).trace();
    return lin - 2.0 * detail::trace_sqrt_psd(xh_ * omega * y_ * omega * xh_);
  }

  /// Supergradient (X^{1/2} − Y^{1/2}O)(X^{1/2} − Y^{1/2}O)ᵀ at the optimal
  /// O = polar factor of (X^{1/2}ΩY^{1/2})ᵀ. For invertible Ω this is the gradient
  /// X + Y − (YΩB + BΩY), B = X^{1/2}(X^{1/2}ΩYΩX^{1/2})^{-1/2}X^{1/2}; on the
  /// rank-deficient boundary any polar completion gives a valid supergradient.
  [[nodiscard]] Matrix gradient(const Matrix& omega) const {
    const Matrix c = xh_ * omega * yh_;
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix o = svd.matrixV() * svd.matrixU().transpose();
    const Matrix d = xh_ - yh_ * o;
    return symmetrize(d * d.transpose());
  }

  /// Smoothed objective with tr((CᵀC + μ²I)^{1/2}) in place of the nuclear
  /// norm of C = X^{1/2}ΩY^{1/2}. Still concave, differentiable everywhere, and
  /// within 2nμ below value().
  [[nodiscard]] double smoothed_value(const Matrix& omega, double mu) const {
    const Matrix c = xh_ * omega * yh_;
    const Vector s = detail::eig_unchecked(symmetrize(c.transpose() * c)).values.cwiseMax(0.0);
    const double lin = (omega * x_).trace() + (omega * y_).trace();
    return lin - 2.0 * (s.array() + mu * mu).sqrt().sum();
  }

  /// X + Y − 2 sym(X^{1/2} C (CᵀC + μ²I)^{-1/2} Y^{1/2}).
  [[nodiscard]] Matrix smoothed_gradient(const Matrix& omega, double mu) const {
    const Matrix c = xh_ * omega * yh_;
    Spectrum s = detail::eig_unchecked(symmetrize(c.transpose() * c));
    s.values = (s.values.cwiseMax(0.0).array() + mu * mu).rsqrt();
    return symmetrize(x_ + y_ - 2.0 * symmetrize(xh_ * c * s.reconstruct() * yh_));
  }

 private:
  Matrix x_;
  Matrix y_;
  Matrix xh_;
  Matrix yh_;
};

namespace detail {

inline Matrix orthonormalize(const Matrix& w) {
  Eigen::HouseholderQR<Matrix> qr(w);
  Matrix q = qr.householderQ() * Matrix::Identity(w.rows(), w.cols());
  const Matrix r = qr.matrixQR().topRows(w.cols()).triangularView<Eigen::Upper>();
  for (Index j = 0; j < w.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// When projected ascent stalls on a rank-k projector Ω = WWᵀ (the extreme
/// points of C̃), the objective is nonsmooth across the face: moving mass
/// into null directions has unbounded negative slope, so backtracking only
/// accepts vanishing steps. Continue instead with Riemannian gradient ascent
/// over W ∈ St(n, k), where Ω ↦ f(WWᵀ) is smooth. Returns iterations used.
inline int polish_on_projectors(const RobustGbwObjective& f, const OmegaConstraintSet& c,
                                const RobustGbwOptions& opt, Matrix& omega, double& value,
                                std::vector<double>& trace) {
  const Index n = c.dim(), k = c.budget();
  if (k == n) return 0;
  const Spectrum s = eig_unchecked(symmetrize(omega));
  for (Index i = 0; i < n; ++i) {
    const double target = i < k ? 1.0 : 0.0;
    if (std::abs(s.values(i) - target) > 1e-6) return 0;
  }
  Matrix w = s.vectors.leftCols(k);
  double current = f.value(w * w.transpose());
  double t = 1.0;
  int used = 0;
  for (; used < opt.max_iter; ++used) {
    const Matrix egrad = 2.0 * f.gradient(w * w.transpose()) * w;
    const Matrix rgrad = egrad - w * symmetrize(w.transpose() * egrad);
    const double slope = rgrad.squaredNorm();
    if (slope <= 1e-28 * std::max(1.0, current * current)) break;
    bool accepted = false;
    Matrix next;
    double next_value = current;
    t *= 4.0;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, t *= opt.backtrack) {
      next = orthonormalize(w + t * rgrad);
      next_value = f.value(next * next.transpose());
      if (next_value >= current + opt.armijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double delta = next_value - current;
    w = next;
    current = next_value;
    if (delta < 1e-15 * std::max(1.0, std::abs(current))) break;
  }
  if (current > value) {
    omega = w * w.transpose();
    value = current;
    trace.push_back(value);
  }
  return used;
}

}  // namespace detail

namespace detail {

/// Projected gradient ascent with Armijo backtracking and step expansion.
/// Returns the number of accepted steps; `stalled_at_start` reports whether
/// no step was accepted although the projected move was nonzero.
template <class Value, class Gradient>
int projected_ascent(const Value& fv, const Gradient& fg, const OmegaConstraintSet& c, const RobustGbwOptions& opt,
                     int max_iter, Matrix& omega, bool& stalled_at_start) {
  double value = fv(omega);
  stalled_at_start = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Matrix grad = fg(omega);
    double t = opt.step;
    bool accepted = false;
    Matrix candidate;
    double cand_value = value;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, t *= opt.backtrack) {
      candidate = project_to_omega_set(omega + t * grad, c).matrix();
      cand_value = fv(candidate);
      const double predicted = (grad.array() * (candidate - omega).array()).sum();
      if (cand_value >= value + opt.armijo * predicted) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      const double move = (project_to_omega_set(omega + grad, c).matrix() - omega).norm();
      stalled_at_start = it == 0 && move > 1e-10 * std::max(1.0, grad.norm());
      break;
    }
    // Expansion: near the rank-deficient boundary short steps leak mass into
    // null directions where the slope is very negative, so a first-trial
    // acceptance is followed by doubling while it keeps improving.
    if (t == opt.step) {
      for (int grow = 0; grow < opt.max_backtracks; ++grow) {
        const Matrix longer = project_to_omega_set(omega + 2.0 * t * grad, c).matrix();
        const double longer_value = fv(longer);
        if (!(longer_value > cand_value)) break;
        t *= 2.0;
        candidate = longer;
        cand_value = longer_value;
      }
    }
    const double delta = cand_value - value;
    omega = candidate;
    value = cand_value;
    if (std::abs(delta) < opt.tol) {
      ++it;
      break;
    }
  }
  return it;
}

}  // namespace detail

/// max over Ω ∈ C̃ of d²_GBW(X, Y) with M⁻¹ = Ω, by projected gradient ascent
/// with Armijo backtracking from the barycenter (k/n)·I.
///
/// The objective is concave but nonsmooth wherever X^{1/2}ΩY^{1/2} is
/// singular, which is where the maximizer tends to live, and plain ascent
/// stalls at such kinks. The ascent therefore runs on a smoothed objective
/// with a decreasing smoothing level (warm-started), then on the exact
/// objective, and finally polishes on rank-k projectors. The best exact
/// value seen is returned; `ascent_trace` holds it after each stage.
inline RobustGbwSolution robust_gbw(const SpdMatrix& x, const SpdMatrix& y, const OmegaConstraintSet& c,
                                    const RobustGbwOptions& opt = {}) {
  if (x.dim() != y.dim() || x.dim() != c.dim()) fail(ErrorCode::DimensionMismatch, "robust GBW operand dimensions");
  if (!x.is_definite() || !y.is_definite()) fail(ErrorCode::SingularMatrix, "robust GBW needs definite operands");
  if (!(opt.step > 0.0) || opt.max_iter < 0) fail(ErrorCode::InvalidParams, "robust GBW step/iteration settings");

  const Index n = x.dim();
  const RobustGbwObjective f(x, y);
  Matrix omega = Matrix::Identity(n, n) * (static_cast<double>(c.budget()) / static_cast<double>(n));

  RobustGbwSolution sol;
  Matrix best = omega;
  double best_value = f.value(omega);
  sol.ascent_trace.push_back(best_value);
  auto keep_best = [&] {
    const double v = f.value(omega);
    if (v > best_value) {
      best_value = v;
      best = omega;
    }
    sol.ascent_trace.push_back(best_value);
  };

  int it = 0;
  bool stalled = false;
  const double scale = std::max({1.0, x.trace(), y.trace()});
  for (double mu = 1e-1 * scale; mu >= 1e-9 * scale && it < opt.max_iter; mu *= 0.1) {
    it += detail::projected_ascent([&](const Matrix& o) { return f.smoothed_value(o, mu); },
                                   [&](const Matrix& o) { return f.smoothed_gradient(o, mu); }, c, opt,
                                   opt.max_iter - it, omega, stalled);
    if (stalled && it == 0) fail(ErrorCode::NoAscent, "no feasible ascent step at the initial iterate");
    keep_best();
  }
  it += detail::projected_ascent([&](const Matrix& o) { return f.value(o); },
                                 [&](const Matrix& o) { return f.gradient(o); }, c, opt,
                                 std::max(opt.max_iter - it, 1), omega, stalled);
  keep_best();

  omega = best;
  double value = best_value;
  it += detail::polish_on_projectors(f, c, opt, omega, value, sol.ascent_trace);
  sol.iterations = it;
  sol.distance_sq = std::max(value, 0.0);
  sol.omega_star = SpdMatrix::symmetrized(omega);
  return sol;
}

}  // namespace procrustes
