#pragma once

// Dense symmetric eigendecomposition, spectral matrix functions, polar
// factors and (extended) Mahalanobis norms. Everything else in the library
// is built on these primitives.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "procrustes/error.hpp"

namespace procrustes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultPsdTolerance = 1e-10;

/// Entrywise symmetry test: |a_ij - a_ji| <= 1e-12 * max(1, |a_ij|).
inline bool is_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) return false;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = j + 1; i < a.rows(); ++i) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale) return false;
    }
  }
  return true;
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Eigenvalues sorted descending, column i of `vectors` paired with values(i).
struct Spectrum {
  Vector values;
  Matrix vectors;

  [[nodiscard]] Index size() const noexcept { return values.size(); }

  [[nodiscard]] Matrix reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }

  /// V f(Λ) Vᵀ for a scalar function f.
  template <typename F>
  [[nodiscard]] Matrix apply(F&& f) const {
    Vector mapped(values.size());
    for (Index i = 0; i < values.size(); ++i) mapped(i) = f(values(i));
    return symmetrize(vectors * mapped.asDiagonal() * vectors.transpose());
  }

  [[nodiscard]] double min_value() const { return values.size() ? values(values.size() - 1) : 0.0; }
  [[nodiscard]] double max_value() const { return values.size() ? values(0) : 0.0; }
};

namespace detail {

// Sign convention: the largest-magnitude component of each eigenvector is
// nonnegative (first index wins ties).
inline void fix_signs(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.rows(); ++i) {
      const double m = std::abs(v(i, j));
      if (m > best + 1e-14) {
        best = m;
        arg = i;
      }
    }
    if (v(arg, j) < 0.0) v.col(j) = -v.col(j);
  }
}

inline Spectrum eig_unchecked(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "symmetric eigensolver did not converge");
  const Index n = a.rows();
  Spectrum s{Vector(n), Matrix(n, n)};
  // Eigen returns ascending order.
  for (Index i = 0; i < n; ++i) {
    s.values(i) = solver.eigenvalues()(n - 1 - i);
    s.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  fix_signs(s.vectors);
  return s;
}

}  // namespace detail

/// Symmetric eigendecomposition with descending eigenvalues.
inline Spectrum sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionMismatch, "sym_eig expects a square matrix");
  if (!is_symmetric(a)) fail(ErrorCode::NotSymmetric, "sym_eig input is not symmetric");
  return detail::eig_unchecked(a);
}

/// Dense symmetric positive semidefinite matrix. Validated once at
/// construction; the spectrum is computed eagerly so the object stays
/// immutable and shareable.
class SpdMatrix {
 public:
  /// Validates symmetry and positive semidefiniteness. Eigenvalues in
  /// [-tol * ||A||_2, 0) are clipped to zero.
  explicit SpdMatrix(const Matrix& entries, double psd_tolerance = kDefaultPsdTolerance)
      : psd_tolerance_(psd_tolerance) {
    if (entries.rows() == 0 || entries.rows() != entries.cols())
      fail(ErrorCode::DimensionMismatch, "SPD matrix must be square and non-empty");
    if (!is_symmetric(entries)) fail(ErrorCode::NotSymmetric, "matrix is not symmetric");
    init(symmetrize(entries));
  }

  /// Symmetrizes (A + Aᵀ)/2 before validation. For internally computed
  /// products whose asymmetry is pure rounding.
  static SpdMatrix symmetrized(const Matrix& entries, double psd_tolerance = kDefaultPsdTolerance) {
    if (entries.rows() == 0 || entries.rows() != entries.cols())
      fail(ErrorCode::DimensionMismatch, "SPD matrix must be square and non-empty");
    SpdMatrix out;
    out.psd_tolerance_ = psd_tolerance;
    out.init(symmetrize(entries));
    return out;
  }

  static SpdMatrix identity(Index n) { return SpdMatrix(Matrix::Identity(n, n)); }

  static SpdMatrix diagonal(const Vector& d) { return SpdMatrix(Matrix(d.asDiagonal())); }

  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }
  [[nodiscard]] const Spectrum& spectrum() const noexcept { return spectrum_; }
  [[nodiscard]] double psd_tolerance() const noexcept { return psd_tolerance_; }
  [[nodiscard]] double trace() const { return entries_.trace(); }
  [[nodiscard]] double operator()(Index i, Index j) const { return entries_(i, j); }

  /// Strictly positive definite relative to the tolerance.
  [[nodiscard]] bool is_definite() const {
    return spectrum_.min_value() > psd_tolerance_ * std::max(1.0, spectrum_.max_value());
  }

 private:
  SpdMatrix() = default;

  void init(Matrix sym) {
    spectrum_ = detail::eig_unchecked(sym);
    const double scale = std::max(std::abs(spectrum_.max_value()), std::abs(spectrum_.min_value()));
    if (spectrum_.min_value() < -psd_tolerance_ * std::max(scale, 1e-300))
      fail(ErrorCode::NotPositiveSemidefinite,
           "smallest eigenvalue " + std::to_string(spectrum_.min_value()) + " below tolerance");
    if (spectrum_.min_value() < 0.0) {
      spectrum_.values = spectrum_.values.cwiseMax(0.0);
      sym = spectrum_.apply([](double v) { return v; });
    }
    entries_ = std::move(sym);
  }

  Matrix entries_;
  Spectrum spectrum_;
  double psd_tolerance_ = kDefaultPsdTolerance;
};

namespace detail {

inline double singular_gate(const Spectrum& s, double tol) { return tol * std::max(1.0, s.max_value()); }

}  // namespace detail

/// A^alpha through the eigendecomposition. alpha = 0 yields I.
inline SpdMatrix spd_power(const SpdMatrix& a, double alpha) {
  const Spectrum& s = a.spectrum();
  if (alpha == 0.0) return SpdMatrix::identity(a.dim());
  if (alpha == 1.0) return a;
  if (alpha < 0.0 && s.min_value() <= detail::singular_gate(s, a.psd_tolerance()))
    fail(ErrorCode::SingularMatrix, "negative power of a singular matrix");
  return SpdMatrix::symmetrized(s.apply([alpha](double v) { return v > 0.0 ? std::pow(v, alpha) : 0.0; }),
                                a.psd_tolerance());
}

inline SpdMatrix spd_sqrt(const SpdMatrix& a) { return spd_power(a, 0.5); }

/// Principal matrix logarithm of a strictly positive definite matrix.
inline Matrix spd_log(const SpdMatrix& a) {
  const Spectrum& s = a.spectrum();
  if (s.min_value() <= detail::singular_gate(s, a.psd_tolerance()))
    fail(ErrorCode::SingularMatrix, "logarithm of a singular matrix");
  return s.apply([](double v) { return std::log(v); });
}

/// exp of a symmetric matrix (eigen-reconstruction).
inline SpdMatrix sym_exp(const Matrix& s) {
  return SpdMatrix::symmetrized(sym_eig(s).apply([](double v) { return std::exp(v); }));
}

/// Orthogonal factor U of the polar decomposition Q = U P, via Q = W Σ Zᵀ,
/// U = W Zᵀ. Rank-deficient input is rejected.
inline Matrix orthogonal_polar_factor(const Matrix& q) {
  if (q.rows() != q.cols() || q.rows() == 0) fail(ErrorCode::DimensionMismatch, "polar factor needs a square matrix");
  Eigen::JacobiSVD<Matrix> svd(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-12 * sv(0))) fail(ErrorCode::RankDeficient, "polar factor of a rank-deficient matrix");
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Mahalanobis weight. `Full` holds an SPD matrix M, `Diagonal` holds the
/// eigenvalue vector ω of a weight whose eigenbasis is the ambient basis.
/// The effective weight is always M + ρI (resp. diag(ω + ρ)).
class MetricWeight {
 public:
  struct Full {
    SpdMatrix m;
  };
  struct Diagonal {
    Vector omega;
  };

  static MetricWeight full(SpdMatrix m, double rho = 0.0) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidWeight, "rho must be finite and nonnegative");
    const double lo = m.spectrum().min_value() + rho;
    if (!(lo > m.psd_tolerance() * std::max(1.0, m.spectrum().max_value() + rho)))
      fail(ErrorCode::SingularMatrix, "M + rho I must be strictly positive definite");
    return MetricWeight(Full{std::move(m)}, rho);
  }

  static MetricWeight identity(Index n) { return full(SpdMatrix::identity(n)); }

  static MetricWeight diagonal(Vector omega, double rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidWeight, "rho must be finite and nonnegative");
    for (Index i = 0; i < omega.size(); ++i) {
      if (!(omega(i) >= 0.0) || !std::isfinite(omega(i)))
        fail(ErrorCode::InvalidWeight, "omega entries must be finite and nonnegative");
      if (!(omega(i) + rho > 0.0)) fail(ErrorCode::InvalidWeight, "omega_i + rho must be positive");
    }
    return MetricWeight(Diagonal{std::move(omega)}, rho);
  }

  [[nodiscard]] bool is_full() const noexcept { return std::holds_alternative<Full>(form_); }
  [[nodiscard]] bool is_diagonal() const noexcept { return std::holds_alternative<Diagonal>(form_); }
  [[nodiscard]] double rho() const noexcept { return rho_; }
  [[nodiscard]] const SpdMatrix& m() const { return std::get<Full>(form_).m; }
  [[nodiscard]] const Vector& omega() const { return std::get<Diagonal>(form_).omega; }

  [[nodiscard]] Index size() const { return is_full() ? m().dim() : omega().size(); }

  /// ω_i + ρ (diagonal) or eigenvalues of M + ρI (full), descending for full.
  [[nodiscard]] Vector effective_eigenvalues() const {
    if (is_diagonal()) return omega().array() + rho_;
    return m().spectrum().values.array() + rho_;
  }

  /// Dense (M + ρI)^{-1} of size n.
  [[nodiscard]] Matrix inverse(Index n) const {
    if (size() != n) fail(ErrorCode::DimensionMismatch, "weight dimension does not match operand dimension");
    if (is_diagonal()) return Matrix((omega().array() + rho_).inverse().matrix().asDiagonal());
    return m().spectrum().apply([r = rho_](double v) { return 1.0 / (v + r); });
  }

 private:
  MetricWeight(std::variant<Full, Diagonal> form, double rho) : form_(std::move(form)), rho_(rho) {}

  std::variant<Full, Diagonal> form_;
  double rho_;
};

/// Truncated spectrum plus scalar shift: the finite stand-in for X + δI
/// with X Hilbert-Schmidt. Only the K leading eigenvalues are kept.
/// Construction admits the semidefinite boundary (λ_i + δ = 0) so that the
/// zero operator has a norm; logarithmic distances require strict positivity
/// and check it themselves.
class ExtendedOperator {
 public:
  ExtendedOperator(Vector eigenvalues, double shift, std::optional<Index> ambient_dim = std::nullopt)
      : eigenvalues_(std::move(eigenvalues)), shift_(shift), ambient_dim_(ambient_dim) {
    if (!(shift_ >= 0.0) || !std::isfinite(shift_)) fail(ErrorCode::InvalidParams, "shift must be nonnegative");
    if (ambient_dim_ && eigenvalues_.size() > *ambient_dim_)
      fail(ErrorCode::DimensionMismatch, "truncation exceeds ambient dimension");
    for (Index i = 0; i < eigenvalues_.size(); ++i) {
      if (!(eigenvalues_(i) + shift_ >= 0.0))
        fail(ErrorCode::NonPositiveShiftedEigenvalue, "eigenvalue + shift must be nonnegative");
      if (i + 1 < eigenvalues_.size() && eigenvalues_(i) < eigenvalues_(i + 1))
        fail(ErrorCode::InvalidParams, "eigenvalues must be sorted descending");
    }
  }

  /// Leading K eigenvalues of `a` with shift δ.
  static ExtendedOperator from_matrix(const SpdMatrix& a, Index k, double shift) {
    if (k < 0 || k > a.dim()) fail(ErrorCode::IndexOutOfRange, "truncation larger than matrix dimension");
    return ExtendedOperator(a.spectrum().values.head(k), shift, a.dim());
  }

  [[nodiscard]] const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  [[nodiscard]] double shift() const noexcept { return shift_; }
  [[nodiscard]] Index truncation() const noexcept { return eigenvalues_.size(); }
  [[nodiscard]] std::optional<Index> ambient_dim() const noexcept { return ambient_dim_; }

  [[nodiscard]] Vector shifted() const { return eigenvalues_.array() + shift_; }

  [[nodiscard]] bool is_definite() const { return truncation() == 0 || shifted().minCoeff() > 0.0; }

 private:
  Vector eigenvalues_;
  double shift_;
  std::optional<Index> ambient_dim_;  // nullopt: unbounded
};

/// ‖X‖_{M^{-1}} = sqrt(tr(Xᵀ (M + ρI)^{-1} X)).
inline double mahalanobis_norm(const Matrix& x, const MetricWeight& w) {
  if (x.rows() != w.size()) fail(ErrorCode::DimensionMismatch, "operand and weight dimensions differ");
  double sq = 0.0;
  if (w.is_diagonal()) {
    const Vector inv = (w.omega().array() + w.rho()).inverse();
    for (Index i = 0; i < x.rows(); ++i) sq += inv(i) * x.row(i).squaredNorm();
  } else {
    sq = (x.transpose() * w.inverse(x.rows()) * x).trace();
  }
  return std::sqrt(std::max(sq, 0.0));
}

/// sqrt(Σ_{i≤K} (λ_i + δ)² / (ω_i + ρ)), spectra paired by descending rank.
inline double extended_mahalanobis_norm(const ExtendedOperator& t, const MetricWeight& w) {
  if (!w.is_diagonal()) fail(ErrorCode::InvalidWeight, "extended norm takes a diagonal-form weight");
  const Index k = t.truncation();
  if (w.omega().size() < k) fail(ErrorCode::DimensionMismatch, "weight vector shorter than truncation");
  double sq = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double v = t.eigenvalues()(i) + t.shift();
    sq += v * v / (w.omega()(i) + w.rho());
  }
  return std::sqrt(sq);
}

}  // namespace procrustes
