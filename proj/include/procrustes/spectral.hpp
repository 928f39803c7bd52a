#pragma once

// Randomized fixed-rank Nyström approximation of PSD matrices and the
// associated eigenvalue error certificates.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <variant>

#include "procrustes/error.hpp"
#include "procrustes/random.hpp"
#include "procrustes/spd_core.hpp"

namespace procrustes {

struct SketchConfig {
  Index num_random_vectors = 0;  // M
  Index rank = 0;                // K
  std::uint64_t seed = 0;

  void validate() const {
    if (rank < 1) fail(ErrorCode::InvalidSketchSize, "sketch rank must be positive");
    if (num_random_vectors < rank + 2)
      fail(ErrorCode::InvalidSketchSize, "need M >= K + 2 random vectors");
  }
};

/// Â = F Fᵀ with F of size n×K.
struct LowRankPsd {
  Matrix factors;
  Index rank = 0;
  double shift_used = 0.0;

  [[nodiscard]] Matrix reconstruct() const { return factors * factors.transpose(); }

  /// Eigenvalues of Â, descending (squared singular values of F).
  [[nodiscard]] Vector eigenvalues() const {
    Eigen::JacobiSVD<Matrix> svd(factors);
    return svd.singularValues().array().square();
  }
};

/// Standard Gaussian n×m test matrix drawn from a counter-based stream.
inline Matrix gaussian_test_matrix(Index n, Index m, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix g(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  return g;
}

/// Stabilized fixed-rank Nyström: sketch Y = AG, shift ν = eps·‖Y‖₂,
/// Cholesky of Gᵀ(Y + νG), B = (Y + νG)C⁻¹, truncated SVD of B with the
/// shift removed from the squared singular values. The shift is doubled on
/// Cholesky failure, at most three times.
inline LowRankPsd nystrom_fixed_rank(const SpdMatrix& a, const SketchConfig& cfg) {
  cfg.validate();
  const Index n = a.dim();
  if (cfg.rank > n) fail(ErrorCode::IndexOutOfRange, "sketch rank exceeds matrix dimension");
  const Index m = std::min(cfg.num_random_vectors, n);

  const Matrix g = gaussian_test_matrix(n, m, cfg.seed);
  const Matrix y = a.matrix() * g;
  const double ynorm = Eigen::JacobiSVD<Matrix>(y).singularValues()(0);
  double nu = std::numeric_limits<double>::epsilon() * std::max(ynorm, std::numeric_limits<double>::min());

  for (int attempt = 0; attempt <= 3; ++attempt, nu *= 2.0) {
    const Matrix y_nu = y + nu * g;
    const Matrix core = symmetrize(g.transpose() * y_nu);
    Eigen::LLT<Matrix> llt(core);
    if (llt.info() != Eigen::Success) continue;
    // B = Y_ν C⁻¹ with core = CᵀC, C upper triangular.
    const Matrix c = llt.matrixU();
    const Matrix b = c.transpose().triangularView<Eigen::Lower>().solve(y_nu.transpose()).transpose();
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU);
    const Index k = std::min(cfg.rank, svd.singularValues().size());
    LowRankPsd out;
    out.rank = k;
    out.shift_used = nu;
    out.factors.resize(n, k);
    for (Index i = 0; i < k; ++i) {
      const double s = svd.singularValues()(i);
      const double lambda = std::max(s * s - nu, 0.0);
      out.factors.col(i) = svd.matrixU().col(i) * std::sqrt(lambda);
    }
    return out;
  }
  fail(ErrorCode::CholeskyFailure, "Nyström core factorization failed after shift escalation");
}

struct ExactMethod {};
struct NystromMethod {
  SketchConfig config;
};
using SpectrumMethod = std::variant<ExactMethod, NystromMethod>;

/// K leading eigenvalues, descending.
inline Vector top_k_spectrum(const SpdMatrix& a, Index k, const SpectrumMethod& method = ExactMethod{}) {
  if (k < 0 || k > a.dim()) fail(ErrorCode::IndexOutOfRange, "K exceeds matrix dimension");
  if (std::holds_alternative<ExactMethod>(method)) return a.spectrum().values.head(k);
  SketchConfig cfg = std::get<NystromMethod>(method).config;
  cfg.rank = k;
  const Vector ev = nystrom_fixed_rank(a, cfg).eigenvalues();
  Vector out = Vector::Zero(k);
  out.head(std::min(k, ev.size())) = ev.head(std::min(k, ev.size()));
  return out;
}

namespace detail {

inline double tail_term(const Vector& tail, Index k, Index m) {
  if (m <= k + 1) fail(ErrorCode::InvalidSketchSize, "bound requires M > K + 1");
  if (tail.size() == 0) return 0.0;
  return tail.norm() + static_cast<double>(k) / static_cast<double>(m - k - 1) * tail.sum();
}

}  // namespace detail

/// (Σ_{i≤K} 1/ωᵢ)·[(Σ_{i>K} λᵢ²)^{1/2} + K/(M−K−1)·Σ_{i>K} λᵢ].
/// Certifies E[Σ_{i≤K} |λᵢ − λ̂ᵢ|/ωᵢ]; the weight sum runs over the K
/// weights paired with the retained eigenvalues.
inline double eigenvalue_error_bound(const Vector& tail, Index k, Index m, const MetricWeight& weights) {
  if (!weights.is_diagonal()) fail(ErrorCode::InvalidWeight, "bound takes a diagonal-form weight");
  const double tail_part = detail::tail_term(tail, k, m);
  if (weights.omega().size() < k) fail(ErrorCode::DimensionMismatch, "need at least K weights");
  double inv_sum = 0.0;
  for (Index i = 0; i < k; ++i) {
    if (!(weights.omega()(i) > 0.0)) fail(ErrorCode::InvalidWeight, "bound needs strictly positive weights");
    inv_sum += 1.0 / weights.omega()(i);
  }
  return inv_sum * tail_part;
}

/// 1.5/(λ_K + δ) · 1/(ω_K + ρ) · α(ω, λ) with
/// α = (Σ_{i>K} (ωᵢ + ρ)⁻² · [(Σ_{i>K} λᵢ²)^{1/2} + K/(M−K−1)·Σ_{i>K} λᵢ])^{1/2}.
inline double gles_error_bound(double lambda_k, double delta, double omega_k, double rho, const Vector& tail,
                               const Vector& weights_tail, Index k, Index m) {
  const double tail_part = detail::tail_term(tail, k, m);
  if (!(lambda_k + delta > 0.0)) fail(ErrorCode::NonPositiveShiftedEigenvalue, "lambda_K + delta must be positive");
  if (!(omega_k + rho > 0.0)) fail(ErrorCode::InvalidWeight, "omega_K + rho must be positive");
  if (tail.size() == 0) return 0.0;
  double weight_sum = 0.0;
  for (Index i = 0; i < weights_tail.size(); ++i) {
    const double d = weights_tail(i) + rho;
    if (!(d > 0.0)) fail(ErrorCode::InvalidWeight, "omega_i + rho must be positive");
    weight_sum += 1.0 / (d * d);
  }
  const double alpha = std::sqrt(weight_sum * tail_part);
  return 1.5 / (lambda_k + delta) / (omega_k + rho) * alpha;
}

}  // namespace procrustes
