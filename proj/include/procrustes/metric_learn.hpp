#pragma once

// Learning the diagonal GLES weights ω for a fixed ρ with a triplet hinge
// loss on squared GLES distances.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "procrustes/error.hpp"
#include "procrustes/metrics.hpp"
#include "procrustes/random.hpp"
#include "procrustes/spd_core.hpp"

namespace procrustes {

struct LearnConfig {
  Index k = 50;
  double rho = 1e1;
  double learning_rate = 10.0;
  int max_epochs = 200;
  double margin = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) fail(ErrorCode::InvalidParams, "K must be positive");
    if (!(rho > 0.0)) fail(ErrorCode::InvalidParams, "rho must be positive");
    if (!(margin > 0.0)) fail(ErrorCode::InvalidParams, "margin must be positive");
    if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidParams, "learning rate must be positive");
    if (max_epochs < 0) fail(ErrorCode::InvalidParams, "epoch count must be nonnegative");
  }
};

/// ωᵢ = exp(rawᵢ), positive by construction.
struct WeightParams {
  Vector raw;

  [[nodiscard]] Vector omega() const { return raw.array().exp(); }

  static WeightParams from_omega(const Vector& omega) {
    for (Index i = 0; i < omega.size(); ++i)
      if (!(omega(i) > 0.0)) fail(ErrorCode::InvalidWeight, "omega must be positive to take logs");
    return WeightParams{omega.array().log()};
  }

  /// raw ~ U(−1, 1) per coordinate.
  static WeightParams random_init(Index k, std::uint64_t seed) {
    CounterRng rng(seed);
    Vector raw(k);
    for (Index i = 0; i < k; ++i) raw(i) = rng.uniform(-1.0, 1.0);
    return WeightParams{raw};
  }

  [[nodiscard]] MetricWeight metric(double rho) const { return MetricWeight::diagonal(omega(), rho); }
};

struct LabeledSpectrum {
  Vector eigenvalues;  // descending, length ≥ K
  double shift = 1e-8;
  int group = 0;
};

namespace detail {

/// Triplet (anchor, same-group, other-group) as indices.
struct Triplet {
  std::size_t anchor, positive, negative;
};

class SeparationProblem {
 public:
  SeparationProblem(const std::vector<LabeledSpectrum>& spectra, Index k) : k_(k), n_(spectra.size()) {
    logs_.reserve(n_);
    for (const auto& s : spectra) {
      if (s.eigenvalues.size() < k) fail(ErrorCode::IndexOutOfRange, "spectrum shorter than K");
      Vector l(k);
      for (Index i = 0; i < k; ++i) {
        const double v = s.eigenvalues(i) + s.shift;
        if (!(v > 0.0)) fail(ErrorCode::NonPositiveShiftedEigenvalue, "eigenvalue + shift must be positive");
        l(i) = std::log(v);
      }
      logs_.push_back(std::move(l));
    }
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t p = 0; p < n_; ++p) {
        if (p == a || spectra[p].group != spectra[a].group) continue;
        for (std::size_t q = 0; q < n_; ++q)
          if (spectra[q].group != spectra[a].group) triplets_.push_back({a, p, q});
      }
    if (triplets_.empty()) fail(ErrorCode::InsufficientPairs, "need a same-group pair and a cross-group pair");
    // diff_[t] = Δ²(anchor, positive) − Δ²(anchor, negative), per coordinate.
    diffs_.reserve(triplets_.size());
    for (const auto& t : triplets_) {
      const Vector same = (logs_[t.anchor] - logs_[t.positive]).array().square();
      const Vector cross = (logs_[t.anchor] - logs_[t.negative]).array().square();
      diffs_.push_back(same - cross);
    }
  }

  /// Mean hinge and its gradient with respect to raw.
  [[nodiscard]] double loss(const WeightParams& w, double rho, double margin, Vector* grad = nullptr) const {
    if (w.raw.size() < k_) fail(ErrorCode::DimensionMismatch, "weight vector shorter than K");
    const Vector omega = w.raw.head(k_).array().exp();
    const Vector denom = omega.array() + rho;
    const Vector wt = denom.array().square().inverse();
    Vector acc = Vector::Zero(k_);
    double total = 0.0;
    for (const auto& d : diffs_) {
      const double h = margin + wt.dot(d);
      if (!(h <= 0.0)) {  // NaN stays in the sum
        total += h;
        if (grad) acc += d;
      }
    }
    const double count = static_cast<double>(diffs_.size());
    if (grad) {
      // ∂wtᵢ/∂rawᵢ = −2 ωᵢ / (ωᵢ + ρ)³
      *grad = Vector::Zero(w.raw.size());
      grad->head(k_) = (acc.array() * (-2.0 * omega.array() / denom.array().cube())).matrix() / count;
    }
    return total / count;
  }

  [[nodiscard]] std::size_t triplet_count() const noexcept { return triplets_.size(); }

 private:
  Index k_;
  std::size_t n_;
  std::vector<Vector> logs_;
  std::vector<Triplet> triplets_;
  std::vector<Vector> diffs_;
};

}  // namespace detail

/// Mean over triplets (a, p, n) with group(p) = group(a) ≠ group(n) of
/// max(0, margin + d²(a, p) − d²(a, n)), d the GLES distance under the
/// current weights.
inline double separation_loss(const WeightParams& weights, double rho, const std::vector<LabeledSpectrum>& spectra,
                              double margin) {
  return detail::SeparationProblem(spectra, weights.raw.size()).loss(weights, rho, margin);
}

inline Vector separation_loss_gradient(const WeightParams& weights, double rho,
                                       const std::vector<LabeledSpectrum>& spectra, double margin) {
  Vector g;
  (void)detail::SeparationProblem(spectra, weights.raw.size()).loss(weights, rho, margin, &g);
  return g;
}

struct LearnResult {
  WeightParams weights;
  std::vector<double> loss_trace;  // loss at init, then after each epoch
};

/// Full-batch gradient descent on raw from `init`; the step is halved (and
/// the epoch retried) whenever the loss would increase.
inline LearnResult learn_weights(const LearnConfig& cfg, const std::vector<LabeledSpectrum>& spectra,
                                 const WeightParams& init) {
  cfg.validate();
  if (init.raw.size() != cfg.k) fail(ErrorCode::DimensionMismatch, "initial weights must have length K");
  const detail::SeparationProblem problem(spectra, cfg.k);
  LearnResult out{init, {}};
  Vector grad;
  double loss = problem.loss(out.weights, cfg.rho, cfg.margin, &grad);
  if (!std::isfinite(loss)) fail(ErrorCode::DivergedLoss, "initial loss is not finite");
  out.loss_trace.push_back(loss);
  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (grad.squaredNorm() == 0.0) {
      out.loss_trace.push_back(loss);
      continue;
    }
    bool stepped = false;
    for (int halving = 0; halving < 60; ++halving, lr *= 0.5) {
      WeightParams trial{out.weights.raw - lr * grad};
      if (!trial.raw.allFinite()) continue;
      Vector trial_grad;
      const double trial_loss = problem.loss(trial, cfg.rho, cfg.margin, &trial_grad);
      if (!std::isfinite(trial_loss)) fail(ErrorCode::DivergedLoss, "loss became non-finite");
      if (trial_loss <= loss) {
        out.weights = std::move(trial);
        loss = trial_loss;
        grad = std::move(trial_grad);
        stepped = true;
        break;
      }
    }
    out.loss_trace.push_back(loss);
    if (!stepped) break;
  }
  return out;
}

inline LearnResult learn_weights(const LearnConfig& cfg, const std::vector<LabeledSpectrum>& spectra) {
  return learn_weights(cfg, spectra, WeightParams::random_init(cfg.k, cfg.seed));
}

}  // namespace procrustes
