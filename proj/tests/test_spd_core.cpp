#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "procrustes/spd_core.hpp"
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

}  // namespace

TEST(SymEig, IdentityHasUnitEigenvalues) {
  const Spectrum s = sym_eig(Matrix::Identity(3, 3));
  EXPECT_TRUE(s.values.isApprox(Vector::Ones(3)));
  EXPECT_LE(max_abs(s.vectors.transpose() * s.vectors - Matrix::Identity(3, 3)), 1e-10);
}

TEST(SymEig, DiagonalSortedDescendingWithUnitVectors) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 3.0;
  const Spectrum s = sym_eig(a);
  EXPECT_DOUBLE_EQ(s.values(0), 3.0);
  EXPECT_DOUBLE_EQ(s.values(1), 1.0);
  EXPECT_NEAR(std::abs(s.vectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(s.vectors(0, 1)), 1.0, 1e-14);
}

TEST(SymEig, RecoversKnownFactors) {
  CounterRng rng(1);
  const Matrix q = random_orthogonal(5, rng);
  Vector lambda(5);
  lambda << 7.0, 3.5, 2.0, 0.4, -1.25;
  const Spectrum s = sym_eig(from_eigen(q, lambda));
  EXPECT_LE((s.values - lambda).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(max_abs(s.reconstruct() - from_eigen(q, lambda)), 1e-8 * max_abs(from_eigen(q, lambda)));
}

TEST(SymEig, SignConventionAndDeterminism) {
  CounterRng rng(2);
  const Matrix a = random_spd(6, rng).matrix();
  const Spectrum s1 = sym_eig(a), s2 = sym_eig(a);
  EXPECT_EQ(s1.values, s2.values);
  EXPECT_EQ(s1.vectors, s2.vectors);
  for (Index j = 0; j < 6; ++j) {
    Index arg = 0;
    s1.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GE(s1.vectors(arg, j), 0.0);
  }
  for (Index i = 0; i + 1 < 6; ++i) EXPECT_GE(s1.values(i), s1.values(i + 1));
}

TEST(SymEig, RejectsAsymmetricInput) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = 1e-6;
  EXPECT_EQ(code_of([&] { (void)sym_eig(a); }), ErrorCode::NotSymmetric);
}

TEST(SpdMatrix, ValidationAndClipping) {
  Matrix a = Matrix::Identity(2, 2);
  a(1, 1) = -1e-13;  // within tolerance of ‖A‖₂ = 1
  const SpdMatrix s(a);
  EXPECT_EQ(s.spectrum().min_value(), 0.0);
  EXPECT_GE(s.matrix()(1, 1), 0.0);

  a(1, 1) = -1e-3;
  EXPECT_EQ(code_of([&] { SpdMatrix bad(a); }), ErrorCode::NotPositiveSemidefinite);

  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_EQ(code_of([&] { SpdMatrix bad(asym); }), ErrorCode::NotSymmetric);
  EXPECT_EQ(code_of([&] { SpdMatrix bad(Matrix::Identity(2, 3)); }), ErrorCode::DimensionMismatch);
}

TEST(SpdPower, DiagonalSquareRoot) {
  Vector d(2);
  d << 4.0, 9.0;
  const SpdMatrix r = spd_power(SpdMatrix::diagonal(d), 0.5);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(SpdPower, IdentityAndZeroExponent) {
  CounterRng rng(3);
  const SpdMatrix a = random_spd(4, rng);
  EXPECT_LE(max_abs(spd_power(a, 1.0).matrix() - a.matrix()), 1e-14);
  EXPECT_LE(max_abs(spd_power(a, 0.0).matrix() - Matrix::Identity(4, 4)), 0.0);
}

TEST(SpdPower, SquareRootSquaresBack) {
  CounterRng rng(4);
  for (int t = 0; t < 10; ++t) {
    const SpdMatrix a = random_spd(4, rng);
    const Matrix r = spd_sqrt(a).matrix();
    EXPECT_LE(max_abs(r * r - a.matrix()), 1e-9);
  }
}

TEST(SpdPower, InverseExponentsCancel) {
  CounterRng rng(5);
  for (int t = 0; t < 20; ++t) {
    const SpdMatrix a = random_spd(2 + t % 5, rng);
    for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0}) {
      const Matrix p = spd_power(a, alpha).matrix() * spd_power(a, -alpha).matrix();
      EXPECT_LE(max_abs(p - Matrix::Identity(a.dim(), a.dim())), 1e-8) << "alpha " << alpha;
    }
  }
}

TEST(SpdPower, NegativePowerOfSingularFails) {
  Vector d(2);
  d << 1.0, 0.0;
  EXPECT_EQ(code_of([&] { (void)spd_power(SpdMatrix::diagonal(d), -0.5); }), ErrorCode::SingularMatrix);
  EXPECT_NO_THROW((void)spd_power(SpdMatrix::diagonal(d), 0.5));
}

TEST(SpdLog, IdentityAndScalarLogs) {
  EXPECT_LE(max_abs(spd_log(SpdMatrix::identity(3))), 1e-15);
  Vector d(2);
  d << std::numbers::e, std::exp(2.0);
  const Matrix l = spd_log(SpdMatrix::diagonal(d));
  EXPECT_NEAR(l(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(l(1, 1), 2.0, 1e-14);
}

// Matrix exponential by scaling and squaring of a Taylor series, independent
// of the eigendecomposition used by the library.
Matrix expm_taylor(const Matrix& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.25) {
    norm *= 0.5;
    ++squarings;
  }
  const Matrix s = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols()), sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * s / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

TEST(SpdLog, ExpLogRoundTrip) {
  CounterRng rng(6);
  for (int t = 0; t < 10; ++t) {
    const SpdMatrix a = random_spd(4, rng);
    EXPECT_LE(max_abs(expm_taylor(spd_log(a)) - a.matrix()), 1e-9);
    EXPECT_LE(max_abs(sym_exp(spd_log(a)).matrix() - a.matrix()), 1e-9);
  }
}

TEST(SpdLog, PowerScalesLog) {
  CounterRng rng(7);
  for (int t = 0; t < 20; ++t) {
    const SpdMatrix a = random_spd(2 + t % 5, rng);
    for (double alpha : {-1.0, -0.5, 0.5, 2.0})
      EXPECT_LE(max_abs(spd_log(spd_power(a, alpha)) - alpha * spd_log(a)), 1e-8);
  }
}

TEST(SpdLog, SingularFails) {
  Vector d(2);
  d << 1.0, 0.0;
  EXPECT_EQ(code_of([&] { (void)spd_log(SpdMatrix::diagonal(d)); }), ErrorCode::SingularMatrix);
}

TEST(PolarFactor, OrthogonalAndSpdInputs) {
  CounterRng rng(8);
  const Matrix o = random_orthogonal(3, rng);
  EXPECT_LE(max_abs(orthogonal_polar_factor(o) - o), 1e-12);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 3.0;
  EXPECT_LE(max_abs(orthogonal_polar_factor(d) - Matrix::Identity(2, 2)), 1e-14);
}

TEST(PolarFactor, BeatsSampledOrthogonalMatrices) {
  CounterRng rng(9);
  for (Index n = 2; n <= 4; ++n) {
    const Matrix q = gaussian(n, n, rng);
    const Matrix u = orthogonal_polar_factor(q);
    EXPECT_LE(max_abs(u.transpose() * u - Matrix::Identity(n, n)), 1e-10);
    const Matrix p = u.transpose() * q;  // symmetric PSD factor
    EXPECT_LE(max_abs(p - p.transpose()), 1e-10);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (p + p.transpose())).eigenvalues().minCoeff(), -1e-10);
    const double best = (u.transpose() * q).trace();
    const int samples = n == 3 ? 100000 : 10000;
    double sampled = -1e300;
    for (int s = 0; s < samples; ++s) sampled = std::max(sampled, (random_orthogonal(n, rng).transpose() * q).trace());
    EXPECT_GE(best, sampled - 1e-12);
  }
}

TEST(PolarFactor, RankDeficientRejected) {
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 1.0;
  EXPECT_EQ(code_of([&] { (void)orthogonal_polar_factor(q); }), ErrorCode::RankDeficient);
}

TEST(MetricWeight, InvariantsAndErrors) {
  EXPECT_EQ(code_of([] { (void)MetricWeight::diagonal(Vector::Zero(3), 0.0); }), ErrorCode::InvalidWeight);
  EXPECT_EQ(code_of([] { (void)MetricWeight::diagonal(-Vector::Ones(2), 5.0); }), ErrorCode::InvalidWeight);
  Vector d(2);
  d << 1.0, 0.0;
  EXPECT_EQ(code_of([&] { (void)MetricWeight::full(SpdMatrix::diagonal(d)); }), ErrorCode::SingularMatrix);
  EXPECT_NO_THROW((void)MetricWeight::full(SpdMatrix::diagonal(d), 0.5));
  const MetricWeight w = MetricWeight::diagonal(Vector::Ones(2), 1.0);
  EXPECT_TRUE(w.effective_eigenvalues().isApprox(2.0 * Vector::Ones(2)));
  EXPECT_TRUE(w.inverse(2).isApprox(0.5 * Matrix::Identity(2, 2)));
}

TEST(MahalanobisNorm, Examples) {
  CounterRng rng(10);
  const SpdMatrix m = random_spd(3, rng);
  EXPECT_EQ(mahalanobis_norm(Matrix::Zero(3, 3), MetricWeight::full(m)), 0.0);
  const Matrix x = gaussian(3, 3, rng);
  EXPECT_NEAR(mahalanobis_norm(x, MetricWeight::identity(3)), x.norm(), 1e-13);
  Matrix two(1, 1), four(1, 1);
  two << 2.0;
  four << 4.0;
  EXPECT_NEAR(mahalanobis_norm(two, MetricWeight::full(SpdMatrix(four))), 1.0, 1e-15);
}

TEST(MahalanobisNorm, NormAxioms) {
  CounterRng rng(11);
  for (int t = 0; t < 100; ++t) {
    const Index n = 2 + t % 4;
    const MetricWeight w = MetricWeight::full(random_spd(n, rng));
    const Matrix a = gaussian(n, n, rng), b = gaussian(n, n, rng);
    const double s = rng.uniform(-3.0, 3.0);
    EXPECT_NEAR(mahalanobis_norm(s * a, w), std::abs(s) * mahalanobis_norm(a, w), 1e-10);
    EXPECT_LE(mahalanobis_norm(a + b, w), mahalanobis_norm(a, w) + mahalanobis_norm(b, w) + 1e-10);
    EXPECT_GT(mahalanobis_norm(a, w), 0.0);
  }
}

TEST(MahalanobisNorm, DiagonalFormMatchesDense) {
  CounterRng rng(12);
  Vector omega(3);
  omega << 0.5, 2.0, 4.0;
  const Matrix x = gaussian(3, 3, rng);
  const double dense = mahalanobis_norm(x, MetricWeight::full(SpdMatrix::diagonal(omega.array() + 1.0)));
  EXPECT_NEAR(mahalanobis_norm(x, MetricWeight::diagonal(omega, 1.0)), dense, 1e-13);
}

TEST(ExtendedNorm, Examples) {
  const ExtendedOperator zero(Vector::Zero(4), 0.0);
  EXPECT_EQ(extended_mahalanobis_norm(zero, MetricWeight::diagonal(Vector::Ones(4), 1.0)), 0.0);
  Vector one(1);
  one << 1.0;
  EXPECT_NEAR(extended_mahalanobis_norm(ExtendedOperator(one, 0.0), MetricWeight::diagonal(Vector::Zero(1), 1.0)), 1.0,
              1e-15);
}

TEST(ExtendedNorm, HomogeneityInWeights) {
  Vector lambda(3), omega(3);
  lambda << 3.0, 1.0, 0.5;
  omega << 1.0, 2.0, 3.0;
  const ExtendedOperator t(lambda, 0.1);
  const double rho = 0.5, s = 3.0;
  const double base = extended_mahalanobis_norm(t, MetricWeight::diagonal(omega, rho));
  // (ω + ρ)·s² = (s²ω) + (s²ρ)
  const double scaled = extended_mahalanobis_norm(t, MetricWeight::diagonal(s * s * omega, s * s * rho));
  EXPECT_NEAR(scaled, base / s, 1e-14);
}

TEST(ExtendedNorm, ReducesToMahalanobisOnFullSpectrum) {
  CounterRng rng(13);
  Vector lambda(4);
  lambda << 4.0, 2.0, 1.0, 0.5;
  Vector omega(4);
  omega << 1.0, 2.0, 0.5, 3.0;
  // Jointly diagonal X and M: the extended norm is the Mahalanobis norm.
  const double dense = mahalanobis_norm(Matrix(lambda.asDiagonal()), MetricWeight::diagonal(omega, 0.0));
  const double ext = extended_mahalanobis_norm(ExtendedOperator(lambda, 0.0), MetricWeight::diagonal(omega, 0.0));
  EXPECT_NEAR(ext, dense, 1e-13);
}

TEST(ExtendedNorm, Errors) {
  EXPECT_EQ(code_of([] { (void)extended_mahalanobis_norm(ExtendedOperator(Vector::Ones(3), 0.0),
                                                         MetricWeight::diagonal(Vector::Ones(2), 1.0)); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { ExtendedOperator bad(-Vector::Ones(2), 0.5); }), ErrorCode::NonPositiveShiftedEigenvalue);
  Vector up(2);
  up << 1.0, 2.0;
  EXPECT_EQ(code_of([&] { ExtendedOperator bad(up, 0.0); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { ExtendedOperator bad(Vector::Ones(3), 0.0, 2); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { (void)ExtendedOperator::from_matrix(SpdMatrix::identity(2), 3, 0.0); }),
            ErrorCode::IndexOutOfRange);
}
