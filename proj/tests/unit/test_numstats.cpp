/*
 * Copyright 2026 The embsense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "embsense/numstats.hpp"
#include "synthetic.hpp"
#include "oracles.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace embsense {
namespace {

using stats::Matrix;
using stats::Vector;

using testing::AngleGridRho;
using testing::OraclePearson;
using testing::OracleRanks;

std::vector<double> ToStd(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

TEST(RankTransform, StrictlyIncreasing) {
  std::vector<double> v{-40, -20, 0};
  EXPECT_EQ(stats::RankTransform(v), (std::vector<double>{1, 2, 3}));
}

TEST(RankTransform, AverageTies) {
  std::vector<double> v{5, 5, 7};
  EXPECT_EQ(stats::RankTransform(v), (std::vector<double>{1.5, 1.5, 3}));
}

TEST(RankTransform, Permutation) {
  std::vector<double> v{3, 1, 2};
  EXPECT_EQ(stats::RankTransform(v), (std::vector<double>{3, 1, 2}));
}

TEST(RankTransform, RejectsNonFiniteAndEmpty) {
  std::vector<double> bad{1, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_ERROR_CODE(stats::RankTransform(bad), ErrorCode::kInvalidInput);
  std::vector<double> inf{1, std::numeric_limits<double>::infinity()};
  EXPECT_ERROR_CODE(stats::RankTransform(inf), ErrorCode::kInvalidInput);
  EXPECT_ERROR_CODE(stats::RankTransform({}), ErrorCode::kInvalidInput);
}

TEST(RankTransform, MatchesCountingOracleWithTies) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + trial % 13);
    for (double& x : v) x = small(rng);
    EXPECT_EQ(stats::RankTransform(v), OracleRanks(v));
  }
}

TEST(Spearman, CoMonotone) {
  std::vector<double> a{1, 2, 3}, b{10, 20, 30};
  EXPECT_DOUBLE_EQ(stats::Spearman(a, b), 1.0);
}

TEST(Spearman, AntiMonotone) {
  std::vector<double> a{1, 2, 3}, b{30, 20, 10};
  EXPECT_DOUBLE_EQ(stats::Spearman(a, b), -1.0);
}

TEST(Spearman, MatchesRankPearsonOracle) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> small(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(7), b(7);
    for (int i = 0; i < 7; ++i) {
      a[i] = trial % 2 ? g(rng) : small(rng);
      b[i] = g(rng);
    }
    if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; })) {
      continue;
    }
    double oracle = OraclePearson(OracleRanks(a), OracleRanks(b));
    EXPECT_NEAR(stats::Spearman(a, b), oracle, 1e-12);
  }
}

TEST(Spearman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> x(25), y(25), ex(25);
  for (int i = 0; i < 25; ++i) {
    x[i] = g(rng);
    y[i] = x[i] + g(rng);
    ex[i] = std::exp(x[i]);
  }
  EXPECT_DOUBLE_EQ(stats::Spearman(x, y), stats::Spearman(ex, y));
}

TEST(Spearman, ConstantInputIsDegenerate) {
  std::vector<double> a{1, 1, 1}, b{1, 2, 3};
  EXPECT_ERROR_CODE(stats::Spearman(a, b), ErrorCode::kDegenerateInput);
  EXPECT_ERROR_CODE(stats::Spearman(b, a), ErrorCode::kDegenerateInput);
}

TEST(Spearman, RejectsShortOrMismatched) {
  std::vector<double> a{1, 2}, b{2, 1}, c{1, 2, 3};
  EXPECT_ERROR_CODE(stats::Spearman(a, b), ErrorCode::kInvalidInput);
  EXPECT_ERROR_CODE(stats::Spearman(a, c), ErrorCode::kDimensionMismatch);
}

TEST(Spectrum, NormalizedAndEffectiveDimension) {
  auto s = stats::SpectrumReport::FromValues({4, 2, 1});
  EXPECT_EQ(s.normalized, (std::vector<double>{1, 0.5, 0.25}));
  // Squared mass 16, 4, 1: 16/21 < 0.9 <= 20/21.
  EXPECT_EQ(s.EffectiveDimension(), 2);
  EXPECT_EQ(stats::SpectrumReport::FromValues({1, 0, 0}).EffectiveDimension(), 1);
  EXPECT_EQ(stats::SpectrumReport::FromValues({}).EffectiveDimension(), 0);
  EXPECT_EQ(stats::SpectrumReport::FromValues({0, 0}).EffectiveDimension(), 0);
  std::vector<double> flat(10, 1.0);
  EXPECT_EQ(stats::SpectrumReport::FromValues(flat).EffectiveDimension(), 9);
}

TEST(Svd, Diagonal) {
  Matrix m = Vector::LinSpaced(3, 3, 1).asDiagonal();
  auto r = stats::Svd(m);
  ASSERT_EQ(r.s.values.size(), 3u);
  EXPECT_NEAR(r.s.values[0], 3, 1e-14);
  EXPECT_NEAR(r.s.values[1], 2, 1e-14);
  EXPECT_NEAR(r.s.values[2], 1, 1e-14);
}

TEST(Svd, RankOne) {
  Vector u(4), v(3);
  u << 1, -2, 0.5, 3;
  v << 2, 1, -1;
  auto r = stats::Svd(u * v.transpose());
  EXPECT_NEAR(r.s.values[0], u.norm() * v.norm(), 1e-12);
  EXPECT_LT(r.s.values[1], 1e-12);
  EXPECT_LT(r.s.values[2], 1e-12);
}

TEST(Svd, MatchesGramEigenvaluesAndReconstructs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = testing::RandomGaussian(6, 4, rng);
    auto r = stats::Svd(m);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m);
    Vector ev = eig.eigenvalues().cwiseMax(0).cwiseSqrt().reverse();
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.s.values[k], ev[k], 1e-8);
    Matrix rec = r.u * Vector::Map(r.s.values.data(), 4).asDiagonal() *
                 r.v.transpose();
    EXPECT_LT((rec - m).norm() / m.norm(), 1e-6);
    EXPECT_LT((r.u.transpose() * r.u - Matrix::Identity(4, 4)).norm(), 1e-8);
    EXPECT_LT((r.v.transpose() * r.v - Matrix::Identity(4, 4)).norm(), 1e-8);
    for (int k = 0; k < 4; ++k) {
      Eigen::Index at;
      r.v.col(k).cwiseAbs().maxCoeff(&at);
      EXPECT_GT(r.v(at, k), 0.0);
    }
  }
}

TEST(Pca, TwoPoints) {
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 0, 3;
  auto p = stats::Pca(x);
  EXPECT_GT(p.variances.values[0], 0);
  for (std::size_t k = 1; k < p.variances.values.size(); ++k) {
    EXPECT_LT(p.variances.values[k], 1e-24);
  }
  Vector diff = (x.row(1) - x.row(0)).transpose().normalized();
  EXPECT_NEAR(std::abs(p.components.row(0).dot(diff)), 1.0, 1e-12);
}

TEST(Pca, IsotropicVariancesClose) {
  std::mt19937_64 rng(1);
  auto p = stats::Pca(testing::RandomGaussian(1000, 3, rng));
  // Population variance is 1 along every axis.
  for (double v : p.variances.values) EXPECT_NEAR(v, 1.0, 0.15);
}

TEST(Pca, DuplicatedColumnsGiveEqualLoadings) {
  std::mt19937_64 rng(8);
  Matrix base = testing::RandomGaussian(30, 2, rng);
  Matrix x(30, 3);
  x.col(0) = base.col(0);
  x.col(1) = base.col(0);
  x.col(2) = base.col(1);
  auto p = stats::Pca(x);
  for (Eigen::Index k = 0; k < p.components.rows(); ++k) {
    if (p.variances.values[k] < 1e-12) continue;
    EXPECT_NEAR(std::abs(p.components(k, 0)), std::abs(p.components(k, 1)),
                1e-9);
  }
}

TEST(Pca, VarianceSumAndOrdering) {
  std::mt19937_64 rng(4);
  Matrix x = testing::RandomGaussian(15, 6, rng);
  x.col(2) *= 5;
  auto p = stats::Pca(x);
  Matrix c = x.rowwise() - x.colwise().mean();
  double total = c.squaredNorm() / 14;
  double sum = 0;
  for (std::size_t k = 0; k < p.variances.values.size(); ++k) {
    EXPECT_GE(p.variances.values[k], 0);
    if (k > 0) EXPECT_LE(p.variances.values[k], p.variances.values[k - 1]);
    sum += p.variances.values[k];
  }
  EXPECT_NEAR(sum, total, 1e-8 * total);
  Matrix gram = p.components * p.components.transpose();
  EXPECT_LT((gram - Matrix::Identity(gram.rows(), gram.cols())).norm(), 1e-10);
  EXPECT_ERROR_CODE(stats::Pca(x.topRows(1)), ErrorCode::kInvalidInput);
}

TEST(Cca, ExactLinearTrajectory) {
  Vector v(5), c(5);
  v << 1, -2, 0.5, 3, 1;
  c << 0.3, 0.1, -4, 2, 0;
  Matrix x(8, 5);
  std::vector<double> y(8);
  for (int i = 0; i < 8; ++i) {
    double t = 2.5 * i - 1;
    x.row(i) = (t * v + c).transpose();
    y[i] = i;
  }
  auto r = stats::CcaSingleTarget(x, y);
  EXPECT_NEAR(r.rho, 1.0, 1e-12);
  EXPECT_NEAR(r.r2, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(r.direction.dot(v.normalized())), 1.0, 1e-12);
  EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
}


TEST(Cca, MatchesAngleGridSearchInTwoDimensions) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x = testing::RandomGaussian(30, 2, rng);
    x.col(1) *= 0.3 + trial * 0.2;
    std::vector<double> y(30);
    for (int i = 0; i < 30; ++i) y[i] = x(i, 0) - 0.7 * x(i, 1) + g(rng);
    auto r = stats::CcaSingleTarget(x, y);
    EXPECT_NEAR(r.rho, AngleGridRho(x, y), 1e-6);
  }
}

TEST(Cca, SignMakesCorrelationNonNegative) {
  std::mt19937_64 rng(2);
  Matrix x = testing::RandomGaussian(20, 3, rng);
  std::vector<double> y(20);
  for (int i = 0; i < 20; ++i) y[i] = -x(i, 1) + 0.1 * x(i, 2);
  auto r = stats::CcaSingleTarget(x, y);
  std::vector<double> ay(y);
  for (double& v : ay) v *= r.sign;
  EXPECT_GE(OraclePearson(r.projections, ay), 0.0);
  EXPECT_NEAR(OraclePearson(r.projections, ay), r.rho, 1e-12);
  EXPECT_NEAR(r.r2, std::pow(stats::Spearman(r.projections, y), 2), 1e-12);
}

TEST(Cca, AffineTargetInvariance) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Matrix x = testing::RandomGaussian(40, 4, rng);
  std::vector<double> y(40), y2(40), y3(40);
  for (int i = 0; i < 40; ++i) {
    y[i] = x(i, 0) + 0.5 * x(i, 3) + g(rng);
    y2[i] = 3.5 * y[i] + 7;
    y3[i] = -0.2 * y[i] - 1;
  }
  auto a = stats::CcaSingleTarget(x, y);
  auto b = stats::CcaSingleTarget(x, y2);
  auto c = stats::CcaSingleTarget(x, y3);
  EXPECT_NEAR(a.rho, b.rho, 1e-12);
  EXPECT_NEAR(a.rho, c.rho, 1e-12);
  EXPECT_NEAR(std::abs(a.direction.dot(b.direction)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(a.direction.dot(c.direction)), 1.0, 1e-12);
}

TEST(Cca, RowSpaceRegimeGivesUnitCorrelation) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    int n = 4 + trial % 10;
    Matrix x = testing::RandomGaussian(n, n + 5, rng);
    std::vector<double> y(n);
    for (double& v : y) v = g(rng);
    EXPECT_NEAR(stats::CcaSingleTarget(x, y).rho, 1.0, 1e-6);
  }
}

TEST(Cca, RidgeShrinksCorrelationInOverfitRegime) {
  std::mt19937_64 rng(6);
  Matrix x = testing::RandomGaussian(6, 20, rng);
  std::vector<double> y{0, 1, 2, 3, 4, 5};
  double r0 = stats::CcaSingleTarget(x, y, 0.0).rho;
  double r1 = stats::CcaSingleTarget(x, y, 10.0).rho;
  EXPECT_NEAR(r0, 1.0, 1e-9);
  EXPECT_LT(r1, r0);
}

TEST(Cca, Errors) {
  std::mt19937_64 rng(1);
  Matrix x = testing::RandomGaussian(5, 3, rng);
  std::vector<double> flat(5, 2.0);
  EXPECT_ERROR_CODE(stats::CcaSingleTarget(x, flat), ErrorCode::kDegenerateInput);
  std::vector<double> y{1, 2, 3, 4, 5};
  EXPECT_ERROR_CODE(stats::CcaSingleTarget(x, y, -1.0),
                    ErrorCode::kInvalidParameter);
  EXPECT_ERROR_CODE(stats::CcaSingleTarget(x, y, 0.0, 1.0),
                    ErrorCode::kInvalidParameter);
  EXPECT_ERROR_CODE(stats::CcaSingleTarget(x.topRows(2), std::vector<double>{1, 2}),
                    ErrorCode::kInvalidInput);
  EXPECT_ERROR_CODE(stats::CcaSingleTarget(x, std::vector<double>{1, 2, 3}),
                    ErrorCode::kDimensionMismatch);
  Matrix same = Matrix::Ones(5, 3);
  EXPECT_ERROR_CODE(stats::CcaSingleTarget(same, y),
                    ErrorCode::kDegenerateGeometry);
}

TEST(Cca, Deterministic) {
  std::mt19937_64 rng(12);
  Matrix x = testing::RandomGaussian(12, 30, rng);
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  auto a = stats::CcaSingleTarget(x, y);
  auto b = stats::CcaSingleTarget(x, y);
  EXPECT_TRUE(a.direction == b.direction);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.r2, b.r2);
}

TEST(Lda, SymmetricClusters) {
  // Exactly symmetric about x = 0.5 with identical spread in each axis.
  Matrix x0(4, 2), x1(4, 2);
  x0 << -1, -1, -1, 1, 1, -1, 1, 1;
  x1 = x0;
  x1.col(0).array() += 1;
  auto r = stats::LdaTwoClass(x0, x1);
  EXPECT_NEAR(r.w[0], 1.0, 1e-12);
  EXPECT_NEAR(r.w[1], 0.0, 1e-12);
  EXPECT_NEAR(r.c, 0.5, 1e-12);
}

// Rows with sample covariance exactly `chol * chol^T` around `mean`.
Matrix ExactCovarianceCloud(int n, const Vector& mean, const Matrix& chol,
                            std::mt19937_64& rng) {
  Matrix z = testing::RandomGaussian(n, mean.size(), rng);
  z = z.rowwise() - z.colwise().mean();
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, mean.size());
  q *= std::sqrt(n - 1.0);
  return (q * chol.transpose()).rowwise() + mean.transpose();
}

TEST(Lda, MatchesClosedFormWithKnownCovariance) {
  std::mt19937_64 rng(14);
  const int d = 4;
  Matrix a = testing::RandomGaussian(d, d, rng);
  Matrix sigma = a * a.transpose() + 0.5 * Matrix::Identity(d, d);
  Matrix chol = sigma.llt().matrixL();
  Vector mu0 = Vector::Zero(d), mu1(d);
  mu1 << 1, -0.5, 2, 0.3;
  Matrix x0 = ExactCovarianceCloud(50, mu0, chol, rng);
  Matrix x1 = ExactCovarianceCloud(70, mu1, chol, rng);
  Vector oracle = sigma.ldlt().solve(mu1 - mu0).normalized();
  auto r = stats::LdaTwoClass(x0, x1);
  EXPECT_LT(1.0 - r.w.dot(oracle), 1e-6);
  EXPECT_NEAR(r.w.norm(), 1.0, 1e-12);
  EXPECT_GT(r.w.dot(mu1), r.w.dot(mu0));
  EXPECT_NEAR(r.c, r.w.dot(mu0 + mu1) / 2, 1e-12);
}

TEST(Lda, IdenticalClassesAreDegenerate) {
  std::mt19937_64 rng(3);
  Matrix x = testing::RandomGaussian(6, 3, rng);
  EXPECT_ERROR_CODE(stats::LdaTwoClass(x, x), ErrorCode::kDegenerateGeometry);
  EXPECT_ERROR_CODE(stats::LdaTwoClass(x.topRows(1), x),
                    ErrorCode::kInvalidInput);
}

TEST(Lda, WorksWhenDimensionExceedsSamples) {
  std::mt19937_64 rng(23);
  Matrix x0 = testing::RandomGaussian(5, 40, rng);
  Matrix x1 = testing::RandomGaussian(5, 40, rng);
  x1.col(0).array() += 3;
  auto r = stats::LdaTwoClass(x0, x1);
  EXPECT_NEAR(r.w.norm(), 1.0, 1e-12);
  EXPECT_GT(r.w.dot(x1.colwise().mean().transpose()),
            r.w.dot(x0.colwise().mean().transpose()));
}

TEST(Orthonormalize, DropsDuplicate) {
  Matrix d(2, 3);
  d << 1, 0, 0, 1, 0, 0;
  Matrix b = stats::Orthonormalize(d);
  ASSERT_EQ(b.rows(), 1);
  EXPECT_NEAR(std::abs(b(0, 0)), 1.0, 1e-15);
}

TEST(Orthonormalize, TwoVectors) {
  Matrix d(2, 3);
  d << 1, 0, 0, 1, 1, 0;
  Matrix b = stats::Orthonormalize(d);
  ASSERT_EQ(b.rows(), 2);
  EXPECT_NEAR(std::abs(b(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(b(1, 1)), 1.0, 1e-15);
}

TEST(Orthonormalize, RandomGramIsIdentityAndSpanKept) {
  std::mt19937_64 rng(19);
  Matrix d = testing::RandomGaussian(5, 8, rng);
  Matrix b = stats::Orthonormalize(d);
  ASSERT_EQ(b.rows(), 5);
  EXPECT_LT((b * b.transpose() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_LT(stats::ProjectOut(d, b).norm(), 1e-10 * d.norm());
}

TEST(Orthonormalize, AllZeroGivesEmpty) {
  EXPECT_EQ(stats::Orthonormalize(Matrix::Zero(3, 4)).rows(), 0);
}

TEST(ProjectOut, Examples) {
  std::mt19937_64 rng(27);
  Matrix x = testing::RandomGaussian(1, 6, rng);
  Matrix self = x / x.norm();
  EXPECT_LT(stats::ProjectOut(x, self).norm(), 1e-9 * x.norm());

  Matrix basis = Matrix::Zero(2, 6);
  basis(0, 0) = 1;
  basis(1, 1) = 1;
  Matrix orth = testing::RandomGaussian(3, 6, rng);
  orth.leftCols(2).setZero();
  EXPECT_LT((stats::ProjectOut(orth, basis) - orth).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_ERROR_CODE(stats::ProjectOut(orth, Matrix::Identity(2, 2)),
                    ErrorCode::kDimensionMismatch);
  EXPECT_TRUE(stats::ProjectOut(orth, Matrix(0, 6)) == orth);
}

TEST(ProjectOut, IdempotentAndNonExpanding) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x = testing::RandomGaussian(10, 9, rng);
    Matrix b = stats::Orthonormalize(testing::RandomGaussian(1 + trial % 5, 9, rng));
    Matrix once = stats::ProjectOut(x, b);
    Matrix twice = stats::ProjectOut(once, b);
    EXPECT_LT((once - twice).cwiseAbs().maxCoeff(), 1e-9);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_LE(once.row(i).norm(), x.row(i).norm() * (1 + 1e-12));
    }
  }
}

}  // namespace
}  // namespace embsense
