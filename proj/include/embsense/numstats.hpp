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

// Numerical primitives shared by the sensitivity analysis and the
// desensitization estimators. Single-threaded, fixed evaluation order.

#ifndef EMBSENSE_NUMSTATS_HPP_
#define EMBSENSE_NUMSTATS_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace embsense::stats {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Ranks 1..n; tied values share the average of the positions they cover.
std::vector<double> RankTransform(std::span<const double> values);

// Throws kDegenerateInput when either side is constant.
double Pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of the rank transforms. Needs n >= 3.
double Spearman(std::span<const double> a, std::span<const double> b);

// A non-increasing list of non-negative values and the same list divided by
// its first element (all zeros when the first element is zero).
struct SpectrumReport {
  std::vector<double> values;
  std::vector<double> normalized;

  static SpectrumReport FromValues(std::vector<double> values);

  // Treats `values` as singular values: the smallest k whose leading squared
  // values reach `mass_fraction` of the total squared mass. 0 when empty or
  // all-zero.
  int EffectiveDimension(double mass_fraction = 0.9) const;
};

struct SvdResult {
  Matrix u;  // rows x k, column-orthonormal
  SpectrumReport s;
  Matrix v;  // cols x k, column-orthonormal
};

// Thin SVD, k = min(rows, cols). Each right singular vector is sign-fixed so
// its largest-magnitude entry is positive.
SvdResult Svd(const Matrix& m);

struct PcaResult {
  Matrix components;  // k x d, orthonormal rows
  SpectrumReport variances;  // squared singular values / (N - 1)
  Vector mean;
};

// PCA of the rows of `x` (N >= 2) after column-mean centering.
PcaResult Pca(const Matrix& x);

struct CcaResult {
  Vector direction;  // unit vector u
  int sign = 1;      // a in {-1, +1}
  double rho = 0.0;  // Pearson corr(u^T x, a y) >= 0
  double r2 = 0.0;   // squared Spearman corr(u^T x, y)
  // u^T x per row, near-ties merged as described below.
  std::vector<double> projections;
};

// Single-target CCA between the rows of `x` and the scalar `y`:
//
//   u  ~  (Xc^T Xc + lambda I)^+ Xc^T yc,   lambda = ridge * tr(Xc^T Xc) / d
//
// solved in the row space of the centered data via its thin SVD. ridge = 0
// gives the minimum-norm least-squares direction, which attains rho = 1
// whenever yc lies in the column space of Xc (e.g. N - 1 <= rank). rho uses
// the exact projections. For r2 (and the returned projections), values within
// 1e-9 of their range of each other are merged into ties.
//
// Singular values at or below rcond * s_max are treated as zero; rcond <= 0
// selects max(N, d) * double epsilon.
CcaResult CcaSingleTarget(const Matrix& x, std::span<const double> y,
                          double ridge = 0.0, double rcond = 0.0);

struct LdaResult {
  Vector w;        // unit discriminant direction, w^T mu1 > w^T mu0
  double c = 0.0;  // w^T (mu0 + mu1) / 2
};

// Two-class Fisher LDA with pooled covariance regularized by
// 1e-6 * trace / d. Each class needs at least two rows.
LdaResult LdaTwoClass(const Matrix& x0, const Matrix& x1);

// Modified Gram-Schmidt (two passes) over the rows of `dirs`. A row whose
// residual falls to 1e-10 of its own norm is dropped; the result has one row
// per retained direction and may be empty.
Matrix Orthonormalize(const Matrix& dirs);

// Each row x -> x - sum_k <x, b_k> b_k for the orthonormal rows b_k of
// `basis`. An empty basis is the identity.
Matrix ProjectOut(const Matrix& x, const Matrix& basis);

}  // namespace embsense::stats

#endif  // EMBSENSE_NUMSTATS_HPP_
