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

#include "embsense/numstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "embsense/error.hpp"

namespace embsense::stats {

namespace {

void RequireFinite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("{} contains a non-finite value", what));
    }
  }
}

void RequireFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("{} contains a non-finite value", what));
  }
}

Matrix CenterColumns(const Matrix& x) {
  return x.rowwise() - x.colwise().mean();
}

}  // namespace

std::vector<double> RankTransform(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidInput, "cannot rank an empty list");
  }
  RequireFinite(values, "rank input");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // Positions start+1 .. end share their mean.
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

double Pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("correlation of lengths {} and {}", a.size(),
                            b.size()));
  }
  if (a.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "correlation needs two points");
  }
  RequireFinite(a, "correlation input");
  RequireFinite(b, "correlation input");
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::kDegenerateInput,
                "correlation with a constant input is undefined");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double Spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("spearman of lengths {} and {}", a.size(),
                            b.size()));
  }
  if (a.size() < 3) {
    throw Error(ErrorCode::kInvalidInput, "spearman needs at least 3 points");
  }
  const std::vector<double> ra = RankTransform(a);
  const std::vector<double> rb = RankTransform(b);
  return Pearson(ra, rb);
}

SpectrumReport SpectrumReport::FromValues(std::vector<double> values) {
  SpectrumReport report;
  report.values = std::move(values);
  report.normalized.resize(report.values.size(), 0.0);
  if (!report.values.empty() && report.values.front() > 0.0) {
    const double lead = report.values.front();
    for (std::size_t k = 0; k < report.values.size(); ++k) {
      report.normalized[k] = report.values[k] / lead;
    }
    report.normalized.front() = 1.0;
  }
  return report;
}

int SpectrumReport::EffectiveDimension(double mass_fraction) const {
  double total = 0.0;
  for (double v : values) total += v * v;
  if (total <= 0.0) return 0;
  double running = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    running += values[k] * values[k];
    // Relative slack keeps exact-fraction cases (flat spectra) stable.
    if (running >= mass_fraction * total * (1.0 - 1e-12)) {
      return static_cast<int>(k + 1);
    }
  }
  return static_cast<int>(values.size());
}

SvdResult Svd(const Matrix& m) {
  RequireFinite(m, "svd input");
  SvdResult out;
  const Eigen::Index k = std::min(m.rows(), m.cols());
  if (k == 0) {
    out.u = Matrix(m.rows(), 0);
    out.v = Matrix(m.cols(), 0);
    out.s = SpectrumReport::FromValues({});
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = svd.matrixU();
  out.v = svd.matrixV();
  const Vector& s = svd.singularValues();
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    out.v.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.v(arg, j) < 0.0) {
      out.v.col(j) *= -1.0;
      out.u.col(j) *= -1.0;
    }
  }
  out.s = SpectrumReport::FromValues(std::vector<double>(s.data(),
                                                         s.data() + k));
  return out;
}

PcaResult Pca(const Matrix& x) {
  if (x.rows() < 2) {
    throw Error(ErrorCode::kInvalidInput, "pca needs at least two rows");
  }
  PcaResult out;
  out.mean = x.colwise().mean().transpose();
  const SvdResult svd = Svd(CenterColumns(x));
  out.components = svd.v.transpose();
  std::vector<double> variances(svd.s.values.size());
  const double dof = static_cast<double>(x.rows() - 1);
  for (std::size_t k = 0; k < variances.size(); ++k) {
    variances[k] = svd.s.values[k] * svd.s.values[k] / dof;
  }
  out.variances = SpectrumReport::FromValues(std::move(variances));
  return out;
}

namespace {

// Merges values within 1e-9 of the spread of the first member of their run
// into that member.
std::vector<double> SnapTies(std::vector<double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double tol = 1e-9 * (*hi - *lo);
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::size_t start = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (v[order[k]] - v[order[start]] <= tol) {
      v[order[k]] = v[order[start]];
    } else {
      start = k;
    }
  }
  return v;
}

}  // namespace

CcaResult CcaSingleTarget(const Matrix& x, std::span<const double> y,
                          double ridge, double rcond) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("cca with {} rows but {} targets", x.rows(),
                            y.size()));
  }
  if (x.rows() < 3) {
    throw Error(ErrorCode::kInvalidInput, "cca needs at least 3 rows");
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(ErrorCode::kInvalidParameter, "ridge must be >= 0");
  }
  RequireFinite(x, "cca input");
  RequireFinite(y, "cca target");
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymin == *ymax) {
    throw Error(ErrorCode::kDegenerateInput, "cca target is constant");
  }

  const Eigen::Map<const Vector> y_vec(y.data(),
                                       static_cast<Eigen::Index>(y.size()));
  const Vector yc = y_vec.array() - y_vec.mean();
  const Matrix xc = CenterColumns(x);

  Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double s_max = s.size() > 0 ? s(0) : 0.0;
  if (std::isnan(rcond) || rcond >= 1.0) {
    throw Error(ErrorCode::kInvalidParameter, "rcond must be below 1");
  }
  const double rel = rcond > 0.0
                         ? rcond
                         : static_cast<double>(std::max(x.rows(), x.cols())) *
                               std::numeric_limits<double>::epsilon();
  const double tol = rel * s_max;
  const double lambda =
      ridge > 0.0 ? ridge * s.squaredNorm() / static_cast<double>(x.cols())
                  : 0.0;

  Vector coeffs = svd.matrixU().transpose() * yc;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (lambda > 0.0) {
      coeffs(k) *= s(k) / (s(k) * s(k) + lambda);
    } else {
      coeffs(k) = s(k) > tol ? coeffs(k) / s(k) : 0.0;
    }
  }
  Vector direction = svd.matrixV() * coeffs;
  const double fitted_norm = (xc * direction).norm();
  if (!(fitted_norm > 1e-12 * yc.norm()) || direction.norm() == 0.0) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "target is orthogonal to the span of the centered data");
  }
  direction.normalize();

  CcaResult out;
  const Vector z = x * direction;
  const std::vector<double> raw(z.data(), z.data() + z.size());
  const double corr = Pearson(raw, y);
  out.sign = corr >= 0.0 ? 1 : -1;
  out.rho = std::abs(corr);
  out.projections = SnapTies(raw);
  const double spearman = Spearman(out.projections, y);
  out.r2 = spearman * spearman;
  out.direction = std::move(direction);
  return out;
}

LdaResult LdaTwoClass(const Matrix& x0, const Matrix& x1) {
  if (x0.rows() < 2 || x1.rows() < 2) {
    throw Error(ErrorCode::kInvalidInput, "lda needs two rows per class");
  }
  if (x0.cols() != x1.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "lda classes differ in width");
  }
  RequireFinite(x0, "lda input");
  RequireFinite(x1, "lda input");
  const Eigen::Index d = x0.cols();
  const Vector mu0 = x0.colwise().mean().transpose();
  const Vector mu1 = x1.colwise().mean().transpose();
  const Matrix c0 = CenterColumns(x0);
  const Matrix c1 = CenterColumns(x1);
  Matrix pooled = (c0.transpose() * c0 + c1.transpose() * c1) /
                  static_cast<double>(x0.rows() + x1.rows() - 2);
  const double trace = pooled.trace();
  if (!(trace > 0.0)) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "pooled covariance is identically zero");
  }
  pooled.diagonal().array() += 1e-6 * trace / static_cast<double>(d);

  const Vector delta = mu1 - mu0;
  if (delta.squaredNorm() == 0.0) {
    throw Error(ErrorCode::kDegenerateGeometry, "class means coincide");
  }
  Eigen::LLT<Matrix> llt(pooled);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "pooled covariance is singular after regularization");
  }
  Vector w = llt.solve(delta);
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegenerateGeometry, "discriminant vanished");
  }
  w /= norm;
  LdaResult out;
  out.c = w.dot(mu0 + mu1) / 2.0;
  out.w = std::move(w);
  return out;
}

Matrix Orthonormalize(const Matrix& dirs) {
  RequireFinite(dirs, "orthonormalize input");
  std::vector<Vector> basis;
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
    const double input_norm = dirs.row(i).norm();
    if (input_norm == 0.0) continue;
    Vector r = dirs.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) r -= q.dot(r) * q;
    }
    const double residual = r.norm();
    if (residual <= 1e-10 * input_norm) continue;
    basis.push_back(r / residual);
  }
  Matrix out(static_cast<Eigen::Index>(basis.size()), dirs.cols());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = basis[k].transpose();
  }
  return out;
}

Matrix ProjectOut(const Matrix& x, const Matrix& basis) {
  if (basis.rows() == 0) return x;
  if (basis.cols() != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("projecting {}-dim rows out of a {}-dim basis",
                            x.cols(), basis.cols()));
  }
  return x - (x * basis.transpose()) * basis;
}

}  // namespace embsense::stats
