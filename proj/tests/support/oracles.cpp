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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace embsense::testing {

std::vector<double> OracleRanks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1;
      if (v[j] == v[i]) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double OraclePearson(const std::vector<double>& a, const std::vector<double>& b) {
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

double OracleAuc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

namespace {

double RhoAt(const stats::Matrix& x, const std::vector<double>& y, double th,
             std::vector<double>& proj) {
  const double c = std::cos(th), s = std::sin(th);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    proj[i] = c * x(i, 0) + s * x(i, 1);
  }
  return std::abs(OraclePearson(proj, y));
}

}  // namespace

double AngleGridRho(const stats::Matrix& x, const std::vector<double>& y,
                    double step) {
  double best = 0;
  std::vector<double> proj(x.rows());
  for (double th = 0; th < std::numbers::pi; th += step) {
    best = std::max(best, RhoAt(x, y, th, proj));
  }
  return best;
}

double AngleSearchRho(const stats::Matrix& x, const std::vector<double>& y) {
  constexpr double kStep = 1e-3;
  std::vector<double> proj(x.rows());
  double best = -1, best_th = 0;
  for (double th = 0; th < std::numbers::pi; th += kStep) {
    const double r = RhoAt(x, y, th, proj);
    if (r > best) {
      best = r;
      best_th = th;
    }
  }
  // |rho| is unimodal near its maximum; refine inside one grid cell each side.
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double lo = best_th - kStep, hi = best_th + kStep;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = RhoAt(x, y, a, proj), fb = RhoAt(x, y, b, proj);
  for (int it = 0; it < 80; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = RhoAt(x, y, b, proj);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = RhoAt(x, y, a, proj);
    }
  }
  return std::max({best, fa, fb});
}

double OracleMagnitudeDb(const dsp::FilterSections& sos, double f, double fs) {
  const std::complex<double> z1 =
      std::polar(1.0, -2 * std::numbers::pi * f / fs);
  std::complex<double> h = 1.0;
  for (const dsp::Biquad& s : sos) {
    h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z1 * z1) /
         (s.a[0] + s.a[1] * z1 + s.a[2] * z1 * z1);
  }
  return 20 * std::log10(std::abs(h));
}

}  // namespace embsense::testing
