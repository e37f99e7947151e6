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

#include "embsense/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "embsense/error.hpp"
#include "embsense/parallel.hpp"

namespace embsense::sensitivity {

namespace {

nlohmann::json VectorJson(const stats::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json SpectrumJson(const stats::SpectrumReport& s) {
  return {{"values", s.values}, {"normalized", s.normalized}};
}

SensitivityReport RunCca(const TrajectorySet& traj,
                         const std::vector<Eigen::Index>& rows,
                         std::string scope, std::string class_label,
                         double ridge) {
  if (traj.sweep.ActiveIndices().size() < 3) {
    throw Error(ErrorCode::kInvalidInput,
                "sensitivity analysis needs at least 3 non-neutral parameters");
  }
  const StackedSweep stacked = StackEffected(traj, rows);
  // Embeddings are stored as float32; below this the spectrum is rounding.
  const double rcond =
      static_cast<double>(std::max(stacked.x.rows(), stacked.x.cols())) *
      std::numeric_limits<float>::epsilon();
  stats::CcaResult cca =
      stats::CcaSingleTarget(stacked.x, stacked.y, ridge, rcond);

  SensitivityReport report;
  report.scope = std::move(scope);
  report.class_label = std::move(class_label);
  report.effect = traj.sweep.effect;
  report.sign = cca.sign;
  report.rho = cca.rho;
  report.r2 = cca.r2;
  report.scatter.reserve(stacked.y.size());
  for (std::size_t k = 0; k < stacked.y.size(); ++k) {
    report.scatter.emplace_back(cca.projections[k], stacked.y[k]);
  }
  report.direction = std::move(cca.direction);
  return report;
}

}  // namespace

nlohmann::json SensitivityReport::ToJson() const {
  nlohmann::json scatter_json = nlohmann::json::array();
  for (const auto& [proj, y] : scatter) scatter_json.push_back({proj, y});
  return {{"scope", scope},
          {"class", class_label},
          {"effect", dsp::EffectName(effect)},
          {"rho", rho},
          {"r2", r2},
          {"sign", sign},
          {"direction", VectorJson(direction)},
          {"scatter", scatter_json}};
}

nlohmann::json DimensionalityReport::ToJson() const {
  return {{"class", class_label},
          {"effect", dsp::EffectName(effect)},
          {"sample_ids", sample_ids},
          {"cca_spectrum", SpectrumJson(cca_spectrum)},
          {"baseline_spectrum", SpectrumJson(baseline_spectrum)},
          {"k90_cca", k90_cca},
          {"k90_baseline", k90_baseline}};
}

StackedSweep StackEffected(const TrajectorySet& traj,
                           const std::vector<Eigen::Index>& rows) {
  const std::vector<std::size_t> active = traj.sweep.ActiveIndices();
  std::vector<double> strength;
  strength.reserve(active.size());
  for (std::size_t j : active) strength.push_back(traj.sweep.ranks[j]);
  const std::vector<double> ranks = stats::RankTransform(strength);

  StackedSweep out;
  out.x.resize(static_cast<Eigen::Index>(rows.size() * active.size()),
               traj.clean.cols());
  out.y.reserve(rows.size() * active.size());
  Eigen::Index r = 0;
  for (Eigen::Index row : rows) {
    for (std::size_t k = 0; k < active.size(); ++k) {
      out.x.row(r++) = traj.effected[active[k]].data.row(row).cast<double>();
      out.y.push_back(ranks[k]);
    }
  }
  return out;
}

SensitivityReport GlobalCca(const TrajectorySet& traj,
                            std::string_view class_label, double ridge) {
  const std::vector<Eigen::Index> rows = traj.RowsOfClass(class_label);
  if (rows.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("global CCA needs >= 2 samples of class '{}', "
                            "found {}",
                            class_label, rows.size()));
  }
  return RunCca(traj, rows, std::string(kGlobalScope),
                std::string(class_label), ridge);
}

SensitivityReport SamplewiseCca(const TrajectorySet& traj,
                                std::string_view sample_id, double ridge) {
  const auto row = traj.clean.RowOf(sample_id);
  if (!row) {
    throw Error(ErrorCode::kUnknownSample,
                fmt::format("sample '{}' not in trajectory set", sample_id));
  }
  return RunCca(traj, {*row}, std::string(sample_id),
                traj.clean.class_labels[*row], ridge);
}

DimensionalityReport SamplewiseDirectionSpectrum(const TrajectorySet& traj,
                                                 std::string_view class_label,
                                                 double ridge, int workers) {
  const std::vector<Eigen::Index> rows = traj.RowsOfClass(class_label);
  if (rows.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("direction spectrum needs >= 2 samples of class "
                            "'{}', found {}",
                            class_label, rows.size()));
  }
  std::vector<SensitivityReport> per_sample(rows.size());
  ParallelFor(rows.size(), workers, [&](std::size_t i) {
    per_sample[i] = SamplewiseCca(traj, traj.clean.sample_ids[rows[i]], ridge);
  });

  DimensionalityReport report;
  report.class_label = std::string(class_label);
  report.effect = traj.sweep.effect;
  report.directions.resize(static_cast<Eigen::Index>(rows.size()),
                           traj.clean.cols());
  const stats::Vector& anchor = per_sample.front().direction;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const stats::Vector& c = per_sample[i].direction;
    const double flip = c.dot(anchor) < 0.0 ? -1.0 : 1.0;
    report.directions.row(static_cast<Eigen::Index>(i)) = flip * c.transpose();
    report.sample_ids.push_back(per_sample[i].scope);
  }
  report.cca_spectrum = stats::Svd(report.directions).s;

  stats::Matrix clean(static_cast<Eigen::Index>(rows.size()),
                      traj.clean.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    clean.row(static_cast<Eigen::Index>(i)) =
        traj.clean.data.row(rows[i]).cast<double>();
  }
  std::vector<double> baseline = stats::Pca(clean).variances.values;
  for (double& v : baseline) v = std::sqrt(std::max(0.0, v));
  report.baseline_spectrum = stats::SpectrumReport::FromValues(baseline);
  report.k90_cca = report.cca_spectrum.EffectiveDimension(0.9);
  report.k90_baseline = report.baseline_spectrum.EffectiveDimension(0.9);
  return report;
}

std::string TableCell::Format() const {
  return fmt::format("{:.2f} ± {:.2f}", 100.0 * mean, 100.0 * stddev);
}

std::vector<TableCell> AggregateTable(std::span<const TableEntry> entries) {
  std::vector<TableCell> cells;
  std::vector<std::vector<double>> values;
  for (const TableEntry& e : entries) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const TableCell& c) {
      return c.embedding == e.embedding && c.effect == e.effect;
    });
    if (it == cells.end()) {
      cells.push_back({e.embedding, e.effect});
      values.emplace_back();
      it = cells.end() - 1;
    }
    values[static_cast<std::size_t>(it - cells.begin())].push_back(e.value);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::vector<double>& v = values[c];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    cells[c].n_classes = v.size();
    cells[c].mean = mean;
    cells[c].stddev = std::sqrt(var / static_cast<double>(v.size()));
    cells[c].min = *std::min_element(v.begin(), v.end());
    cells[c].max = *std::max_element(v.begin(), v.end());
    // Rounding can push the mean a hair outside the observed range.
    cells[c].mean = std::clamp(cells[c].mean, cells[c].min, cells[c].max);
  }
  return cells;
}

std::vector<Polyline> TrajectoryProjection2d(
    const TrajectorySet& traj, const std::vector<std::string>& sample_ids) {
  if (sample_ids.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory projection needs at least two samples");
  }
  const std::size_t points = 1 + traj.effected.size();
  std::vector<Eigen::Index> rows;
  for (const std::string& id : sample_ids) {
    const auto row = traj.clean.RowOf(id);
    if (!row) {
      throw Error(ErrorCode::kUnknownSample,
                  fmt::format("sample '{}' not in trajectory set", id));
    }
    rows.push_back(*row);
  }
  stats::Matrix all(static_cast<Eigen::Index>(rows.size() * points),
                    traj.clean.cols());
  Eigen::Index r = 0;
  for (Eigen::Index row : rows) {
    all.row(r++) = traj.clean.data.row(row).cast<double>();
    for (const EmbeddingMatrix& m : traj.effected) {
      all.row(r++) = m.data.row(row).cast<double>();
    }
  }
  const stats::PcaResult pca = stats::Pca(all);
  stats::Matrix top = stats::Matrix::Zero(2, all.cols());
  const Eigen::Index k = std::min<Eigen::Index>(2, pca.components.rows());
  top.topRows(k) = pca.components.topRows(k);
  const stats::Matrix coords =
      (all.rowwise() - pca.mean.transpose()) * top.transpose();

  std::vector<Polyline> out(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t p = 0; p < points; ++p) {
      const auto at = static_cast<Eigen::Index>(s * points + p);
      out[s].push_back({coords(at, 0), coords(at, 1)});
    }
  }
  return out;
}

}  // namespace embsense::sensitivity
