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

// Sensitivity quantification: how strongly, and along how many directions,
// embeddings move as an effect's strength increases.
//
// Global CCA pools every (sample, parameter) point of a class; sample-wise
// CCA uses one sample's sweep. Both leave out the clean rows and the neutral
// grid point; the target is the strength rank of the remaining parameters.

#ifndef EMBSENSE_SENSITIVITY_HPP_
#define EMBSENSE_SENSITIVITY_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "embsense/embedding.hpp"
#include "embsense/numstats.hpp"

namespace embsense::sensitivity {

inline constexpr std::string_view kGlobalScope = "global";

struct SensitivityReport {
  std::string scope;  // "global" or a sample_id
  std::string class_label;
  dsp::EffectKind effect = dsp::EffectKind::kGain;
  stats::Vector direction;
  int sign = 1;
  double rho = 0.0;
  double r2 = 0.0;
  // (u^T x, y) for every stacked row.
  std::vector<std::pair<double, double>> scatter;

  nlohmann::json ToJson() const;
};

struct DimensionalityReport {
  std::string class_label;
  dsp::EffectKind effect = dsp::EffectKind::kGain;
  std::vector<std::string> sample_ids;
  // Sample-wise directions as rows, each flipped so <c_i, c_1> >= 0.
  stats::Matrix directions;
  stats::SpectrumReport cca_spectrum;       // singular values of `directions`
  stats::SpectrumReport baseline_spectrum;  // sqrt of clean PCA variances
  int k90_cca = 0;
  int k90_baseline = 0;

  nlohmann::json ToJson() const;
};

// Effected rows of `rows` stacked sample-major (neutral parameter skipped),
// and the rank-transformed strength of each stacked row.
struct StackedSweep {
  stats::Matrix x;
  std::vector<double> y;
};
StackedSweep StackEffected(const TrajectorySet& traj,
                           const std::vector<Eigen::Index>& rows);

SensitivityReport GlobalCca(const TrajectorySet& traj,
                            std::string_view class_label, double ridge = 0.0);

SensitivityReport SamplewiseCca(const TrajectorySet& traj,
                                std::string_view sample_id,
                                double ridge = 0.0);

DimensionalityReport SamplewiseDirectionSpectrum(const TrajectorySet& traj,
                                                 std::string_view class_label,
                                                 double ridge = 0.0,
                                                 int workers = 1);

// One value per (embedding, effect, class).
struct TableEntry {
  std::string embedding;
  std::string effect;
  std::string class_label;
  double value = 0.0;
};

struct TableCell {
  std::string embedding;
  std::string effect;
  std::size_t n_classes = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;

  // "mean ± std" of the values scaled by 100, two decimals.
  std::string Format() const;
};

// Groups by (embedding, effect) in first-appearance order.
std::vector<TableCell> AggregateTable(std::span<const TableEntry> entries);

using Polyline = std::vector<std::array<double, 2>>;

// PCA fitted on the union of the selected samples' clean and effected rows;
// each sample's [clean, effected...] rows projected on the top two
// components.
std::vector<Polyline> TrajectoryProjection2d(
    const TrajectorySet& traj, const std::vector<std::string>& sample_ids);

}  // namespace embsense::sensitivity

#endif  // EMBSENSE_SENSITIVITY_HPP_
