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

// Estimators of the subspace an effect deforms embeddings along, and the
// projectors that remove it.
//
// Every estimator works on the trajectories of one class (or of all classes
// when passed kAllClasses). Displacements are always taken relative to the
// clean embedding, and "non-neutral" means every grid point except the
// sweep's neutral index, if it has one.

#ifndef EMBSENSE_PROJECTION_HPP_
#define EMBSENSE_PROJECTION_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "embsense/embedding.hpp"
#include "embsense/numstats.hpp"

namespace embsense::projection {

inline constexpr std::string_view kAllClasses = "*";

enum class MethodKind {
  kGlobalCca,
  kSamplewiseCcaSvd,
  kPcaAbsolute,
  kPcaRelative,
  kAvgDisplacement,
  kLda,
};

struct Method {
  MethodKind kind = MethodKind::kGlobalCca;
  double threshold = 0.0;  // samplewise_cca_svd only

  // "global_cca", "samplewise_cca_svd@0.4", "pca_absolute", ...
  std::string Name() const;
  static Method Parse(std::string_view name);

  bool operator==(const Method&) const = default;
};

struct Provenance {
  std::string effect;
  std::string class_label;
  std::vector<std::string> fit_sample_ids;
  std::string split;  // set by the evaluation harness
  std::vector<std::string> warnings;

  nlohmann::json ToJson() const;
  static Provenance FromJson(const nlohmann::json& j);
};

struct Projector {
  stats::Matrix basis;  // k x d, orthonormal rows; k may be 0
  Method method;
  Provenance provenance;

  Eigen::Index dimension() const { return basis.cols(); }
  Eigen::Index size() const { return basis.rows(); }
  // Rows unit-norm within 1e-9 and pairwise inner products within 1e-8.
  void Validate() const;
};

Projector EstimateGlobalCca(const TrajectorySet& traj,
                            std::string_view class_label, double ridge = 0.0);

// Right singular vectors of the sign-aligned sample-wise CCA directions with
// s_k >= t * s_1 (and s_k numerically non-zero).
Projector EstimateSamplewiseCcaSvd(const TrajectorySet& traj,
                                   std::string_view class_label,
                                   double threshold, double ridge = 0.0,
                                   int workers = 1);

enum class PcaMode { kAbsolute, kRelative };

// Absolute: top principal component of the displacements. Relative: the
// component j maximizing sigma_j^2 / tau_j^2, where tau_j^2 is the j-th clean
// PCA variance; indices with tau_j^2 <= 1e-12 * sum(tau^2) are skipped.
Projector EstimatePcaDisplacement(const TrajectorySet& traj,
                                  std::string_view class_label, PcaMode mode);

Projector EstimateAvgDisplacement(const TrajectorySet& traj,
                                  std::string_view class_label);

// LDA between the clean rows and the non-neutral effected rows.
Projector EstimateLda(const TrajectorySet& traj,
                      std::string_view class_label);

Projector Estimate(const Method& method, const TrajectorySet& traj,
                   std::string_view class_label, double ridge = 0.0,
                   int workers = 1);

stats::Matrix ApplyProjector(const Projector& projector,
                             const stats::Matrix& x);
EmbeddingMatrix ApplyProjector(const Projector& projector,
                               const EmbeddingMatrix& m);

// EMB1 container: basis rows as payload, method and provenance in the
// trailer. Reading re-orthonormalizes the float32 rows.
void WriteProjector(const Projector& projector,
                    const std::filesystem::path& path);
Projector ReadProjector(const std::filesystem::path& path);

}  // namespace embsense::projection

#endif  // EMBSENSE_PROJECTION_HPP_
