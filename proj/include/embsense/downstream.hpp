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

// One-vs-rest logistic regression, ROC AUC, and the clean/effected
// train-test swap grid.

#ifndef EMBSENSE_DOWNSTREAM_HPP_
#define EMBSENSE_DOWNSTREAM_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "embsense/embedding.hpp"
#include "embsense/numstats.hpp"
#include "embsense/projection.hpp"

namespace embsense::downstream {

struct LogisticModel {
  stats::Vector weights;  // in standardized feature space
  double bias = 0.0;
  stats::Vector mean;
  stats::Vector scale;  // 0 marks a constant feature, which is ignored
  double lambda = 1.0;
  int iterations = 0;
  double gradient_norm = 0.0;  // infinity norm at the returned optimum

  nlohmann::json ToJson() const;
};

// Mean log-loss plus (lambda / 2) ||w||^2 on already standardized features.
struct LossEvaluation {
  double value = 0.0;
  stats::Vector grad_w;
  double grad_b = 0.0;
};
LossEvaluation EvaluateLoss(const stats::Matrix& z, std::span<const int> labels,
                            double lambda, const stats::Vector& w, double b);

// Damped Newton iterations; stops when the gradient infinity norm drops below
// 1e-8 or after 500 iterations.
LogisticModel TrainLogistic(const stats::Matrix& x, std::span<const int> labels,
                            double lambda = 1.0);

stats::Matrix Standardize(const LogisticModel& model, const stats::Matrix& x);

// w^T z + b, evaluated row by row.
std::vector<double> DecisionFunction(const LogisticModel& model,
                                     const stats::Matrix& x);
// Sigmoid of the decision function, kept inside (0, 1).
std::vector<double> PredictScores(const LogisticModel& model,
                                  const stats::Matrix& x);

double RocAuc(std::span<const double> scores, std::span<const int> labels);

inline constexpr std::string_view kStatusOk = "ok";
inline constexpr std::string_view kNoProjection = "none";
// Projectors see the class's clean rows and every effected condition.
inline constexpr std::string_view kFitSplit = "all_conditions";

struct ReportRow {
  std::string effect;
  double parameter = 0.0;
  std::string class_label;
  std::string method;
  std::string train_condition;  // "clean" or "effected"
  std::optional<double> auc;
  std::string status = std::string(kStatusOk);
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  double lambda = 1.0;
  std::vector<std::string> methods;
  // One entry per estimated projector: effect, class, method, basis size,
  // provenance, or the failure reason.
  nlohmann::json projectors = nlohmann::json::array();

  std::size_t FailedCells() const;
  std::string ToCsv(std::string_view run_id) const;
  nlohmann::json ToJson() const;
};

struct GridConfig {
  double lambda = 1.0;
  double ridge = 0.0;
  std::vector<projection::Method> methods;  // "none" is always included
  int workers = 1;
};

// For every (effect, parameter, class, method, direction): one-vs-rest
// labels; direction "clean" trains on clean and tests on the effected
// condition, direction "effected" swaps them. Projectors are estimated once
// per (effect, class, method) from that class's trajectories and applied to
// both matrices before fitting. Rows come back in that canonical order.
ExperimentReport RunExperimentGrid(const std::vector<TrajectorySet>& traj_by_effect,
                                   const GridConfig& config);

}  // namespace embsense::downstream

#endif  // EMBSENSE_DOWNSTREAM_HPP_
