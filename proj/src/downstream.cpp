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

#include "embsense/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "embsense/csv.hpp"
#include "embsense/error.hpp"
#include "embsense/parallel.hpp"

namespace embsense::downstream {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kGradientTolerance = 1e-8;

double Softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void CheckLabels(std::span<const int> labels) {
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("labels must be 0 or 1, got {}", y));
    }
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size()) {
    throw Error(ErrorCode::kInvalidInput, "labels contain a single class");
  }
}

double InfNorm(const LossEvaluation& e) {
  const double gw = e.grad_w.size() ? e.grad_w.cwiseAbs().maxCoeff() : 0.0;
  return std::max(gw, std::abs(e.grad_b));
}

}  // namespace

nlohmann::json LogisticModel::ToJson() const {
  return {{"lambda", lambda},
          {"bias", bias},
          {"weights", std::vector<double>(weights.data(),
                                          weights.data() + weights.size())},
          {"iterations", iterations},
          {"gradient_inf_norm", gradient_norm}};
}

LossEvaluation EvaluateLoss(const stats::Matrix& z, std::span<const int> labels,
                            double lambda, const stats::Vector& w, double b) {
  const auto n = static_cast<double>(z.rows());
  const stats::Vector s = (z * w).array() + b;
  stats::Vector residual(z.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)];
    loss += Softplus(s(i)) - y * s(i);
    residual(i) = Sigmoid(s(i)) - y;
  }
  LossEvaluation out;
  out.value = loss / n + 0.5 * lambda * w.squaredNorm();
  out.grad_w = z.transpose() * residual / n + lambda * w;
  out.grad_b = residual.sum() / n;
  return out;
}

LogisticModel TrainLogistic(const stats::Matrix& x, std::span<const int> labels,
                            double lambda) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} rows but {} labels", x.rows(), labels.size()));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidParameter,
                fmt::format("lambda must be finite and >= 0, got {}", lambda));
  }
  if (!x.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "features contain non-finite values");
  }
  CheckLabels(labels);

  const Eigen::Index d = x.cols();
  LogisticModel model;
  model.lambda = lambda;
  model.mean = x.colwise().mean().transpose();
  model.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(
        (x.col(j).array() - model.mean(j)).square().mean());
    model.scale(j) =
        sd > 1e-12 * std::max(1.0, std::abs(model.mean(j))) ? sd : 0.0;
  }
  const stats::Matrix z = Standardize(model, x);

  const auto n = static_cast<double>(x.rows());
  double positives = 0.0;
  for (int y : labels) positives += y;
  stats::Vector w = stats::Vector::Zero(d);
  double b = std::log(positives / (n - positives));

  LossEvaluation current = EvaluateLoss(z, labels, lambda, w, b);
  int iter = 0;
  for (; iter < kMaxIterations && InfNorm(current) >= kGradientTolerance;
       ++iter) {
    const stats::Vector s = (z * w).array() + b;
    stats::Vector curvature(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double p = Sigmoid(s(i));
      curvature(i) = p * (1.0 - p) / n;
    }
    stats::Matrix h(d + 1, d + 1);
    h.topLeftCorner(d, d) = z.transpose() * curvature.asDiagonal() * z;
    h.topLeftCorner(d, d).diagonal().array() += lambda;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (model.scale(j) == 0.0) h(j, j) += 1.0;
    }
    h.topRightCorner(d, 1) = z.transpose() * curvature;
    h.bottomLeftCorner(1, d) = h.topRightCorner(d, 1).transpose();
    h(d, d) = curvature.sum();

    stats::Vector g(d + 1);
    g << current.grad_w, current.grad_b;
    stats::Vector step = -h.ldlt().solve(g);
    if (!step.allFinite() || g.dot(step) >= 0.0) step = -g;

    const double slope = g.dot(step);
    double t = 1.0;
    bool accepted = false;
    LossEvaluation trial;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      trial = EvaluateLoss(z, labels, lambda, w + t * step.head(d),
                           b + t * step(d));
      if (trial.value <= current.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // At rounding level the loss stops resolving; the full step still
      // shrinks the gradient.
      t = 1.0;
      trial = EvaluateLoss(z, labels, lambda, w + step.head(d), b + step(d));
      if (!(InfNorm(trial) < InfNorm(current))) break;
    }
    w += t * step.head(d);
    b += t * step(d);
    current = std::move(trial);
  }

  model.weights = std::move(w);
  model.bias = b;
  model.iterations = iter;
  model.gradient_norm = InfNorm(current);
  return model;
}

stats::Matrix Standardize(const LogisticModel& model, const stats::Matrix& x) {
  if (x.cols() != model.mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("model expects {} features, got {}",
                            model.mean.size(), x.cols()));
  }
  stats::Matrix z(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (model.scale(j) == 0.0) {
      z.col(j).setZero();
    } else {
      z.col(j) = (x.col(j).array() - model.mean(j)) / model.scale(j);
    }
  }
  return z;
}

std::vector<double> DecisionFunction(const LogisticModel& model,
                                     const stats::Matrix& x) {
  const stats::Matrix z = Standardize(model, x);
  std::vector<double> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        z.row(i).dot(model.weights.transpose()) + model.bias;
  }
  return out;
}

std::vector<double> PredictScores(const LogisticModel& model,
                                  const stats::Matrix& x) {
  std::vector<double> out = DecisionFunction(model, x);
  constexpr double kLow = std::numeric_limits<double>::min();
  const double high = std::nextafter(1.0, 0.0);
  for (double& s : out) s = std::clamp(Sigmoid(s), kLow, high);
  return out;
}

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} scores but {} labels", scores.size(),
                            labels.size()));
  }
  CheckLabels(labels);
  const std::vector<double> ranks = stats::RankTransform(scores);
  double rank_sum = 0.0;
  double n1 = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1) {
      rank_sum += ranks[i];
      n1 += 1.0;
    }
  }
  const double n0 = static_cast<double>(labels.size()) - n1;
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

std::size_t ExperimentReport::FailedCells() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(),
                    [](const ReportRow& r) { return !r.auc.has_value(); }));
}

std::string ExperimentReport::ToCsv(std::string_view run_id) const {
  std::string out = csv::RunIdHeader(run_id);
  out += "effect,parameter,class,method,train_condition,auc,status\n";
  for (const ReportRow& r : rows) {
    const std::string param = fmt::format("{}", r.parameter);
    const std::string auc = r.auc ? fmt::format("{}", *r.auc) : "";
    out += csv::Row({r.effect, param, r.class_label, r.method,
                     r.train_condition, auc, r.status});
  }
  return out;
}

nlohmann::json ExperimentReport::ToJson() const {
  nlohmann::json row_json = nlohmann::json::array();
  for (const ReportRow& r : rows) {
    row_json.push_back({{"effect", r.effect},
                        {"parameter", r.parameter},
                        {"class", r.class_label},
                        {"method", r.method},
                        {"train_condition", r.train_condition},
                        {"auc", r.auc ? nlohmann::json(*r.auc) : nullptr},
                        {"status", r.status}});
  }
  return {{"model",
           {{"type", "logistic_regression"},
            {"lambda", lambda},
            {"standardization", "z-score fit on training data"},
            {"bias", "unregularized"},
            {"labels", "one-vs-rest"}}},
          {"methods", methods},
          {"projectors", projectors},
          {"rows", row_json}};
}

ExperimentReport RunExperimentGrid(
    const std::vector<TrajectorySet>& traj_by_effect, const GridConfig& config) {
  if (traj_by_effect.empty()) {
    throw Error(ErrorCode::kInvalidInput, "no effects to evaluate");
  }
  for (const TrajectorySet& t : traj_by_effect) {
    t.Validate();
    if (t.clean.cols() != traj_by_effect.front().clean.cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "effects disagree on embedding dimension");
    }
  }
  const std::vector<std::string> classes = traj_by_effect.front().Classes();
  if (classes.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                "experiment grid needs at least two classes");
  }

  ExperimentReport report;
  report.lambda = config.lambda;
  report.methods.emplace_back(kNoProjection);
  for (const auto& m : config.methods) report.methods.push_back(m.Name());
  const std::size_t n_methods = report.methods.size();
  const std::size_t n_classes = classes.size();

  // Projectors for every (effect, class, method > 0).
  struct ProjectorSlot {
    std::optional<projection::Projector> projector;
    std::string error;
  };
  std::vector<ProjectorSlot> slots(traj_by_effect.size() * n_classes *
                                   n_methods);
  auto slot_index = [&](std::size_t e, std::size_t c, std::size_t m) {
    return (e * n_classes + c) * n_methods + m;
  };
  ParallelFor(slots.size(), config.workers, [&](std::size_t k) {
    const std::size_t m = k % n_methods;
    if (m == 0) return;
    const std::size_t c = (k / n_methods) % n_classes;
    const std::size_t e = k / (n_methods * n_classes);
    try {
      slots[k].projector =
          projection::Estimate(config.methods[m - 1], traj_by_effect[e],
                               classes[c], config.ridge, 1);
      slots[k].projector->provenance.split = std::string(kFitSplit);
    } catch (const std::exception& ex) {
      slots[k].error = ex.what();
    }
  });
  for (std::size_t e = 0; e < traj_by_effect.size(); ++e) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t m = 1; m < n_methods; ++m) {
        const ProjectorSlot& s = slots[slot_index(e, c, m)];
        nlohmann::json entry = {
            {"effect", dsp::EffectName(traj_by_effect[e].sweep.effect)},
            {"class", classes[c]},
            {"method", report.methods[m]}};
        if (s.projector) {
          entry["status"] = kStatusOk;
          entry["basis_size"] = s.projector->size();
          entry["provenance"] = s.projector->provenance.ToJson();
        } else {
          entry["status"] = "failed: " + s.error;
        }
        report.projectors.push_back(std::move(entry));
      }
    }
  }

  // Cells in canonical (effect, parameter, class, method, direction) order.
  struct CellRef {
    std::size_t effect, param, cls, method, direction;
  };
  std::vector<CellRef> cells;
  for (std::size_t e = 0; e < traj_by_effect.size(); ++e) {
    for (std::size_t j = 0; j < traj_by_effect[e].effected.size(); ++j) {
      for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t m = 0; m < n_methods; ++m) {
          for (std::size_t dir = 0; dir < 2; ++dir) {
            cells.push_back({e, j, c, m, dir});
          }
        }
      }
    }
  }

  std::vector<stats::Matrix> clean_double;
  for (const TrajectorySet& t : traj_by_effect) {
    clean_double.push_back(t.clean.ToDouble());
  }

  report.rows.resize(cells.size());
  ParallelFor(cells.size(), config.workers, [&](std::size_t k) {
    const CellRef& cell = cells[k];
    const TrajectorySet& traj = traj_by_effect[cell.effect];
    ReportRow& row = report.rows[k];
    row.effect = std::string(dsp::EffectName(traj.sweep.effect));
    row.parameter = traj.sweep.params[cell.param];
    row.class_label = classes[cell.cls];
    row.method = report.methods[cell.method];
    row.train_condition = cell.direction == 0 ? "clean" : "effected";
    try {
      const ProjectorSlot* slot =
          cell.method == 0
              ? nullptr
              : &slots[slot_index(cell.effect, cell.cls, cell.method)];
      if (slot && !slot->projector) {
        throw Error(ErrorCode::kDegenerateInput, "projector: " + slot->error);
      }
      std::vector<int> labels;
      labels.reserve(traj.clean.class_labels.size());
      for (const std::string& l : traj.clean.class_labels) {
        labels.push_back(l == row.class_label ? 1 : 0);
      }
      const stats::Matrix effected = traj.effected[cell.param].ToDouble();
      const stats::Matrix& clean = clean_double[cell.effect];
      stats::Matrix train = cell.direction == 0 ? clean : effected;
      stats::Matrix test = cell.direction == 0 ? effected : clean;
      if (slot) {
        train = projection::ApplyProjector(*slot->projector, train);
        test = projection::ApplyProjector(*slot->projector, test);
      }
      const LogisticModel model = TrainLogistic(train, labels, config.lambda);
      row.auc = RocAuc(DecisionFunction(model, test), labels);
    } catch (const std::exception& ex) {
      row.auc.reset();
      row.status = std::string("failed: ") + ex.what();
    }
  });
  return report;
}

}  // namespace embsense::downstream
