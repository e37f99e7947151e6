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

#include "embsense/projection.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "embsense/emb1.hpp"
#include "embsense/error.hpp"
#include "embsense/fileio.hpp"
#include "embsense/sensitivity.hpp"

namespace embsense::projection {

namespace {

std::vector<Eigen::Index> ClassRows(const TrajectorySet& traj,
                                    std::string_view class_label) {
  std::vector<Eigen::Index> rows;
  if (class_label == kAllClasses) {
    for (Eigen::Index i = 0; i < traj.clean.rows(); ++i) rows.push_back(i);
  } else {
    rows = traj.RowsOfClass(class_label);
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("no samples of class '{}'", class_label));
  }
  return rows;
}

// Restricts to the class so the sensitivity routines see one class only.
TrajectorySet ClassTrajectories(const TrajectorySet& traj,
                                std::string_view class_label) {
  if (class_label != kAllClasses) return traj;
  TrajectorySet pooled = traj;
  for (auto& label : pooled.clean.class_labels) label = kAllClasses;
  return pooled;
}

Provenance MakeProvenance(const TrajectorySet& traj,
                          std::string_view class_label,
                          const std::vector<Eigen::Index>& rows) {
  Provenance p;
  p.effect = std::string(dsp::EffectName(traj.sweep.effect));
  p.class_label = std::string(class_label);
  for (Eigen::Index r : rows) p.fit_sample_ids.push_back(traj.clean.sample_ids[r]);
  return p;
}

stats::Matrix Displacements(const TrajectorySet& traj,
                            const std::vector<Eigen::Index>& rows) {
  const std::vector<std::size_t> active = traj.sweep.ActiveIndices();
  if (active.empty()) {
    throw Error(ErrorCode::kInvalidInput, "sweep has no non-neutral parameter");
  }
  stats::Matrix out(static_cast<Eigen::Index>(rows.size() * active.size()),
                    traj.clean.cols());
  Eigen::Index r = 0;
  for (Eigen::Index row : rows) {
    const Eigen::RowVectorXd base = traj.clean.data.row(row).cast<double>();
    for (std::size_t j : active) {
      out.row(r++) = traj.effected[j].data.row(row).cast<double>() - base;
    }
  }
  return out;
}

stats::Matrix CleanRows(const TrajectorySet& traj,
                        const std::vector<Eigen::Index>& rows) {
  stats::Matrix out(static_cast<Eigen::Index>(rows.size()), traj.clean.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        traj.clean.data.row(rows[i]).cast<double>();
  }
  return out;
}

stats::Matrix SingleDirection(const stats::Vector& v) {
  return stats::Orthonormalize(v.transpose());
}

}  // namespace

std::string Method::Name() const {
  switch (kind) {
    case MethodKind::kGlobalCca: return "global_cca";
    case MethodKind::kSamplewiseCcaSvd:
      return fmt::format("samplewise_cca_svd@{}", threshold);
    case MethodKind::kPcaAbsolute: return "pca_absolute";
    case MethodKind::kPcaRelative: return "pca_relative";
    case MethodKind::kAvgDisplacement: return "avg_displacement";
    case MethodKind::kLda: return "lda";
  }
  return "unknown";
}

Method Method::Parse(std::string_view name) {
  constexpr std::string_view kSvdPrefix = "samplewise_cca_svd@";
  if (name.substr(0, kSvdPrefix.size()) == kSvdPrefix) {
    const std::string value(name.substr(kSvdPrefix.size()));
    std::size_t used = 0;
    double t = std::numeric_limits<double>::quiet_NaN();
    try {
      t = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || !(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kInvalidParameter,
                  fmt::format("bad threshold in method '{}'", name));
    }
    return {MethodKind::kSamplewiseCcaSvd, t};
  }
  if (name == "global_cca") return {MethodKind::kGlobalCca};
  if (name == "pca_absolute") return {MethodKind::kPcaAbsolute};
  if (name == "pca_relative") return {MethodKind::kPcaRelative};
  if (name == "avg_displacement") return {MethodKind::kAvgDisplacement};
  if (name == "lda") return {MethodKind::kLda};
  throw Error(ErrorCode::kInvalidParameter,
              fmt::format("unknown projection method '{}'", name));
}

nlohmann::json Provenance::ToJson() const {
  return {{"effect", effect},
          {"class", class_label},
          {"fit_sample_ids", fit_sample_ids},
          {"split", split},
          {"warnings", warnings}};
}

Provenance Provenance::FromJson(const nlohmann::json& j) {
  Provenance p;
  p.effect = j.value("effect", "");
  p.class_label = j.value("class", "");
  p.fit_sample_ids =
      j.value("fit_sample_ids", std::vector<std::string>{});
  p.split = j.value("split", "");
  p.warnings = j.value("warnings", std::vector<std::string>{});
  return p;
}

void Projector::Validate() const {
  if (basis.rows() == 0) return;
  const stats::Matrix gram = basis * basis.transpose();
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    if (std::abs(gram(i, i) - 1.0) > 1e-9) {
      throw Error(ErrorCode::kDegenerateGeometry,
                  "projector direction is not unit length");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(gram(i, j)) > 1e-8) {
        throw Error(ErrorCode::kDegenerateGeometry,
                    "projector directions are not orthogonal");
      }
    }
  }
}

Projector EstimateGlobalCca(const TrajectorySet& traj,
                            std::string_view class_label, double ridge) {
  const std::vector<Eigen::Index> rows = ClassRows(traj, class_label);
  const auto report = sensitivity::GlobalCca(
      ClassTrajectories(traj, class_label), class_label, ridge);
  Projector p;
  p.method = {MethodKind::kGlobalCca};
  p.basis = SingleDirection(report.direction);
  p.provenance = MakeProvenance(traj, class_label, rows);
  return p;
}

Projector EstimateSamplewiseCcaSvd(const TrajectorySet& traj,
                                   std::string_view class_label,
                                   double threshold, double ridge,
                                   int workers) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter,
                fmt::format("threshold {} outside [0, 1]", threshold));
  }
  const std::vector<Eigen::Index> rows = ClassRows(traj, class_label);
  const auto dims = sensitivity::SamplewiseDirectionSpectrum(
      ClassTrajectories(traj, class_label), class_label, ridge, workers);
  const stats::SvdResult svd = stats::Svd(dims.directions);
  const std::vector<double>& s = svd.s.values;

  Projector p;
  p.method = {MethodKind::kSamplewiseCcaSvd, threshold};
  p.provenance = MakeProvenance(traj, class_label, rows);
  const double s1 = s.empty() ? 0.0 : s.front();
  const double nonzero =
      static_cast<double>(std::max(dims.directions.rows(),
                                   dims.directions.cols())) *
      std::numeric_limits<double>::epsilon() * s1;
  Eigen::Index keep = 0;
  while (keep < static_cast<Eigen::Index>(s.size()) && s[keep] > nonzero &&
         s[keep] >= threshold * s1) {
    ++keep;
  }
  p.basis = svd.v.leftCols(keep).transpose();
  return p;
}

Projector EstimatePcaDisplacement(const TrajectorySet& traj,
                                  std::string_view class_label, PcaMode mode) {
  const std::vector<Eigen::Index> rows = ClassRows(traj, class_label);
  Projector p;
  p.method = {mode == PcaMode::kAbsolute ? MethodKind::kPcaAbsolute
                                         : MethodKind::kPcaRelative};
  p.provenance = MakeProvenance(traj, class_label, rows);
  p.basis = stats::Matrix(0, traj.clean.cols());

  const stats::Matrix disp = Displacements(traj, rows);
  if (disp.rows() < 2) {
    p.provenance.warnings.push_back("fewer than two displacements");
    return p;
  }
  const stats::PcaResult disp_pca = stats::Pca(disp);
  const std::vector<double>& sigma2 = disp_pca.variances.values;
  if (sigma2.empty() || !(sigma2.front() > 0.0)) {
    p.provenance.warnings.push_back("displacements have no variance");
    return p;
  }

  Eigen::Index pick = 0;
  if (mode == PcaMode::kRelative) {
    if (rows.size() < 2) {
      throw Error(ErrorCode::kInvalidInput,
                  "relative PCA needs >= 2 clean samples");
    }
    const std::vector<double> tau2 =
        stats::Pca(CleanRows(traj, rows)).variances.values;
    double total = 0.0;
    for (double t : tau2) total += t;
    double best = -1.0;
    pick = -1;
    const std::size_t n = std::min(sigma2.size(), tau2.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (!(tau2[j] > 1e-12 * total)) continue;
      const double ratio = sigma2[j] / tau2[j];
      if (ratio > best) {
        best = ratio;
        pick = static_cast<Eigen::Index>(j);
      }
    }
    if (pick < 0 || !(best > 0.0)) {
      p.provenance.warnings.push_back(
          "no component with non-negligible clean variance");
      return p;
    }
  }
  p.basis = SingleDirection(disp_pca.components.row(pick).transpose());
  return p;
}

Projector EstimateAvgDisplacement(const TrajectorySet& traj,
                                  std::string_view class_label) {
  const std::vector<Eigen::Index> rows = ClassRows(traj, class_label);
  const stats::Matrix disp = Displacements(traj, rows);
  const stats::Vector mean = disp.colwise().mean().transpose();
  Projector p;
  p.method = {MethodKind::kAvgDisplacement};
  p.provenance = MakeProvenance(traj, class_label, rows);
  // Float32 storage perturbs each displacement by up to eps * |row|, so a
  // mean below that is indistinguishable from exact cancellation.
  double scale = 0.0;
  for (Eigen::Index r : rows) {
    scale = std::max(scale, static_cast<double>(traj.clean.data.row(r).norm()));
    for (std::size_t j : traj.sweep.ActiveIndices()) {
      scale = std::max(scale,
                       static_cast<double>(traj.effected[j].data.row(r).norm()));
    }
  }
  const double tol = 4.0 * std::numeric_limits<float>::epsilon() * scale;
  if (!(mean.norm() > tol)) {
    p.basis = stats::Matrix(0, traj.clean.cols());
    p.provenance.warnings.push_back("mean displacement is zero");
    return p;
  }
  p.basis = (mean / mean.norm()).transpose();
  return p;
}

Projector EstimateLda(const TrajectorySet& traj,
                      std::string_view class_label) {
  const std::vector<Eigen::Index> rows = ClassRows(traj, class_label);
  const stats::Matrix clean = CleanRows(traj, rows);
  const std::vector<std::size_t> active = traj.sweep.ActiveIndices();
  stats::Matrix effected(static_cast<Eigen::Index>(rows.size() * active.size()),
                         traj.clean.cols());
  Eigen::Index r = 0;
  for (Eigen::Index row : rows) {
    for (std::size_t j : active) {
      effected.row(r++) = traj.effected[j].data.row(row).cast<double>();
    }
  }
  const stats::LdaResult lda = stats::LdaTwoClass(clean, effected);
  Projector p;
  p.method = {MethodKind::kLda};
  p.provenance = MakeProvenance(traj, class_label, rows);
  p.basis = SingleDirection(lda.w);
  return p;
}

Projector Estimate(const Method& method, const TrajectorySet& traj,
                   std::string_view class_label, double ridge, int workers) {
  switch (method.kind) {
    case MethodKind::kGlobalCca:
      return EstimateGlobalCca(traj, class_label, ridge);
    case MethodKind::kSamplewiseCcaSvd:
      return EstimateSamplewiseCcaSvd(traj, class_label, method.threshold,
                                      ridge, workers);
    case MethodKind::kPcaAbsolute:
      return EstimatePcaDisplacement(traj, class_label, PcaMode::kAbsolute);
    case MethodKind::kPcaRelative:
      return EstimatePcaDisplacement(traj, class_label, PcaMode::kRelative);
    case MethodKind::kAvgDisplacement:
      return EstimateAvgDisplacement(traj, class_label);
    case MethodKind::kLda:
      return EstimateLda(traj, class_label);
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown projection method");
}

stats::Matrix ApplyProjector(const Projector& projector,
                             const stats::Matrix& x) {
  if (projector.size() == 0) {
    if (projector.dimension() != 0 && projector.dimension() != x.cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "projector and data differ in dimension");
    }
    return x;
  }
  return stats::ProjectOut(x, projector.basis);
}

EmbeddingMatrix ApplyProjector(const Projector& projector,
                               const EmbeddingMatrix& m) {
  EmbeddingMatrix out = m;
  out.data = ApplyProjector(projector, m.ToDouble()).cast<float>();
  out.producer["projector"] = {{"method", projector.method.Name()},
                               {"provenance", projector.provenance.ToJson()}};
  return out;
}

void WriteProjector(const Projector& projector,
                    const std::filesystem::path& path) {
  projector.Validate();
  Emb1Container c;
  c.rows = static_cast<std::uint32_t>(projector.size());
  c.cols = static_cast<std::uint32_t>(projector.dimension());
  c.values.reserve(static_cast<std::size_t>(projector.basis.size()));
  for (Eigen::Index i = 0; i < projector.basis.rows(); ++i) {
    for (Eigen::Index j = 0; j < projector.basis.cols(); ++j) {
      c.values.push_back(static_cast<float>(projector.basis(i, j)));
    }
  }
  c.trailer = {{"kind", "projector"},
               {"method", projector.method.Name()},
               {"threshold", projector.method.threshold},
               {"provenance", projector.provenance.ToJson()}};
  WriteFileAtomic(path, EncodeEmb1(c));
}

Projector ReadProjector(const std::filesystem::path& path) {
  const Emb1Container c = DecodeEmb1(ReadFileBytes(path));
  if (c.trailer.value("kind", "") != "projector") {
    throw Error(ErrorCode::kMalformedTrailer,
                path.string() + " is not a projector file");
  }
  Projector p;
  try {
    p.method = Method::Parse(c.trailer.at("method").get<std::string>());
    p.provenance = Provenance::FromJson(c.trailer.at("provenance"));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kMalformedTrailer, ex.what());
  }
  stats::Matrix raw(c.rows, c.cols);
  for (std::uint32_t i = 0; i < c.rows; ++i) {
    for (std::uint32_t j = 0; j < c.cols; ++j) {
      raw(i, j) = c.values[static_cast<std::size_t>(i) * c.cols + j];
    }
  }
  p.basis = c.rows == 0 ? raw : stats::Orthonormalize(raw);
  return p;
}

}  // namespace embsense::projection
