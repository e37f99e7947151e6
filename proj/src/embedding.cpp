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

#include "embsense/embedding.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "embsense/error.hpp"
#include "embsense/fileio.hpp"

namespace embsense {

std::string Condition::Label() const {
  if (!parameter) return effect;
  return fmt::format("{}@{}", effect, *parameter);
}

nlohmann::json Condition::ToJson() const {
  nlohmann::json j;
  j["effect"] = effect;
  j["parameter"] = parameter ? nlohmann::json(*parameter) : nlohmann::json();
  return j;
}

Condition Condition::FromJson(const nlohmann::json& j) {
  Condition c;
  c.effect = j.at("effect").get<std::string>();
  if (j.contains("parameter") && !j.at("parameter").is_null()) {
    c.parameter = j.at("parameter").get<double>();
  }
  return c;
}

void EmbeddingMatrix::Validate() const {
  if (rows() < 1 || cols() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("embedding matrix must be at least 1x2, got {}x{}",
                            rows(), cols()));
  }
  if (sample_ids.size() != static_cast<std::size_t>(rows()) ||
      class_labels.size() != static_cast<std::size_t>(rows())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sample_ids/class_labels do not match the row count");
  }
  if (!data.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "embedding matrix is not finite");
  }
  std::set<std::string_view> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidInput, "duplicate sample id " + id);
    }
  }
}

stats::Matrix EmbeddingMatrix::ToDouble() const { return data.cast<double>(); }

std::optional<Eigen::Index> EmbeddingMatrix::RowOf(
    std::string_view sample_id) const {
  auto it = std::find(sample_ids.begin(), sample_ids.end(), sample_id);
  if (it == sample_ids.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - sample_ids.begin());
}

void TrajectorySet::Validate() const {
  clean.Validate();
  sweep.Validate();
  if (effected.size() != sweep.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} effected matrices for {} sweep parameters",
                            effected.size(), sweep.size()));
  }
  for (const EmbeddingMatrix& m : effected) {
    m.Validate();
    if (m.cols() != clean.cols() || m.sample_ids != clean.sample_ids) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "effected matrix " + m.condition.Label() +
                      " is not row-aligned with the clean matrix");
    }
  }
}

std::vector<Eigen::Index> TrajectorySet::RowsOfClass(
    std::string_view label) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < clean.class_labels.size(); ++i) {
    if (clean.class_labels[i] == label) {
      rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  return rows;
}

std::vector<std::string> TrajectorySet::Classes() const {
  std::set<std::string> labels(clean.class_labels.begin(),
                               clean.class_labels.end());
  return {labels.begin(), labels.end()};
}

namespace {

EmbeddingMatrix SubsetRows(const EmbeddingMatrix& m,
                           const std::vector<Eigen::Index>& rows) {
  EmbeddingMatrix out;
  out.data.resize(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.data.row(static_cast<Eigen::Index>(r)) = m.data.row(rows[r]);
    out.sample_ids.push_back(m.sample_ids[rows[r]]);
    out.class_labels.push_back(m.class_labels[rows[r]]);
  }
  out.condition = m.condition;
  out.producer = m.producer;
  return out;
}

}  // namespace

TrajectorySet TrajectorySet::Subset(
    const std::vector<Eigen::Index>& rows) const {
  TrajectorySet out;
  out.clean = SubsetRows(clean, rows);
  out.effected.reserve(effected.size());
  for (const EmbeddingMatrix& m : effected) {
    out.effected.push_back(SubsetRows(m, rows));
  }
  out.sweep = sweep;
  return out;
}

void DatasetManifest::Validate() const {
  std::set<std::string_view> seen;
  for (const ManifestEntry& e : entries) {
    if (e.sample_id.empty()) {
      throw Error(ErrorCode::kInvalidInput, "manifest entry without sample_id");
    }
    if (!seen.insert(e.sample_id).second) {
      throw Error(ErrorCode::kInvalidInput,
                  "duplicate sample id in manifest: " + e.sample_id);
    }
  }
}

nlohmann::json DatasetManifest::ToJson() const {
  nlohmann::json j = nlohmann::json::array();
  for (const ManifestEntry& e : entries) {
    j.push_back({{"sample_id", e.sample_id},
                 {"path", e.path},
                 {"class_label", e.class_label},
                 {"duration_s", e.duration_s},
                 {"sample_rate", e.sample_rate}});
  }
  return j;
}

DatasetManifest DatasetManifest::FromJson(const nlohmann::json& j) {
  if (!j.is_array()) {
    throw Error(ErrorCode::kInvalidInput, "manifest must be a JSON array");
  }
  DatasetManifest m;
  try {
    for (const auto& item : j) {
      ManifestEntry e;
      e.sample_id = item.at("sample_id").get<std::string>();
      e.path = item.at("path").get<std::string>();
      e.class_label = item.at("class_label").get<std::string>();
      e.duration_s = item.value("duration_s", 0.0);
      e.sample_rate = item.value("sample_rate", 0);
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("malformed manifest entry: ") + ex.what());
  }
  m.Validate();
  return m;
}

DatasetManifest DatasetManifest::Load(const std::filesystem::path& path) {
  const std::string text = ReadFileBytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kInvalidInput,
                path.string() + " is not valid JSON: " + ex.what());
  }
  return FromJson(j);
}

void DatasetManifest::Save(const std::filesystem::path& path) const {
  WriteFileAtomic(path, ToJson().dump(2) + "\n");
}

}  // namespace embsense
