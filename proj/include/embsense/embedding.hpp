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

#ifndef EMBSENSE_EMBEDDING_HPP_
#define EMBSENSE_EMBEDDING_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embsense/effects.hpp"
#include "embsense/numstats.hpp"

namespace embsense {

using FloatMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Which version of the audio a matrix was computed from.
struct Condition {
  std::string effect = "clean";
  std::optional<double> parameter;

  static Condition Clean() { return {}; }
  bool IsClean() const { return effect == "clean"; }
  std::string Label() const;

  nlohmann::json ToJson() const;
  static Condition FromJson(const nlohmann::json& j);

  bool operator==(const Condition&) const = default;
};

// N x d embeddings, one row per analysis sample.
struct EmbeddingMatrix {
  FloatMatrix data;
  std::vector<std::string> sample_ids;
  std::vector<std::string> class_labels;
  Condition condition;
  nlohmann::json producer = nlohmann::json::object();

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }

  // N >= 1, d >= 2, finite entries, unique ids, label/id counts match N.
  void Validate() const;
  stats::Matrix ToDouble() const;
  std::optional<Eigen::Index> RowOf(std::string_view sample_id) const;
};

// Clean embeddings plus one row-aligned matrix per sweep parameter.
struct TrajectorySet {
  EmbeddingMatrix clean;
  std::vector<EmbeddingMatrix> effected;
  dsp::EffectSweep sweep;

  void Validate() const;
  // Row indices (in clean order) whose class label equals `label`.
  std::vector<Eigen::Index> RowsOfClass(std::string_view label) const;
  // Distinct class labels in sorted order.
  std::vector<std::string> Classes() const;
  // The same trajectories restricted to `rows` (in the given order).
  TrajectorySet Subset(const std::vector<Eigen::Index>& rows) const;
};

struct ManifestEntry {
  std::string sample_id;
  std::string path;  // relative paths resolve against the manifest directory
  std::string class_label;
  double duration_s = 0.0;
  int sample_rate = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  void Validate() const;
  nlohmann::json ToJson() const;
  static DatasetManifest FromJson(const nlohmann::json& j);
  static DatasetManifest Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

}  // namespace embsense

#endif  // EMBSENSE_EMBEDDING_HPP_
