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

// End-to-end orchestration with content-hash stage caching.
//
// Output tree (relative to output_dir):
//   manifest.json, audio/clean/<id>.wav               synth
//   sweeps.json, audio/<effect>/<jj>/<id>.wav         effects
//   embeddings/clean.emb1, embeddings/<effect>/<jj>.emb1   embed
//   analysis/{sensitivity,dimensionality,table}.csv, analysis/*.json,
//   analysis/plots/*.svg                              analyze
//   evaluation/report.{csv,json}, evaluation/plots/*.svg   evaluate
//   .cache/<stage>.json                               cache records

#ifndef EMBSENSE_PIPELINE_HPP_
#define EMBSENSE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "embsense/dataset.hpp"
#include "embsense/effects.hpp"
#include "embsense/embedding.hpp"
#include "embsense/logmel.hpp"

namespace embsense::pipeline {

enum class DatasetSource { kSynthetic, kManifest, kEmbeddings };
enum class EmbedderType { kToy, kExternal };

struct EffectConfig {
  dsp::EffectKind effect = dsp::EffectKind::kGain;
  int steps = dsp::kDefaultSweepSteps;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir = "embsense_out";

  DatasetSource source = DatasetSource::kSynthetic;
  SynthSpec synth;
  std::filesystem::path manifest_path;
  // Directory holding clean.emb1 and <effect>/<jj>.emb1. Used by the
  // "embeddings" source and by the external embedder.
  std::filesystem::path embeddings_dir;

  std::vector<EffectConfig> effects;

  EmbedderType embedder = EmbedderType::kToy;
  LogMelConfig logmel;

  double ridge = 0.0;
  std::vector<double> thresholds{0.3, 0.4, 0.5};

  double lambda = 1.0;
  // Method names; "samplewise_cca_svd" expands to one entry per threshold.
  std::vector<std::string> methods;

  static PipelineConfig Default();
  // Unknown keys are errors. Relative paths resolve against `base_dir`.
  static PipelineConfig FromJson(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir = {});
  static PipelineConfig Load(const std::filesystem::path& path);

  void Validate() const;
  // Fully expanded, defaults included; workers and output_dir omitted.
  nlohmann::json ToJson() const;
  // First 16 hex digits of SHA-256 over ToJson().
  std::string RunId() const;
  std::vector<std::string> ExpandedMethods() const;
};

enum class Stage { kSynth, kEffects, kEmbed, kAnalyze, kEvaluate };
std::string_view StageName(Stage stage);

enum class StageStatus { kRan, kCached, kSkipped };
std::string_view StageStatusName(StageStatus status);

struct StageResult {
  Stage stage = Stage::kSynth;
  StageStatus status = StageStatus::kRan;
  std::size_t failed_cells = 0;
};

// Reads embeddings/clean.emb1 and every consecutive <effect>/<jj>.emb1 under
// `dir`; the sweep is rebuilt from the conditions stored in the files.
TrajectorySet LoadTrajectories(const std::filesystem::path& dir,
                               dsp::EffectKind effect);

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  // Runs `target` after the stages it depends on (synth, effects, embed).
  std::vector<StageResult> RunThrough(Stage target);
  std::vector<StageResult> RunAll();

  const PipelineConfig& config() const { return config_; }

 private:
  struct Record {
    std::string key;
    nlohmann::json outputs = nlohmann::json::object();  // relpath -> sha256
    std::size_t failed_cells = 0;
  };

  StageResult RunStage(Stage stage);
  nlohmann::json StageInputs(Stage stage) const;
  std::string StageKey(Stage stage, const nlohmann::json& inputs) const;
  bool RecordIsValid(const Record& record, const std::string& key) const;

  std::size_t DoSynth(Record& record);
  std::size_t DoEffects(Record& record);
  std::size_t DoEmbed(Record& record);
  std::size_t DoAnalyze(Record& record);
  std::size_t DoEvaluate(Record& record);

  std::vector<TrajectorySet> LoadAllTrajectories() const;
  void Emit(Record& record, const std::string& relpath,
            std::string_view bytes) const;

  PipelineConfig config_;
  std::filesystem::path out_;
  std::vector<std::pair<Stage, Record>> done_;
};

}  // namespace embsense::pipeline

#endif  // EMBSENSE_PIPELINE_HPP_
