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

#include "embsense/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "embsense/csv.hpp"
#include "embsense/downstream.hpp"
#include "embsense/emb1.hpp"
#include "embsense/error.hpp"
#include "embsense/fileio.hpp"
#include "embsense/hashing.hpp"
#include "embsense/parallel.hpp"
#include "embsense/projection.hpp"
#include "embsense/sensitivity.hpp"
#include "embsense/svg.hpp"
#include "embsense/wav.hpp"

namespace embsense::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSamplewiseFamily = "samplewise_cca_svd";

[[noreturn]] void ConfigError(const std::string& msg) {
  throw Error(ErrorCode::kConfig, msg);
}

void CheckKeys(const json& j, std::initializer_list<std::string_view> allowed,
               std::string_view where) {
  if (!j.is_object()) ConfigError(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
T Get(const json& j, std::string_view key, const T& fallback,
      std::string_view where) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    ConfigError(fmt::format("{}.{} has the wrong type", where, key));
  }
}

fs::path ResolvePath(const std::string& p, const fs::path& base) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::string_view SourceName(DatasetSource s) {
  switch (s) {
    case DatasetSource::kSynthetic: return "synthetic";
    case DatasetSource::kManifest: return "manifest";
    case DatasetSource::kEmbeddings: return "embeddings";
  }
  return "synthetic";
}

std::string SafeName(std::string_view s) {
  std::string out;
  for (char ch : s) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' ||
                    ch == '.';
    out += ok ? ch : '_';
  }
  return out;
}

std::string ConditionDir(std::size_t index) {
  return fmt::format("{:02d}", index);
}

std::string Num(double v) { return fmt::format("{}", v); }

std::string FirstLine(std::string_view msg) {
  return std::string(msg.substr(0, msg.find('\n')));
}

json HashTree(const fs::path& dir) {
  json out = json::object();
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".emb1") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    out[fs::relative(f, dir).generic_string()] = Sha256File(f);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::Default() {
  PipelineConfig c;
  for (dsp::EffectKind e : {dsp::EffectKind::kGain, dsp::EffectKind::kLowPass,
                            dsp::EffectKind::kReverb,
                            dsp::EffectKind::kBitcrush}) {
    c.effects.push_back({e, dsp::kDefaultSweepSteps});
  }
  c.methods = {"global_cca",   "samplewise_cca_svd", "pca_absolute",
               "pca_relative", "avg_displacement",   "lda"};
  return c;
}

PipelineConfig PipelineConfig::FromJson(const json& j, const fs::path& base) {
  CheckKeys(j, {"seed", "workers", "output_dir", "dataset", "effects",
                "embedder", "analysis", "eval"},
            "config");
  PipelineConfig c = Default();
  c.seed = Get<std::uint64_t>(j, "seed", c.seed, "config");
  c.workers = Get<int>(j, "workers", c.workers, "config");
  if (j.contains("output_dir")) {
    c.output_dir = ResolvePath(
        Get<std::string>(j, "output_dir", "", "config"), base);
  }

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    if (!d.is_object()) ConfigError("dataset must be an object");
    const auto source = Get<std::string>(d, "source", "synthetic", "dataset");
    if (source == "synthetic") {
      CheckKeys(d, {"source", "n_classes", "n_per_class", "duration_s",
                    "sample_rate"},
                "dataset");
      c.source = DatasetSource::kSynthetic;
      c.synth.n_classes = Get<int>(d, "n_classes", c.synth.n_classes, "dataset");
      c.synth.n_per_class =
          Get<int>(d, "n_per_class", c.synth.n_per_class, "dataset");
      c.synth.duration_s =
          Get<double>(d, "duration_s", c.synth.duration_s, "dataset");
      c.synth.sample_rate =
          Get<int>(d, "sample_rate", c.synth.sample_rate, "dataset");
    } else if (source == "manifest") {
      CheckKeys(d, {"source", "manifest"}, "dataset");
      c.source = DatasetSource::kManifest;
      c.manifest_path =
          ResolvePath(Get<std::string>(d, "manifest", "", "dataset"), base);
    } else if (source == "embeddings") {
      CheckKeys(d, {"source", "embeddings_dir"}, "dataset");
      c.source = DatasetSource::kEmbeddings;
      c.embeddings_dir = ResolvePath(
          Get<std::string>(d, "embeddings_dir", "", "dataset"), base);
      c.embedder = EmbedderType::kExternal;
    } else {
      ConfigError(fmt::format("unknown dataset source '{}'", source));
    }
  }

  if (j.contains("effects")) {
    const json& e = j.at("effects");
    if (!e.is_array()) ConfigError("effects must be an array");
    c.effects.clear();
    for (const json& item : e) {
      EffectConfig ec;
      std::string name;
      if (item.is_string()) {
        name = item.get<std::string>();
      } else {
        CheckKeys(item, {"name", "steps"}, "effects[]");
        name = Get<std::string>(item, "name", "", "effects[]");
        ec.steps = Get<int>(item, "steps", ec.steps, "effects[]");
      }
      try {
        ec.effect = dsp::ParseEffect(name);
      } catch (const Error& ex) {
        ConfigError(ex.what());
      }
      c.effects.push_back(ec);
    }
  }

  if (j.contains("embedder")) {
    const json& e = j.at("embedder");
    if (!e.is_object()) ConfigError("embedder must be an object");
    const auto type = Get<std::string>(e, "type", "toy", "embedder");
    if (type == "toy") {
      CheckKeys(e, {"type", "n_fft", "hop", "n_mels", "l2_normalize"},
                "embedder");
      if (c.source == DatasetSource::kEmbeddings) {
        ConfigError("the embeddings dataset source needs the external embedder");
      }
      c.embedder = EmbedderType::kToy;
      c.logmel.n_fft = Get<int>(e, "n_fft", c.logmel.n_fft, "embedder");
      c.logmel.hop = Get<int>(e, "hop", c.logmel.hop, "embedder");
      c.logmel.n_mels = Get<int>(e, "n_mels", c.logmel.n_mels, "embedder");
      c.logmel.l2_normalize =
          Get<bool>(e, "l2_normalize", c.logmel.l2_normalize, "embedder");
    } else if (type == "external") {
      CheckKeys(e, {"type", "embeddings_dir"}, "embedder");
      c.embedder = EmbedderType::kExternal;
      if (e.contains("embeddings_dir")) {
        c.embeddings_dir = ResolvePath(
            Get<std::string>(e, "embeddings_dir", "", "embedder"), base);
      }
    } else {
      ConfigError(fmt::format("unknown embedder type '{}'", type));
    }
  }

  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    CheckKeys(a, {"ridge", "thresholds"}, "analysis");
    c.ridge = Get<double>(a, "ridge", c.ridge, "analysis");
    c.thresholds = Get<std::vector<double>>(a, "thresholds", c.thresholds,
                                            "analysis");
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    CheckKeys(e, {"lambda", "methods"}, "eval");
    c.lambda = Get<double>(e, "lambda", c.lambda, "eval");
    c.methods =
        Get<std::vector<std::string>>(e, "methods", c.methods, "eval");
  }
  c.Validate();
  return c;
}

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  json j;
  try {
    j = json::parse(ReadFileBytes(path));
  } catch (const json::parse_error& ex) {
    ConfigError(fmt::format("{}: {}", path.string(), ex.what()));
  }
  return FromJson(j, path.parent_path());
}

void PipelineConfig::Validate() const {
  if (workers < 1) ConfigError("workers must be >= 1");
  if (source == DatasetSource::kSynthetic) {
    try {
      synth.Validate();
    } catch (const Error& ex) {
      ConfigError(ex.what());
    }
  }
  if (source == DatasetSource::kManifest && manifest_path.empty()) {
    ConfigError("dataset.manifest is required for the manifest source");
  }
  if (embedder == EmbedderType::kExternal && embeddings_dir.empty()) {
    ConfigError("the external embedder needs an embeddings_dir");
  }
  if (source == DatasetSource::kEmbeddings &&
      embedder != EmbedderType::kExternal) {
    ConfigError("the embeddings dataset source needs the external embedder");
  }
  if (effects.empty()) ConfigError("effects must not be empty");
  std::set<dsp::EffectKind> seen;
  for (const EffectConfig& e : effects) {
    if (!seen.insert(e.effect).second) {
      ConfigError(fmt::format("effect '{}' listed twice",
                              dsp::EffectName(e.effect)));
    }
    if (e.effect != dsp::EffectKind::kBitcrush && e.steps < 4) {
      ConfigError(fmt::format("effect '{}' needs at least 4 steps",
                              dsp::EffectName(e.effect)));
    }
  }
  try {
    logmel.Validate();
  } catch (const Error& ex) {
    ConfigError(ex.what());
  }
  if (!(ridge >= 0.0)) ConfigError("analysis.ridge must be >= 0");
  if (thresholds.empty()) ConfigError("analysis.thresholds must not be empty");
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      ConfigError(fmt::format("threshold {} outside [0, 1]", t));
    }
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    ConfigError("eval.lambda must be finite and >= 0");
  }
  std::set<std::string> names;
  for (const std::string& m : ExpandedMethods()) {
    if (m == downstream::kNoProjection) continue;
    try {
      projection::Method::Parse(m);
    } catch (const Error& ex) {
      ConfigError(ex.what());
    }
    if (!names.insert(m).second) {
      ConfigError(fmt::format("method '{}' listed twice", m));
    }
  }
}

std::vector<std::string> PipelineConfig::ExpandedMethods() const {
  std::vector<std::string> out;
  for (const std::string& m : methods) {
    if (m == kSamplewiseFamily) {
      for (double t : thresholds) {
        out.push_back(projection::Method{
            projection::MethodKind::kSamplewiseCcaSvd, t}.Name());
      }
    } else if (m != downstream::kNoProjection) {
      out.push_back(m);
    }
  }
  return out;
}

json PipelineConfig::ToJson() const {
  json dataset = {{"source", SourceName(source)}};
  switch (source) {
    case DatasetSource::kSynthetic:
      dataset["n_classes"] = synth.n_classes;
      dataset["n_per_class"] = synth.n_per_class;
      dataset["duration_s"] = synth.duration_s;
      dataset["sample_rate"] = synth.sample_rate;
      break;
    case DatasetSource::kManifest:
      dataset["manifest"] = manifest_path.generic_string();
      break;
    case DatasetSource::kEmbeddings:
      dataset["embeddings_dir"] = embeddings_dir.generic_string();
      break;
  }
  json effect_list = json::array();
  for (const EffectConfig& e : effects) {
    effect_list.push_back(
        {{"name", dsp::EffectName(e.effect)}, {"steps", e.steps}});
  }
  json embedder_json;
  if (embedder == EmbedderType::kToy) {
    embedder_json = logmel.ToJson();
    embedder_json["type"] = "toy";
  } else {
    embedder_json = {{"type", "external"},
                     {"embeddings_dir", embeddings_dir.generic_string()}};
  }
  return {{"seed", seed},
          {"dataset", dataset},
          {"effects", effect_list},
          {"embedder", embedder_json},
          {"analysis", {{"ridge", ridge}, {"thresholds", thresholds}}},
          {"eval", {{"lambda", lambda}, {"methods", ExpandedMethods()}}}};
}

std::string PipelineConfig::RunId() const {
  return Sha256Hex(ToJson().dump()).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Stage helpers

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kSynth: return "synth";
    case Stage::kEffects: return "effects";
    case Stage::kEmbed: return "embed";
    case Stage::kAnalyze: return "analyze";
    case Stage::kEvaluate: return "evaluate";
  }
  return "unknown";
}

std::string_view StageStatusName(StageStatus status) {
  switch (status) {
    case StageStatus::kRan: return "ran";
    case StageStatus::kCached: return "cached";
    case StageStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

TrajectorySet LoadTrajectories(const fs::path& dir, dsp::EffectKind effect) {
  TrajectorySet traj;
  traj.clean = ReadEmbeddings(dir / "clean.emb1");
  const std::string name(dsp::EffectName(effect));
  std::vector<double> params;
  for (std::size_t j = 0;; ++j) {
    const fs::path path = dir / name / (ConditionDir(j) + ".emb1");
    if (!fs::exists(path)) break;
    EmbeddingMatrix m = ReadEmbeddings(path);
    if (m.condition.effect != name || !m.condition.parameter) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("{} holds condition '{}', expected effect '{}'",
                              path.string(), m.condition.Label(), name));
    }
    params.push_back(*m.condition.parameter);
    traj.effected.push_back(std::move(m));
  }
  if (traj.effected.empty()) {
    throw Error(ErrorCode::kIo,
                fmt::format("no embeddings for effect '{}' under {}", name,
                            dir.string()));
  }
  traj.sweep = dsp::MakeSweep(effect, std::move(params));
  traj.Validate();
  return traj;
}

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)), out_(config_.output_dir) {
  config_.Validate();
}

std::vector<StageResult> Pipeline::RunThrough(Stage target) {
  std::vector<StageResult> results;
  for (Stage s : {Stage::kSynth, Stage::kEffects, Stage::kEmbed}) {
    results.push_back(RunStage(s));
    if (s == target) return results;
  }
  results.push_back(RunStage(target));
  return results;
}

std::vector<StageResult> Pipeline::RunAll() {
  std::vector<StageResult> results = RunThrough(Stage::kAnalyze);
  results.push_back(RunStage(Stage::kEvaluate));
  return results;
}

void Pipeline::Emit(Record& record, const std::string& relpath,
                    std::string_view bytes) const {
  WriteFileAtomic(out_ / relpath, bytes);
  record.outputs[relpath] = Sha256Hex(bytes);
}

json Pipeline::StageInputs(Stage stage) const {
  json inputs = json::object();
  auto merge = [&](Stage from) {
    for (const auto& [s, rec] : done_) {
      if (s != from) continue;
      for (const auto& [k, v] : rec.outputs.items()) inputs[k] = v;
    }
  };
  switch (stage) {
    case Stage::kSynth:
      if (config_.source == DatasetSource::kManifest) {
        const DatasetManifest manifest =
            DatasetManifest::Load(config_.manifest_path);
        inputs["manifest"] = Sha256File(config_.manifest_path);
        const fs::path root = config_.manifest_path.parent_path();
        for (const ManifestEntry& e : manifest.entries) {
          fs::path p(e.path);
          if (p.is_relative()) p = root / p;
          inputs["audio:" + e.sample_id] =
              fs::exists(p) ? Sha256File(p) : std::string("missing");
        }
      }
      break;
    case Stage::kEffects:
      merge(Stage::kSynth);
      break;
    case Stage::kEmbed:
      merge(Stage::kSynth);
      merge(Stage::kEffects);
      if (config_.embedder == EmbedderType::kExternal) {
        const json tree = HashTree(config_.embeddings_dir);
        for (const auto& [k, v] : tree.items()) inputs["external:" + k] = v;
      }
      break;
    case Stage::kAnalyze:
    case Stage::kEvaluate:
      merge(Stage::kEmbed);
      break;
  }
  return inputs;
}

std::string Pipeline::StageKey(Stage stage, const json& inputs) const {
  const json full = config_.ToJson();
  json section;
  switch (stage) {
    case Stage::kSynth:
      section = {{"seed", full["seed"]}, {"dataset", full["dataset"]}};
      break;
    case Stage::kEffects:
      section = {{"effects", full["effects"]}};
      break;
    case Stage::kEmbed:
      section = {{"embedder", full["embedder"]},
                 {"effects", full["effects"]},
                 {"dataset", full["dataset"]}};
      break;
    case Stage::kAnalyze:
      section = {{"analysis", full["analysis"]}, {"run_id", config_.RunId()}};
      break;
    case Stage::kEvaluate:
      section = {{"analysis", full["analysis"]},
                 {"eval", full["eval"]},
                 {"run_id", config_.RunId()}};
      break;
  }
  const json material = {{"stage", StageName(stage)},
                         {"config", section},
                         {"inputs", inputs}};
  return Sha256Hex(material.dump());
}

bool Pipeline::RecordIsValid(const Record& record,
                             const std::string& key) const {
  if (record.key != key) return false;
  for (const auto& [rel, hash] : record.outputs.items()) {
    const fs::path p = out_ / rel;
    if (!fs::is_regular_file(p)) return false;
    if (Sha256File(p) != hash.get<std::string>()) {
      spdlog::info("cached output {} changed on disk", rel);
      return false;
    }
  }
  return true;
}

StageResult Pipeline::RunStage(Stage stage) {
  for (const auto& [s, rec] : done_) {
    if (s == stage) return {stage, StageStatus::kCached, rec.failed_cells};
  }
  const std::string name(StageName(stage));
  const bool skipped = config_.source == DatasetSource::kEmbeddings &&
                       (stage == Stage::kSynth || stage == Stage::kEffects);
  if (skipped) {
    spdlog::info("stage {}: skipped (embeddings source)", name);
    done_.emplace_back(stage, Record{});
    return {stage, StageStatus::kSkipped, 0};
  }

  const fs::path record_path = out_ / ".cache" / (name + ".json");
  try {
    const std::string key = StageKey(stage, StageInputs(stage));
    std::optional<Record> previous;
    if (fs::exists(record_path)) {
      try {
        const json j = json::parse(ReadFileBytes(record_path));
        previous = Record{j.at("key").get<std::string>(), j.at("outputs"),
                          j.at("failed_cells").get<std::size_t>()};
      } catch (const std::exception&) {
        spdlog::warn("ignoring unreadable cache record {}",
                     record_path.string());
      }
    }
    if (previous && RecordIsValid(*previous, key)) {
      spdlog::info("stage {}: cached", name);
      done_.emplace_back(stage, *previous);
      return {stage, StageStatus::kCached, previous->failed_cells};
    }
    if (previous) {
      for (const auto& [rel, hash] : previous->outputs.items()) {
        std::error_code ec;
        fs::remove(out_ / rel, ec);
      }
    }
    std::error_code ec;
    fs::remove(record_path, ec);

    spdlog::info("stage {}: running", name);
    Record record;
    record.key = key;
    switch (stage) {
      case Stage::kSynth: record.failed_cells = DoSynth(record); break;
      case Stage::kEffects: record.failed_cells = DoEffects(record); break;
      case Stage::kEmbed: record.failed_cells = DoEmbed(record); break;
      case Stage::kAnalyze: record.failed_cells = DoAnalyze(record); break;
      case Stage::kEvaluate: record.failed_cells = DoEvaluate(record); break;
    }
    const json rec_json = {{"stage", name},
                           {"key", record.key},
                           {"outputs", record.outputs},
                           {"failed_cells", record.failed_cells}};
    WriteFileAtomic(record_path, rec_json.dump(2) + "\n");
    spdlog::info("stage {}: done, {} outputs, {} failed cells", name,
                 record.outputs.size(), record.failed_cells);
    done_.emplace_back(stage, record);
    return {stage, StageStatus::kRan, record.failed_cells};
  } catch (const Error& ex) {
    throw Error(ex.code(), fmt::format("stage '{}' failed: {}", name, ex.what()));
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::kIo,
                fmt::format("stage '{}' failed: {}", name, ex.what()));
  }
}

// ---------------------------------------------------------------------------
// Stages

std::size_t Pipeline::DoSynth(Record& record) {
  std::vector<LabeledClip> clips;
  DatasetManifest manifest;
  if (config_.source == DatasetSource::kSynthetic) {
    SynthDataset data = GenerateSynthDataset(config_.synth, config_.seed);
    clips = std::move(data.clips);
    manifest = std::move(data.manifest);
  } else {
    const DatasetManifest source = DatasetManifest::Load(config_.manifest_path);
    clips = LoadClips(source, config_.manifest_path.parent_path(),
                      config_.workers);
    for (const LabeledClip& c : clips) {
      manifest.entries.push_back(
          {c.sample_id, "audio/clean/" + SafeName(c.sample_id) + ".wav",
           c.class_label,
           static_cast<double>(c.clip.samples.size()) / c.clip.sample_rate,
           c.clip.sample_rate});
    }
  }
  std::vector<std::string> encoded(clips.size());
  ParallelFor(clips.size(), config_.workers, [&](std::size_t i) {
    encoded[i] = wav::EncodeFloat32(clips[i].clip);
  });
  for (std::size_t i = 0; i < clips.size(); ++i) {
    Emit(record, manifest.entries[i].path, encoded[i]);
  }
  Emit(record, "manifest.json", manifest.ToJson().dump(2) + "\n");
  return 0;
}

std::size_t Pipeline::DoEffects(Record& record) {
  const DatasetManifest manifest = DatasetManifest::Load(out_ / "manifest.json");
  const std::vector<LabeledClip> clips =
      LoadClips(manifest, out_, config_.workers);
  int min_rate = clips.front().clip.sample_rate;
  for (const LabeledClip& c : clips) {
    min_rate = std::min(min_rate, c.clip.sample_rate);
  }

  json sweeps = json::array();
  for (const EffectConfig& ec : config_.effects) {
    const dsp::EffectSweep sweep =
        dsp::BuildParameterGridForRate(ec.effect, ec.steps, min_rate);
    const std::string name(dsp::EffectName(ec.effect));
    for (std::size_t j = 0; j < sweep.size(); ++j) {
      std::vector<std::string> encoded(clips.size());
      ParallelFor(clips.size(), config_.workers, [&](std::size_t i) {
        encoded[i] = wav::EncodeFloat32(
            dsp::ApplyEffect(ec.effect, sweep.params[j], clips[i].clip));
      });
      for (std::size_t i = 0; i < clips.size(); ++i) {
        Emit(record,
             fmt::format("audio/{}/{}/{}.wav", name, ConditionDir(j),
                         SafeName(clips[i].sample_id)),
             encoded[i]);
      }
    }
    sweeps.push_back({{"effect", name},
                      {"params", sweep.params},
                      {"ranks", sweep.ranks},
                      {"neutral_index", sweep.neutral_index
                                            ? json(*sweep.neutral_index)
                                            : json(nullptr)}});
  }
  Emit(record, "sweeps.json", sweeps.dump(2) + "\n");
  return 0;
}

std::size_t Pipeline::DoEmbed(Record& record) {
  if (config_.embedder == EmbedderType::kExternal) {
    const fs::path dir = config_.embeddings_dir;
    const EmbeddingMatrix clean = ReadEmbeddings(dir / "clean.emb1");
    Emit(record, "embeddings/clean.emb1", EncodeEmbeddings(clean));
    for (const EffectConfig& ec : config_.effects) {
      const TrajectorySet traj = LoadTrajectories(dir, ec.effect);
      if (traj.clean.sample_ids != clean.sample_ids) {
        throw Error(ErrorCode::kInvalidInput, "sample ids differ across files");
      }
      for (std::size_t j = 0; j < traj.effected.size(); ++j) {
        Emit(record,
             fmt::format("embeddings/{}/{}.emb1", dsp::EffectName(ec.effect),
                         ConditionDir(j)),
             EncodeEmbeddings(traj.effected[j]));
      }
    }
    return 0;
  }

  const DatasetManifest manifest = DatasetManifest::Load(out_ / "manifest.json");
  const json sweeps = json::parse(ReadFileBytes(out_ / "sweeps.json"));
  const LogMelConfig cfg = config_.logmel;
  const EmbedFn embed = [cfg](const dsp::AudioClip& clip) {
    return EmbedLogMelStats(clip, cfg);
  };

  auto embed_dir = [&](const std::string& audio_dir, const Condition& cond) {
    DatasetManifest m = manifest;
    for (ManifestEntry& e : m.entries) {
      e.path = audio_dir + "/" + SafeName(e.sample_id) + ".wav";
    }
    const std::vector<LabeledClip> clips = LoadClips(m, out_, config_.workers);
    EmbeddingMatrix emb =
        EmbedCondition(clips, Condition::Clean(), embed, config_.workers);
    emb.condition = cond;
    emb.producer = cfg.ToJson();
    return emb;
  };

  Emit(record, "embeddings/clean.emb1",
       EncodeEmbeddings(embed_dir("audio/clean", Condition::Clean())));
  for (const json& s : sweeps) {
    const std::string name = s.at("effect").get<std::string>();
    const auto params = s.at("params").get<std::vector<double>>();
    for (std::size_t j = 0; j < params.size(); ++j) {
      const std::string dir = ConditionDir(j);
      Emit(record, fmt::format("embeddings/{}/{}.emb1", name, dir),
           EncodeEmbeddings(embed_dir(fmt::format("audio/{}/{}", name, dir),
                                      Condition{name, params[j]})));
    }
  }
  return 0;
}

std::vector<TrajectorySet> Pipeline::LoadAllTrajectories() const {
  std::vector<TrajectorySet> out;
  for (const EffectConfig& ec : config_.effects) {
    out.push_back(LoadTrajectories(out_ / "embeddings", ec.effect));
  }
  return out;
}

std::size_t Pipeline::DoAnalyze(Record& record) {
  const std::string run_id = config_.RunId();
  const std::vector<TrajectorySet> all = LoadAllTrajectories();
  std::size_t failed = 0;

  std::string sens_csv = csv::RunIdHeader(run_id) +
                         "effect,class,scope,rho,r2,sign,status\n";
  std::string dim_csv =
      csv::RunIdHeader(run_id) +
      "effect,class,n_samples,k90_cca,k90_baseline,status\n";
  json sens_json = json::array();
  json dim_json = json::array();
  std::vector<sensitivity::TableEntry> table_entries;

  for (const TrajectorySet& traj : all) {
    const std::string effect(dsp::EffectName(traj.sweep.effect));
    const std::string embedding =
        traj.clean.producer.value("name", std::string("embedding"));
    for (const std::string& cls : traj.Classes()) {
      const std::string tag = SafeName(effect) + "_" + SafeName(cls);

      // Global CCA with its scatter plot.
      svg::Plot scatter;
      scatter.title = fmt::format("{} / {}: global CCA", effect, cls);
      scatter.x_label = "projection onto CCA direction";
      scatter.y_label = "effect strength rank";
      try {
        const auto report = sensitivity::GlobalCca(traj, cls, config_.ridge);
        sens_csv += csv::Row({effect, cls, sensitivity::kGlobalScope,
                              Num(report.rho), Num(report.r2),
                              Num(report.sign), downstream::kStatusOk});
        sens_json.push_back(report.ToJson());
        table_entries.push_back({embedding, effect, cls, report.r2});
        svg::Series pts{"samples", {}, svg::Style::kMarkers};
        for (const auto& [x, y] : report.scatter) pts.points.push_back({x, y});
        scatter.series.push_back(std::move(pts));
        scatter.annotation = fmt::format("R² = {:.4f}", report.r2);
      } catch (const std::exception& ex) {
        ++failed;
        sens_csv += csv::Row({effect, cls, sensitivity::kGlobalScope, "", "",
                              "", "failed: " + FirstLine(ex.what())});
        scatter.annotation = "failed: " + FirstLine(ex.what());
      }
      Emit(record, "analysis/plots/scatter_" + tag + ".svg",
           svg::Render(scatter));

      // Sample-wise CCA per sample.
      const std::vector<Eigen::Index> rows = traj.RowsOfClass(cls);
      std::vector<std::string> lines(rows.size());
      std::vector<json> reports(rows.size());
      std::vector<int> bad(rows.size(), 0);
      ParallelFor(rows.size(), config_.workers, [&](std::size_t i) {
        const std::string& id = traj.clean.sample_ids[rows[i]];
        try {
          const auto r = sensitivity::SamplewiseCca(traj, id, config_.ridge);
          lines[i] = csv::Row({effect, cls, id, Num(r.rho), Num(r.r2),
                               Num(r.sign), downstream::kStatusOk});
          reports[i] = {{"scope", id}, {"class", cls}, {"effect", effect},
                        {"rho", r.rho}, {"r2", r.r2}, {"sign", r.sign}};
        } catch (const std::exception& ex) {
          bad[i] = 1;
          lines[i] = csv::Row({effect, cls, id, "", "", "",
                               "failed: " + FirstLine(ex.what())});
          reports[i] = {{"scope", id}, {"class", cls}, {"effect", effect},
                        {"status", "failed: " + FirstLine(ex.what())}};
        }
      });
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sens_csv += lines[i];
        sens_json.push_back(reports[i]);
        failed += static_cast<std::size_t>(bad[i]);
      }

      // Direction spectrum against the clean PCA baseline.
      svg::Plot spectrum;
      spectrum.title = fmt::format("{} / {}: direction spectrum", effect, cls);
      spectrum.x_label = "component";
      spectrum.y_label = "normalized singular value";
      try {
        const auto dims = sensitivity::SamplewiseDirectionSpectrum(
            traj, cls, config_.ridge, config_.workers);
        dim_csv += csv::Row({effect, cls, Num(rows.size()),
                             Num(dims.k90_cca), Num(dims.k90_baseline),
                             downstream::kStatusOk});
        dim_json.push_back(dims.ToJson());
        svg::Series cca{"sample-wise CCA directions", {}};
        svg::Series base{"clean PCA baseline", {}};
        base.dashed = true;
        for (std::size_t k = 0; k < dims.cca_spectrum.normalized.size(); ++k) {
          cca.points.push_back({static_cast<double>(k + 1),
                                dims.cca_spectrum.normalized[k]});
        }
        for (std::size_t k = 0; k < dims.baseline_spectrum.normalized.size();
             ++k) {
          base.points.push_back({static_cast<double>(k + 1),
                                 dims.baseline_spectrum.normalized[k]});
        }
        spectrum.series = {std::move(cca), std::move(base)};
        spectrum.annotation = fmt::format("k90: CCA {} / baseline {}",
                                          dims.k90_cca, dims.k90_baseline);
      } catch (const std::exception& ex) {
        ++failed;
        dim_csv += csv::Row({effect, cls, Num(rows.size()), "", "",
                             "failed: " + FirstLine(ex.what())});
        spectrum.annotation = "failed: " + FirstLine(ex.what());
      }
      Emit(record, "analysis/plots/spectrum_" + tag + ".svg",
           svg::Render(spectrum));

      // Trajectories of a few samples in the top-2 PCA plane.
      svg::Plot tplot;
      tplot.title = fmt::format("{} / {}: trajectories", effect, cls);
      tplot.x_label = "PC1";
      tplot.y_label = "PC2";
      try {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < rows.size() && i < 4; ++i) {
          ids.push_back(traj.clean.sample_ids[rows[i]]);
        }
        const auto lines2d = sensitivity::TrajectoryProjection2d(traj, ids);
        for (std::size_t s = 0; s < ids.size(); ++s) {
          tplot.series.push_back(
              {ids[s], lines2d[s], svg::Style::kLineMarkers});
        }
        tplot.annotation = "first point: clean";
      } catch (const std::exception& ex) {
        tplot.annotation = "failed: " + FirstLine(ex.what());
      }
      Emit(record, "analysis/plots/trajectories_" + tag + ".svg",
           svg::Render(tplot));
    }
  }

  std::string table_csv =
      csv::RunIdHeader(run_id) +
      "embedding,effect,n_classes,mean_r2,std_r2,min_r2,max_r2,cell\n";
  for (const auto& cell : sensitivity::AggregateTable(table_entries)) {
    table_csv += csv::Row({cell.embedding, cell.effect, Num(cell.n_classes),
                           Num(cell.mean), Num(cell.stddev), Num(cell.min),
                           Num(cell.max), cell.Format()});
  }

  Emit(record, "analysis/sensitivity.csv", sens_csv);
  Emit(record, "analysis/sensitivity.json",
       json{{"run_id", run_id}, {"reports", sens_json}}.dump(1) + "\n");
  Emit(record, "analysis/dimensionality.csv", dim_csv);
  Emit(record, "analysis/dimensionality.json",
       json{{"run_id", run_id}, {"reports", dim_json}}.dump(1) + "\n");
  Emit(record, "analysis/table.csv", table_csv);
  return failed;
}

std::size_t Pipeline::DoEvaluate(Record& record) {
  const std::string run_id = config_.RunId();
  const std::vector<TrajectorySet> all = LoadAllTrajectories();

  downstream::GridConfig grid;
  grid.lambda = config_.lambda;
  grid.ridge = config_.ridge;
  grid.workers = config_.workers;
  for (const std::string& m : config_.ExpandedMethods()) {
    grid.methods.push_back(projection::Method::Parse(m));
  }
  const downstream::ExperimentReport report =
      downstream::RunExperimentGrid(all, grid);

  Emit(record, "evaluation/report.csv", report.ToCsv(run_id));
  json report_json = report.ToJson();
  report_json["run_id"] = run_id;
  Emit(record, "evaluation/report.json", report_json.dump(1) + "\n");

  // One panel per (effect, class) with every method and both directions.
  std::map<std::pair<std::string, std::string>,
           std::map<std::pair<std::string, std::string>, svg::Series>>
      panels;
  std::vector<std::pair<std::string, std::string>> panel_order;
  for (const downstream::ReportRow& r : report.rows) {
    const auto key = std::make_pair(r.effect, r.class_label);
    if (!panels.contains(key)) panel_order.push_back(key);
    svg::Series& s = panels[key][{r.method, r.train_condition}];
    if (s.name.empty()) {
      s.name = fmt::format("{} (train {})", r.method, r.train_condition);
      s.dashed = r.train_condition != "clean";
    }
    if (r.auc) s.points.push_back({r.parameter, *r.auc});
  }
  for (const auto& key : panel_order) {
    svg::Plot plot;
    plot.title = fmt::format("{} / {}: ROC AUC", key.first, key.second);
    plot.x_label = "effect parameter";
    plot.y_label = "ROC AUC";
    plot.log_x = key.first == dsp::EffectName(dsp::EffectKind::kLowPass);
    plot.y_range = std::make_pair(0.0, 1.0);
    for (const std::string& m : report.methods) {
      for (const char* dir : {"clean", "effected"}) {
        auto it = panels[key].find({m, dir});
        if (it != panels[key].end()) plot.series.push_back(it->second);
      }
    }
    Emit(record,
         fmt::format("evaluation/plots/auc_{}_{}.svg", SafeName(key.first),
                     SafeName(key.second)),
         svg::Render(plot, 760, 460));
  }
  return report.FailedCells();
}

}  // namespace embsense::pipeline
