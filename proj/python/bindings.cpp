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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "embsense/downstream.hpp"
#include "embsense/effects.hpp"
#include "embsense/emb1.hpp"
#include "embsense/error.hpp"
#include "embsense/logmel.hpp"
#include "embsense/numstats.hpp"
#include "embsense/pipeline.hpp"
#include "embsense/sensitivity.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

embsense::dsp::AudioClip ToClip(const FloatArray& samples, int sample_rate) {
  if (samples.ndim() != 1) throw py::value_error("samples must be 1-D");
  embsense::dsp::AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(samples.data(), samples.data() + samples.size());
  return clip;
}

FloatArray ToArray(const std::vector<float>& v) {
  FloatArray out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict ReadEmbeddingsDict(const fs::path& path) {
  embsense::EmbeddingMatrix m = embsense::ReadEmbeddings(path);
  FloatArray data({m.rows(), m.cols()});
  std::copy(m.data.data(), m.data.data() + m.data.size(), data.mutable_data());
  py::dict d;
  d["data"] = data;
  d["sample_ids"] = m.sample_ids;
  d["class_labels"] = m.class_labels;
  d["effect"] = m.condition.effect;
  d["parameter"] = m.condition.parameter;
  d["producer_json"] = m.producer.dump();
  return d;
}

void WriteEmbeddingsArray(const fs::path& path, const FloatArray& data,
                          std::vector<std::string> sample_ids,
                          std::vector<std::string> class_labels,
                          const std::string& effect,
                          std::optional<double> parameter,
                          const std::string& producer_json) {
  if (data.ndim() != 2) throw py::value_error("data must be 2-D");
  embsense::EmbeddingMatrix m;
  m.data = Eigen::Map<const embsense::FloatMatrix>(data.data(), data.shape(0),
                                                   data.shape(1));
  m.sample_ids = std::move(sample_ids);
  m.class_labels = std::move(class_labels);
  m.condition = {effect, parameter};
  m.producer = nlohmann::json::parse(producer_json);
  embsense::WriteEmbeddings(m, path);
}

py::list RunPipeline(const std::string& config_json, const fs::path& base_dir,
                     const std::string& target,
                     std::optional<fs::path> output_dir,
                     std::optional<int> workers) {
  using embsense::pipeline::Stage;
  auto config = embsense::pipeline::PipelineConfig::FromJson(
      nlohmann::json::parse(config_json), base_dir);
  if (output_dir) config.output_dir = *output_dir;
  if (workers) config.workers = *workers;
  config.Validate();

  std::vector<embsense::pipeline::StageResult> results;
  {
    py::gil_scoped_release release;
    embsense::pipeline::Pipeline pipeline(config);
    if (target == "full") {
      results = pipeline.RunAll();
    } else {
      const std::vector<std::pair<std::string, Stage>> stages = {
          {"synth", Stage::kSynth},     {"effects", Stage::kEffects},
          {"embed", Stage::kEmbed},     {"analyze", Stage::kAnalyze},
          {"evaluate", Stage::kEvaluate}};
      auto it = std::find_if(stages.begin(), stages.end(),
                             [&](const auto& s) { return s.first == target; });
      if (it == stages.end()) {
        throw embsense::Error(embsense::ErrorCode::kConfig,
                              "unknown stage '" + target + "'");
      }
      results = pipeline.RunThrough(it->second);
    }
  }
  py::list out;
  for (const auto& r : results) {
    out.append(py::make_tuple(
        std::string(embsense::pipeline::StageName(r.stage)),
        std::string(embsense::pipeline::StageStatusName(r.status)),
        r.failed_cells));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the embsense package.";
  py::register_exception<embsense::Error>(m, "EmbsenseError", PyExc_ValueError);

  m.def("read_embeddings", &ReadEmbeddingsDict, py::arg("path"));
  m.def("write_embeddings", &WriteEmbeddingsArray, py::arg("path"),
        py::arg("data"), py::arg("sample_ids"), py::arg("class_labels"),
        py::arg("effect") = "clean", py::arg("parameter") = py::none(),
        py::arg("producer_json") = "{}");

  m.def(
      "spearman",
      [](std::vector<double> a, std::vector<double> b) {
        return embsense::stats::Spearman(a, b);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "roc_auc",
      [](std::vector<double> scores, std::vector<int> labels) {
        return embsense::downstream::RocAuc(scores, labels);
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "cca_single_target",
      [](const embsense::stats::Matrix& x, std::vector<double> y, double ridge) {
        const auto r = embsense::stats::CcaSingleTarget(x, y, ridge);
        py::dict d;
        d["direction"] = r.direction;
        d["sign"] = r.sign;
        d["rho"] = r.rho;
        d["r2"] = r.r2;
        d["projections"] = r.projections;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("ridge") = 0.0);

  m.def(
      "parameter_grid",
      [](const std::string& effect, int steps) {
        const auto s = embsense::dsp::BuildParameterGrid(
            embsense::dsp::ParseEffect(effect), steps);
        return py::make_tuple(s.params, s.ranks, s.neutral_index);
      },
      py::arg("effect"), py::arg("steps") = embsense::dsp::kDefaultSweepSteps);
  m.def(
      "apply_effect",
      [](const std::string& effect, double parameter, const FloatArray& samples,
         int sample_rate) {
        const auto out = embsense::dsp::ApplyEffect(
            embsense::dsp::ParseEffect(effect), parameter,
            ToClip(samples, sample_rate));
        return ToArray(out.samples);
      },
      py::arg("effect"), py::arg("parameter"), py::arg("samples"),
      py::arg("sample_rate"));
  m.def(
      "embed_logmel",
      [](const FloatArray& samples, int sample_rate, int n_fft, int hop,
         int n_mels, bool l2_normalize) {
        embsense::LogMelConfig cfg;
        cfg.n_fft = n_fft;
        cfg.hop = hop;
        cfg.n_mels = n_mels;
        cfg.l2_normalize = l2_normalize;
        return ToArray(
            embsense::EmbedLogMelStats(ToClip(samples, sample_rate), cfg));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("n_fft") = 1024,
      py::arg("hop") = 512, py::arg("n_mels") = 64,
      py::arg("l2_normalize") = false);

  m.def(
      "global_cca",
      [](const fs::path& embeddings_dir, const std::string& effect,
         const std::string& class_label, double ridge) {
        const auto traj = embsense::pipeline::LoadTrajectories(
            embeddings_dir, embsense::dsp::ParseEffect(effect));
        return embsense::sensitivity::GlobalCca(traj, class_label, ridge)
            .ToJson()
            .dump();
      },
      py::arg("embeddings_dir"), py::arg("effect"), py::arg("class_label"),
      py::arg("ridge") = 0.0);

  m.def(
      "run_id",
      [](const std::string& config_json) {
        return embsense::pipeline::PipelineConfig::FromJson(
                   nlohmann::json::parse(config_json))
            .RunId();
      },
      py::arg("config_json"));
  m.def("run_pipeline", &RunPipeline, py::arg("config_json"),
        py::arg("base_dir") = fs::path(), py::arg("target") = "full",
        py::arg("output_dir") = py::none(), py::arg("workers") = py::none());
}
