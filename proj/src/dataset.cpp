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

#include "embsense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "embsense/error.hpp"
#include "embsense/parallel.hpp"
#include "embsense/wav.hpp"

namespace embsense {

namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Portable draws: the standard distributions are implementation-defined, so
// uniforms and normals are derived from the raw engine output directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

dsp::AudioClip SynthesizeTone(const SynthSpec& spec, int class_index,
                              Rng& rng) {
  const double sr = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * sr));
  const double register_lo =
      110.0 * std::pow(2.0, 3.0 * class_index / spec.n_classes);
  const double f0 = register_lo * (1.0 + 0.25 * rng.Uniform());
  const double tilt =
      0.7 + 1.4 * class_index / std::max(1, spec.n_classes - 1);
  const bool hollow = class_index % 2 == 1;  // odd harmonics dominate
  const double decay = 0.3 + 0.5 * rng.Uniform();
  const double level = 0.3 + 0.4 * rng.Uniform();

  struct Partial {
    double freq, amp, phase;
  };
  std::vector<Partial> partials;
  for (int h = 1; h <= 30 && h * f0 < 0.45 * sr; ++h) {
    double amp = std::pow(static_cast<double>(h), -tilt) *
                 (0.95 + 0.1 * rng.Uniform());
    if (hollow && h % 2 == 0) amp *= 0.35;
    partials.push_back({h * f0, amp, 2.0 * std::numbers::pi * rng.Uniform()});
  }

  std::vector<double> signal(n);
  const double attack = 0.03 * sr;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double v = 0.0;
    for (const Partial& p : partials) {
      v += p.amp * std::sin(2.0 * std::numbers::pi * p.freq * t + p.phase);
    }
    const double env = std::min(1.0, static_cast<double>(i) / attack) *
                       std::exp(-decay * t);
    signal[i] = v * env;
    peak = std::max(peak, std::abs(signal[i]));
  }
  dsp::AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.samples.resize(n);
  const double scale = peak > 0.0 ? level / peak : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = signal[i] * scale + 0.003 * rng.Normal();
    clip.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return clip;
}

}  // namespace

void SynthSpec::Validate() const {
  if (n_classes < 2) {
    throw Error(ErrorCode::kInvalidParameter,
                fmt::format("n_classes must be >= 2, got {}", n_classes));
  }
  if (n_per_class < 4) {
    throw Error(ErrorCode::kInvalidParameter,
                fmt::format("n_per_class must be >= 4, got {}", n_per_class));
  }
  if (!(duration_s > 0.0) || sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidParameter,
                "duration and sample rate must be positive");
  }
}

SynthDataset GenerateSynthDataset(const SynthSpec& spec, std::uint64_t seed) {
  spec.Validate();
  SynthDataset out;
  for (int k = 0; k < spec.n_classes; ++k) {
    const std::string label = fmt::format("class{}", k);
    for (int j = 0; j < spec.n_per_class; ++j) {
      const std::uint64_t stream = SplitMix64(
          seed ^ SplitMix64(static_cast<std::uint64_t>(k) * 1000003u +
                            static_cast<std::uint64_t>(j)));
      Rng rng(stream);
      LabeledClip item;
      item.sample_id = fmt::format("{}_{:03d}", label, j);
      item.class_label = label;
      item.clip = SynthesizeTone(spec, k, rng);
      out.manifest.entries.push_back(
          {item.sample_id, "audio/clean/" + item.sample_id + ".wav", label,
           static_cast<double>(item.clip.samples.size()) / spec.sample_rate,
           spec.sample_rate});
      out.clips.push_back(std::move(item));
    }
  }
  return out;
}

std::vector<LabeledClip> LoadClips(const DatasetManifest& manifest,
                                   const std::filesystem::path& root,
                                   int workers) {
  manifest.Validate();
  const std::size_t n = manifest.entries.size();
  std::vector<LabeledClip> clips(n);
  std::vector<std::string> failures(n);
  ParallelFor(n, workers, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    std::filesystem::path path(e.path);
    if (path.is_relative()) path = root / path;
    try {
      clips[i] = {e.sample_id, e.class_label, wav::Read(path)};
      clips[i].clip.Validate();
    } catch (const std::exception& ex) {
      failures[i] = ex.what();
    }
  });
  std::string report;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i].empty()) continue;
    ++failed;
    report += fmt::format("\n  {}: {}", manifest.entries[i].sample_id,
                          failures[i]);
  }
  if (failed > 0) {
    throw Error(ErrorCode::kIo,
                fmt::format("{} of {} manifest entries failed to load "
                            "({} loaded):{}",
                            failed, n, n - failed, report));
  }
  return clips;
}

EmbeddingMatrix EmbedCondition(const std::vector<LabeledClip>& clips,
                               const Condition& condition,
                               const EmbedFn& embed, int workers) {
  if (clips.empty()) {
    throw Error(ErrorCode::kInvalidInput, "no clips to embed");
  }
  std::optional<dsp::EffectKind> effect;
  if (!condition.IsClean()) {
    effect = dsp::ParseEffect(condition.effect);
    if (!condition.parameter) {
      throw Error(ErrorCode::kInvalidParameter,
                  "effected condition without a parameter");
    }
  }
  const std::size_t n = clips.size();
  std::vector<std::vector<float>> rows(n);
  ParallelFor(n, workers, [&](std::size_t i) {
    try {
      rows[i] = effect ? embed(dsp::ApplyEffect(*effect, *condition.parameter,
                                                clips[i].clip))
                       : embed(clips[i].clip);
    } catch (const Error& e) {
      throw Error(e.code(), clips[i].sample_id + ": " + e.what());
    }
  });

  EmbeddingMatrix m;
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  m.data.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) {
      throw Error(ErrorCode::kDimensionMismatch,
                  clips[i].sample_id + ": embedder changed dimension");
    }
    m.data.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXf>(rows[i].data(), d);
    m.sample_ids.push_back(clips[i].sample_id);
    m.class_labels.push_back(clips[i].class_label);
  }
  m.condition = condition;
  m.Validate();
  return m;
}

TrajectorySet BuildTrajectories(const std::vector<LabeledClip>& clips,
                                const dsp::EffectSweep& sweep,
                                const EmbedFn& embed, int workers) {
  sweep.Validate();
  TrajectorySet traj;
  traj.sweep = sweep;
  traj.clean = EmbedCondition(clips, Condition::Clean(), embed, workers);
  const std::string effect(dsp::EffectName(sweep.effect));
  for (double param : sweep.params) {
    traj.effected.push_back(
        EmbedCondition(clips, {effect, param}, embed, workers));
  }
  traj.Validate();
  return traj;
}

TrajectorySet BuildTrajectories(const DatasetManifest& manifest,
                                const std::filesystem::path& root,
                                const dsp::EffectSweep& sweep,
                                const EmbedFn& embed, int workers) {
  return BuildTrajectories(LoadClips(manifest, root, workers), sweep, embed,
                           workers);
}

}  // namespace embsense
