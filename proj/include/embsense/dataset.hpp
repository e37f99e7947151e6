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

#ifndef EMBSENSE_DATASET_HPP_
#define EMBSENSE_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "embsense/effects.hpp"
#include "embsense/embedding.hpp"

namespace embsense {

struct LabeledClip {
  std::string sample_id;
  std::string class_label;
  dsp::AudioClip clip;
};

struct SynthSpec {
  int n_classes = 2;
  int n_per_class = 10;
  double duration_s = 3.0;
  int sample_rate = 22050;

  void Validate() const;
};

struct SynthDataset {
  std::vector<LabeledClip> clips;
  // Paths point at audio/clean/<sample_id>.wav relative to the dataset root.
  DatasetManifest manifest;
};

// Class k is a harmonic tone complex with its own fundamental register and
// spectral tilt, plus low-level noise. Every clip draws from an RNG stream
// derived from (seed, class, index), so the output is fully determined by
// the seed.
SynthDataset GenerateSynthDataset(const SynthSpec& spec, std::uint64_t seed);

// Loads every manifest entry relative to `root`. All failures are collected
// and reported together, each prefixed with its sample_id.
std::vector<LabeledClip> LoadClips(const DatasetManifest& manifest,
                                   const std::filesystem::path& root,
                                   int workers = 1);

using EmbedFn = std::function<std::vector<float>(const dsp::AudioClip&)>;

// Embeds each clip after applying (effect, param), or as-is for a clean
// condition. Rows follow the order of `clips`.
EmbeddingMatrix EmbedCondition(const std::vector<LabeledClip>& clips,
                               const Condition& condition,
                               const EmbedFn& embed, int workers = 1);

// Clean matrix plus one effected matrix per sweep parameter, row-aligned by
// sample_id.
TrajectorySet BuildTrajectories(const std::vector<LabeledClip>& clips,
                                const dsp::EffectSweep& sweep,
                                const EmbedFn& embed, int workers = 1);

TrajectorySet BuildTrajectories(const DatasetManifest& manifest,
                                const std::filesystem::path& root,
                                const dsp::EffectSweep& sweep,
                                const EmbedFn& embed, int workers = 1);

}  // namespace embsense

#endif  // EMBSENSE_DATASET_HPP_
