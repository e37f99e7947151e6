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

// Deterministic toy embedder: log-mel band statistics of a magnitude STFT.
// It stands in for a pre-trained model when running at desk scale.

#ifndef EMBSENSE_LOGMEL_HPP_
#define EMBSENSE_LOGMEL_HPP_

#include <vector>

#include <json.hpp>

#include "embsense/effects.hpp"

namespace embsense {

struct LogMelConfig {
  int n_fft = 1024;
  int hop = 512;
  int n_mels = 64;
  bool l2_normalize = false;

  void Validate() const;
  nlohmann::json ToJson() const;
};

double HzToMel(double hz);  // HTK: 2595 log10(1 + f / 700)
double MelToHz(double mel);

// Centre frequencies (Hz) of the n_mels triangular filters spanning
// [0, sample_rate / 2] evenly in mel.
std::vector<double> MelCenterFrequencies(int n_mels, double sample_rate);

// Hann-windowed magnitude STFT (no padding, frames fully inside the clip),
// HTK mel filterbank, log(1 + mel), then per-band mean followed by per-band
// population standard deviation: 2 * n_mels values.
std::vector<float> EmbedLogMelStats(const dsp::AudioClip& clip,
                                    const LogMelConfig& config = {});

}  // namespace embsense

#endif  // EMBSENSE_LOGMEL_HPP_
