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

#include "embsense/logmel.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include "embsense/error.hpp"

namespace embsense {

namespace {

// Row b holds the triangular weights of band b over FFT bins 0..n_fft/2.
std::vector<std::vector<double>> MelFilterbank(int n_mels, int n_fft,
                                               double sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    edges[k] = MelToHz(mel_max * static_cast<double>(k) / (n_mels + 1));
  }
  std::vector<std::vector<double>> bank(
      static_cast<std::size_t>(n_mels),
      std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (int b = 0; b < n_mels; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      bank[b][k] = w;
    }
  }
  return bank;
}

}  // namespace

void LogMelConfig::Validate() const {
  if (n_fft < 16 || (n_fft & (n_fft - 1)) != 0) {
    throw Error(ErrorCode::kInvalidParameter,
                fmt::format("n_fft must be a power of two >= 16, got {}",
                            n_fft));
  }
  if (hop < 1) throw Error(ErrorCode::kInvalidParameter, "hop must be >= 1");
  if (n_mels < 1) {
    throw Error(ErrorCode::kInvalidParameter, "n_mels must be >= 1");
  }
}

nlohmann::json LogMelConfig::ToJson() const {
  return {{"name", "toy_logmel"},
          {"n_fft", n_fft},
          {"hop", hop},
          {"n_mels", n_mels},
          {"l2_normalize", l2_normalize}};
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> MelCenterFrequencies(int n_mels, double sample_rate) {
  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> centers(static_cast<std::size_t>(n_mels));
  for (int b = 0; b < n_mels; ++b) {
    centers[b] = MelToHz(mel_max * (b + 1.0) / (n_mels + 1));
  }
  return centers;
}

std::vector<float> EmbedLogMelStats(const dsp::AudioClip& clip,
                                    const LogMelConfig& config) {
  config.Validate();
  clip.Validate();
  const std::size_t n_fft = static_cast<std::size_t>(config.n_fft);
  if (clip.samples.size() < n_fft) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("clip of {} samples is shorter than n_fft = {}",
                            clip.samples.size(), n_fft));
  }
  const std::size_t hop = static_cast<std::size_t>(config.hop);
  const std::size_t n_frames = 1 + (clip.samples.size() - n_fft) / hop;
  const std::size_t n_bins = n_fft / 2 + 1;
  const auto n_mels = static_cast<std::size_t>(config.n_mels);

  // Periodic Hann.
  std::vector<double> window(n_fft);
  for (std::size_t n = 0; n < n_fft; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                     static_cast<double>(n) /
                                     static_cast<double>(n_fft));
  }
  const auto bank = MelFilterbank(config.n_mels, config.n_fft,
                                  clip.sample_rate);

  Eigen::FFT<double> fft;
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spectrum;
  std::vector<std::vector<double>> log_mel(n_frames,
                                           std::vector<double>(n_mels));
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t n = 0; n < n_fft; ++n) {
      frame[n] = window[n] * clip.samples[start + n];
    }
    fft.fwd(spectrum, frame);
    for (std::size_t b = 0; b < n_mels; ++b) {
      double energy = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) {
        if (bank[b][k] != 0.0) energy += bank[b][k] * std::abs(spectrum[k]);
      }
      log_mel[t][b] = std::log1p(energy);
    }
  }

  std::vector<double> out(2 * n_mels);
  for (std::size_t b = 0; b < n_mels; ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n_frames; ++t) mean += log_mel[t][b];
    mean /= static_cast<double>(n_frames);
    double var = 0.0;
    for (std::size_t t = 0; t < n_frames; ++t) {
      const double dv = log_mel[t][b] - mean;
      var += dv * dv;
    }
    out[b] = mean;
    out[n_mels + b] = std::sqrt(var / static_cast<double>(n_frames));
  }
  if (config.l2_normalize) {
    double norm = 0.0;
    for (double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : out) v /= norm;
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace embsense
