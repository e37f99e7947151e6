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

// Parameterized audio effects (gain, Chebyshev type-II low-pass, Freeverb
// reverberation, bitcrushing) and the parameter grids they are swept over.
//
// All effects are pure, deterministic, length-preserving and
// sample-rate-preserving. No output clipping is applied after gain or reverb
// so both stay linear maps of the input.

#ifndef EMBSENSE_EFFECTS_HPP_
#define EMBSENSE_EFFECTS_HPP_

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace embsense::dsp {

struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;

  // Throws kInvalidInput if empty, non-finite, or sample_rate <= 0.
  void Validate() const;
};

enum class EffectKind { kGain, kLowPass, kReverb, kBitcrush };

std::string_view EffectName(EffectKind effect);
// Accepts the names produced by EffectName ("gain", "lowpass", "reverb",
// "bitcrush"); throws kInvalidParameter otherwise.
EffectKind ParseEffect(std::string_view name);

// An effect plus its ordered parameter grid. `ranks[j]` is the strength rank
// y_p of `params[j]`; larger rank means stronger effect.
struct EffectSweep {
  EffectKind effect = EffectKind::kGain;
  std::vector<double> params;
  std::vector<double> ranks;
  std::optional<std::size_t> neutral_index;

  void Validate() const;
  std::size_t size() const { return params.size(); }
  // Indices of the grid points that are not the neutral parameter.
  std::vector<std::size_t> ActiveIndices() const;
};

// ---------------------------------------------------------------------------
// Gain

AudioClip ApplyGain(const AudioClip& clip, double gain_db);

// ---------------------------------------------------------------------------
// Filtering

// One second-order section, normalized so a[0] == 1.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

using FilterSections = std::vector<Biquad>;

inline constexpr int kDefaultLowPassOrder = 8;
inline constexpr double kDefaultStopAttenuationDb = 60.0;

// Chebyshev type-II low-pass as a cascade of biquads. `cutoff_hz` is the
// stopband edge: the analog prototype reaches exactly `stop_atten_db` there
// (bilinear transform with pre-warping), and stays at least that far down
// above it. Each section has unit DC gain.
FilterSections DesignCheby2LowPass(double cutoff_hz, double sample_rate,
                                   int order = kDefaultLowPassOrder,
                                   double stop_atten_db =
                                       kDefaultStopAttenuationDb);

// H(e^{j 2 pi f / fs}) of the whole cascade.
std::complex<double> FrequencyResponse(const FilterSections& sections,
                                       double frequency_hz,
                                       double sample_rate);

// Direct-form-II-transposed cascade, zero initial state.
AudioClip ApplyFilter(const FilterSections& sections, const AudioClip& clip);

// ---------------------------------------------------------------------------
// Reverb

struct FreeverbSettings {
  double damping = 0.5;
  double wet_level = 0.33;
  double dry_level = 0.4;
};

// Comb feedback for a normalized room size: 0.28 * room_size + 0.7.
double CombFeedback(double room_size);

// Mono Freeverb, tail truncated to the input length.
AudioClip ApplyReverb(const AudioClip& clip, double room_size,
                      const FreeverbSettings& settings = {});

// Same network, but the input is zero-padded by `tail_samples` first so the
// decay after the last input sample can be inspected.
AudioClip ApplyReverbPadded(const AudioClip& clip, double room_size,
                            std::size_t tail_samples,
                            const FreeverbSettings& settings = {});

// ---------------------------------------------------------------------------
// Bitcrush

// x -> clamp(round(x * 2^(b-1)) / 2^(b-1), -1, 1 - 2^-(b-1)), rounding half
// away from zero.
AudioClip ApplyBitcrush(const AudioClip& clip, int bit_depth);

// ---------------------------------------------------------------------------
// Grids and dispatch

inline constexpr int kDefaultSweepSteps = 16;

// Gain: linear over [-40, 5] dB with 0 dB inserted (and flagged neutral).
// LowPass: log-spaced over [1600, 18333] Hz. Reverb: linear over [0.01, 1].
// Bitcrush: integer depths 4..15, `steps` ignored.
EffectSweep BuildParameterGrid(EffectKind effect,
                               int steps = kDefaultSweepSteps);

// As above, but the low-pass upper edge is pulled down to 0.9 * Nyquist when
// 18333 Hz is not realizable at `sample_rate`.
EffectSweep BuildParameterGridForRate(EffectKind effect, int steps,
                                      int sample_rate);

// Strength ranks for an arbitrary grid under the fixed orientation
// convention (gain, cutoff and bit depth get stronger as they decrease; room
// size as it increases).
std::vector<double> StrengthRanks(EffectKind effect,
                                  const std::vector<double>& params);

// Sweep over an explicit grid; a 0 dB gain point is flagged neutral.
EffectSweep MakeSweep(EffectKind effect, std::vector<double> params);

AudioClip ApplyEffect(EffectKind effect, double param, const AudioClip& clip);

}  // namespace embsense::dsp

#endif  // EMBSENSE_EFFECTS_HPP_
