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

#include "embsense/effects.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "embsense/error.hpp"
#include "embsense/numstats.hpp"

namespace embsense::dsp {

namespace {

constexpr double kGainMinDb = -40.0;
constexpr double kGainMaxDb = 5.0;
constexpr double kCutoffMinHz = 1600.0;
constexpr double kCutoffMaxHz = 18333.0;
constexpr double kRoomMin = 0.01;
constexpr double kRoomMax = 1.00;
constexpr int kBitDepthMin = 4;
constexpr int kBitDepthMax = 15;

// Freeverb constants (left channel tunings at 44.1 kHz).
constexpr std::array<int, 8> kCombTunings = {1116, 1188, 1277, 1356,
                                             1422, 1491, 1557, 1617};
constexpr std::array<int, 4> kAllpassTunings = {556, 441, 341, 225};
constexpr double kAllpassFeedback = 0.5;
constexpr double kFixedInputGain = 0.015;
constexpr double kScaleDamp = 0.4;
constexpr double kScaleRoom = 0.28;
constexpr double kOffsetRoom = 0.7;

[[noreturn]] void InvalidParameter(const std::string& message) {
  throw Error(ErrorCode::kInvalidParameter, message);
}

std::vector<double> Linspace(double lo, double hi, int steps) {
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int j = 0; j < steps; ++j) {
    out[j] = lo + (hi - lo) * static_cast<double>(j) / (steps - 1);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> Logspace(double lo, double hi, int steps) {
  std::vector<double> out(static_cast<std::size_t>(steps));
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (int j = 0; j < steps; ++j) {
    out[j] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(j) /
                                   (steps - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

class CombFilter {
 public:
  CombFilter(std::size_t length, double feedback, double damp)
      : buffer_(length, 0.0), feedback_(feedback), damp_(damp) {}

  double Process(double input) {
    const double output = buffer_[index_];
    store_ = output * (1.0 - damp_) + store_ * damp_;
    buffer_[index_] = input + store_ * feedback_;
    if (++index_ == buffer_.size()) index_ = 0;
    return output;
  }

 private:
  std::vector<double> buffer_;
  std::size_t index_ = 0;
  double store_ = 0.0;
  double feedback_;
  double damp_;
};

class AllpassFilter {
 public:
  explicit AllpassFilter(std::size_t length) : buffer_(length, 0.0) {}

  double Process(double input) {
    const double buffered = buffer_[index_];
    buffer_[index_] = input + buffered * kAllpassFeedback;
    if (++index_ == buffer_.size()) index_ = 0;
    return buffered - input;
  }

 private:
  std::vector<double> buffer_;
  std::size_t index_ = 0;
};

std::size_t ScaledDelay(int tuning, int sample_rate) {
  const double scaled = std::round(static_cast<double>(tuning) * sample_rate /
                                   44100.0);
  return static_cast<std::size_t>(std::max(1.0, scaled));
}

std::vector<float> RunFreeverb(const std::vector<float>& input,
                               std::size_t out_length, int sample_rate,
                               double room_size,
                               const FreeverbSettings& settings) {
  const double feedback = CombFeedback(room_size);
  const double damp = settings.damping * kScaleDamp;
  std::vector<CombFilter> combs;
  combs.reserve(kCombTunings.size());
  for (int tuning : kCombTunings) {
    combs.emplace_back(ScaledDelay(tuning, sample_rate), feedback, damp);
  }
  std::vector<AllpassFilter> allpasses;
  allpasses.reserve(kAllpassTunings.size());
  for (int tuning : kAllpassTunings) {
    allpasses.emplace_back(ScaledDelay(tuning, sample_rate));
  }

  std::vector<float> out(out_length);
  for (std::size_t n = 0; n < out_length; ++n) {
    const double dry = n < input.size() ? static_cast<double>(input[n]) : 0.0;
    const double fed = dry * kFixedInputGain;
    double wet = 0.0;
    for (auto& comb : combs) wet += comb.Process(fed);
    for (auto& allpass : allpasses) wet = allpass.Process(wet);
    out[n] = static_cast<float>(settings.dry_level * dry +
                                settings.wet_level * wet);
  }
  return out;
}

void ValidateRoomSize(double room_size) {
  if (!(room_size >= 0.0 && room_size <= 1.0)) {
    InvalidParameter(fmt::format("room_size {} outside [0, 1]", room_size));
  }
}

}  // namespace

void AudioClip::Validate() const {
  if (sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("sample_rate must be positive, got {}",
                            sample_rate));
  }
  if (samples.empty()) {
    throw Error(ErrorCode::kInvalidInput, "audio clip has no samples");
  }
  for (float s : samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidInput, "audio clip has non-finite sample");
    }
  }
}

std::string_view EffectName(EffectKind effect) {
  switch (effect) {
    case EffectKind::kGain: return "gain";
    case EffectKind::kLowPass: return "lowpass";
    case EffectKind::kReverb: return "reverb";
    case EffectKind::kBitcrush: return "bitcrush";
  }
  return "unknown";
}

EffectKind ParseEffect(std::string_view name) {
  for (EffectKind effect : {EffectKind::kGain, EffectKind::kLowPass,
                            EffectKind::kReverb, EffectKind::kBitcrush}) {
    if (EffectName(effect) == name) return effect;
  }
  InvalidParameter(fmt::format("unknown effect '{}'", name));
}

void EffectSweep::Validate() const {
  if (params.size() < 2) {
    InvalidParameter("sweep needs at least two parameters");
  }
  if (ranks.size() != params.size()) {
    InvalidParameter("sweep ranks and params differ in length");
  }
  const bool increasing = params[1] > params[0];
  for (std::size_t j = 1; j < params.size(); ++j) {
    if (!std::isfinite(params[j]) ||
        (increasing ? params[j] <= params[j - 1] : params[j] >= params[j - 1])) {
      InvalidParameter("sweep parameters must be strictly monotone");
    }
  }
  if (neutral_index && *neutral_index >= params.size()) {
    InvalidParameter("neutral index out of range");
  }
}

std::vector<std::size_t> EffectSweep::ActiveIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!neutral_index || *neutral_index != j) out.push_back(j);
  }
  return out;
}

AudioClip ApplyGain(const AudioClip& clip, double gain_db) {
  if (!std::isfinite(gain_db)) InvalidParameter("gain_db must be finite");
  clip.Validate();
  const double factor = std::pow(10.0, gain_db / 20.0);
  AudioClip out{std::vector<float>(clip.samples.size()), clip.sample_rate};
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    out.samples[n] = static_cast<float>(clip.samples[n] * factor);
  }
  return out;
}

FilterSections DesignCheby2LowPass(double cutoff_hz, double sample_rate,
                                   int order, double stop_atten_db) {
  if (!(sample_rate > 0.0)) InvalidParameter("sample_rate must be positive");
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0)) {
    InvalidParameter(fmt::format("cutoff {} Hz outside (0, {}) Hz", cutoff_hz,
                                 sample_rate / 2.0));
  }
  if (order < 2 || order % 2 != 0) {
    InvalidParameter(fmt::format("order must be even and >= 2, got {}", order));
  }
  if (!(stop_atten_db > 0.0)) {
    InvalidParameter("stopband attenuation must be positive");
  }

  using Complex = std::complex<double>;
  constexpr double kPi = std::numbers::pi;
  const double eps = 1.0 / std::sqrt(std::pow(10.0, stop_atten_db / 10.0) - 1.0);
  const double mu = std::asinh(1.0 / eps) / order;
  const double warped = 2.0 * sample_rate * std::tan(kPi * cutoff_hz /
                                                     sample_rate);
  const double two_fs = 2.0 * sample_rate;
  auto bilinear = [two_fs](Complex s) { return (two_fs + s) / (two_fs - s); };

  // Upper-half-plane members of each conjugate pair; the prototype stopband
  // edge sits at 1 rad/s.
  std::vector<Complex> poles;
  std::vector<Complex> zeros;
  for (int k = 1; k <= order / 2; ++k) {
    const double theta = (2.0 * k - 1.0) * kPi / (2.0 * order);
    const Complex cheb1(-std::sinh(mu) * std::sin(theta),
                        std::cosh(mu) * std::cos(theta));
    const Complex pole = 1.0 / cheb1;
    const Complex zero(0.0, 1.0 / std::cos(theta));
    poles.push_back(bilinear(pole * warped));
    zeros.push_back(bilinear(zero * warped));
  }

  // Poles farthest from the unit circle go first; each takes the nearest
  // remaining zero pair.
  std::sort(poles.begin(), poles.end(), [](Complex a, Complex b) {
    return std::abs(a) < std::abs(b);
  });
  FilterSections sections;
  std::vector<bool> used(zeros.size(), false);
  for (const Complex& pole : poles) {
    std::size_t best = zeros.size();
    for (std::size_t z = 0; z < zeros.size(); ++z) {
      if (used[z]) continue;
      if (best == zeros.size() ||
          std::abs(zeros[z] - pole) < std::abs(zeros[best] - pole)) {
        best = z;
      }
    }
    used[best] = true;
    const Complex zero = zeros[best];
    Biquad section;
    section.a = {1.0, -2.0 * pole.real(), std::norm(pole)};
    const std::array<double, 3> num = {1.0, -2.0 * zero.real(),
                                       std::norm(zero)};
    const double dc_gain = (section.a[0] + section.a[1] + section.a[2]) /
                           (num[0] + num[1] + num[2]);
    for (int i = 0; i < 3; ++i) section.b[i] = num[i] * dc_gain;
    sections.push_back(section);
  }
  return sections;
}

std::complex<double> FrequencyResponse(const FilterSections& sections,
                                       double frequency_hz,
                                       double sample_rate) {
  const double omega = 2.0 * std::numbers::pi * frequency_hz / sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const Biquad& s : sections) {
    h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) /
         (s.a[0] + s.a[1] * z1 + s.a[2] * z2);
  }
  return h;
}

AudioClip ApplyFilter(const FilterSections& sections, const AudioClip& clip) {
  clip.Validate();
  for (const Biquad& s : sections) {
    if (s.a[0] == 0.0) InvalidParameter("biquad with a0 == 0");
  }
  std::vector<double> signal(clip.samples.begin(), clip.samples.end());
  for (const Biquad& s : sections) {
    const double b0 = s.b[0] / s.a[0], b1 = s.b[1] / s.a[0],
                 b2 = s.b[2] / s.a[0];
    const double a1 = s.a[1] / s.a[0], a2 = s.a[2] / s.a[0];
    double z1 = 0.0, z2 = 0.0;
    for (double& x : signal) {
      const double y = b0 * x + z1;
      z1 = b1 * x - a1 * y + z2;
      z2 = b2 * x - a2 * y;
      x = y;
    }
  }
  AudioClip out{std::vector<float>(signal.size()), clip.sample_rate};
  std::transform(signal.begin(), signal.end(), out.samples.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

double CombFeedback(double room_size) {
  return kScaleRoom * room_size + kOffsetRoom;
}

AudioClip ApplyReverb(const AudioClip& clip, double room_size,
                      const FreeverbSettings& settings) {
  ValidateRoomSize(room_size);
  clip.Validate();
  return {RunFreeverb(clip.samples, clip.samples.size(), clip.sample_rate,
                      room_size, settings),
          clip.sample_rate};
}

AudioClip ApplyReverbPadded(const AudioClip& clip, double room_size,
                            std::size_t tail_samples,
                            const FreeverbSettings& settings) {
  ValidateRoomSize(room_size);
  clip.Validate();
  return {RunFreeverb(clip.samples, clip.samples.size() + tail_samples,
                      clip.sample_rate, room_size, settings),
          clip.sample_rate};
}

AudioClip ApplyBitcrush(const AudioClip& clip, int bit_depth) {
  if (bit_depth < 1 || bit_depth > 32) {
    InvalidParameter(fmt::format("bit depth {} outside [1, 32]", bit_depth));
  }
  clip.Validate();
  const double scale = std::ldexp(1.0, bit_depth - 1);
  const double upper = 1.0 - 1.0 / scale;
  AudioClip out{std::vector<float>(clip.samples.size()), clip.sample_rate};
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    // std::round rounds half away from zero.
    const double q = std::round(static_cast<double>(clip.samples[n]) * scale) /
                     scale;
    out.samples[n] = static_cast<float>(std::clamp(q, -1.0, upper));
  }
  return out;
}

std::vector<double> StrengthRanks(EffectKind effect,
                                  const std::vector<double>& params) {
  std::vector<double> strength(params.size());
  const double sign = effect == EffectKind::kReverb ? 1.0 : -1.0;
  std::transform(params.begin(), params.end(), strength.begin(),
                 [sign](double p) { return sign * p; });
  return stats::RankTransform(strength);
}

namespace {

EffectSweep BuildGrid(EffectKind effect, int steps, double cutoff_max_hz) {
  if (effect != EffectKind::kBitcrush && steps < 2) {
    InvalidParameter(fmt::format("steps must be >= 2, got {}", steps));
  }
  EffectSweep sweep;
  sweep.effect = effect;
  switch (effect) {
    case EffectKind::kGain: {
      sweep.params = Linspace(kGainMinDb, kGainMaxDb, steps);
      auto zero = std::find_if(sweep.params.begin(), sweep.params.end(),
                               [](double v) { return std::abs(v) < 1e-9; });
      if (zero != sweep.params.end()) {
        *zero = 0.0;
      } else {
        zero = sweep.params.insert(
            std::upper_bound(sweep.params.begin(), sweep.params.end(), 0.0),
            0.0);
      }
      sweep.neutral_index =
          static_cast<std::size_t>(zero - sweep.params.begin());
      break;
    }
    case EffectKind::kLowPass:
      sweep.params = Logspace(kCutoffMinHz, cutoff_max_hz, steps);
      break;
    case EffectKind::kReverb:
      sweep.params = Linspace(kRoomMin, kRoomMax, steps);
      break;
    case EffectKind::kBitcrush:
      for (int b = kBitDepthMin; b <= kBitDepthMax; ++b) {
        sweep.params.push_back(b);
      }
      break;
  }
  sweep.ranks = StrengthRanks(effect, sweep.params);
  return sweep;
}

}  // namespace

EffectSweep MakeSweep(EffectKind effect, std::vector<double> params) {
  EffectSweep sweep;
  sweep.effect = effect;
  sweep.params = std::move(params);
  if (effect == EffectKind::kGain) {
    const auto zero = std::find(sweep.params.begin(), sweep.params.end(), 0.0);
    if (zero != sweep.params.end()) {
      sweep.neutral_index =
          static_cast<std::size_t>(zero - sweep.params.begin());
    }
  }
  sweep.ranks = StrengthRanks(effect, sweep.params);
  sweep.Validate();
  return sweep;
}

EffectSweep BuildParameterGrid(EffectKind effect, int steps) {
  return BuildGrid(effect, steps, kCutoffMaxHz);
}

EffectSweep BuildParameterGridForRate(EffectKind effect, int steps,
                                      int sample_rate) {
  if (sample_rate <= 0) InvalidParameter("sample_rate must be positive");
  const double upper = std::min(kCutoffMaxHz, 0.9 * sample_rate / 2.0);
  if (effect == EffectKind::kLowPass && upper <= kCutoffMinHz) {
    InvalidParameter(fmt::format(
        "sample rate {} too low for the low-pass grid", sample_rate));
  }
  return BuildGrid(effect, steps, upper);
}

AudioClip ApplyEffect(EffectKind effect, double param, const AudioClip& clip) {
  switch (effect) {
    case EffectKind::kGain:
      return ApplyGain(clip, param);
    case EffectKind::kLowPass:
      return ApplyFilter(DesignCheby2LowPass(param, clip.sample_rate), clip);
    case EffectKind::kReverb:
      return ApplyReverb(clip, param);
    case EffectKind::kBitcrush:
      if (param != std::round(param)) {
        InvalidParameter(fmt::format("bit depth {} is not an integer", param));
      }
      return ApplyBitcrush(clip, static_cast<int>(param));
  }
  InvalidParameter("unknown effect");
}

}  // namespace embsense::dsp
