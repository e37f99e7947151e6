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

#ifndef EMBSENSE_WAV_HPP_
#define EMBSENSE_WAV_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "embsense/effects.hpp"

namespace embsense::wav {

// PCM 16-bit or IEEE float 32-bit; channels are averaged down to mono.
// No resampling.
dsp::AudioClip Decode(std::string_view bytes);
dsp::AudioClip Read(const std::filesystem::path& path);

// Mono IEEE float 32-bit; values outside [-1, 1] round-trip bit-exactly.
std::string EncodeFloat32(const dsp::AudioClip& clip);
void WriteFloat32(const dsp::AudioClip& clip,
                  const std::filesystem::path& path);

// Mono PCM 16-bit with clamping; used for interoperability tests.
std::string EncodePcm16(const dsp::AudioClip& clip);

}  // namespace embsense::wav

#endif  // EMBSENSE_WAV_HPP_
