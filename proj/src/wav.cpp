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

#include "embsense/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

#include "embsense/error.hpp"
#include "embsense/fileio.hpp"

namespace embsense::wav {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t U32(std::string_view b, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1]))
             << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2]))
             << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3]))
             << 24;
}

std::uint16_t U16(std::string_view b, std::size_t off) {
  return static_cast<std::uint16_t>(
      static_cast<unsigned char>(b[off]) |
      static_cast<unsigned char>(b[off + 1]) << 8);
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>(v >> s));
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kInvalidInput, "WAV: " + what);
}

std::string Header(std::uint16_t format, std::uint16_t bits,
                   std::uint32_t rate, std::uint32_t data_bytes) {
  std::string out;
  out.append("RIFF");
  PutU32(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  PutU32(out, 16);
  PutU16(out, format);
  PutU16(out, 1);
  PutU32(out, rate);
  PutU32(out, rate * (bits / 8));
  PutU16(out, static_cast<std::uint16_t>(bits / 8));
  PutU16(out, bits);
  out.append("data");
  PutU32(out, data_bytes);
  return out;
}

}  // namespace

dsp::AudioClip Decode(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" ||
      bytes.substr(8, 4) != "WAVE") {
    Malformed("missing RIFF/WAVE header");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::string_view data;
  bool have_data = false;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(off, 4);
    const std::uint32_t size = U32(bytes, off + 4);
    const std::size_t body = off + 8;
    if (size > bytes.size() - body) Malformed("chunk runs past end of file");
    if (id == "fmt ") {
      if (size < 16) Malformed("short fmt chunk");
      format = U16(bytes, body);
      channels = U16(bytes, body + 2);
      rate = U32(bytes, body + 4);
      bits = U16(bytes, body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = U16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.substr(body, size);
      have_data = true;
    }
    off = body + size + (size & 1u);
  }
  if (!have_fmt || !have_data) Malformed("missing fmt or data chunk");
  if (channels == 0) Malformed("zero channels");
  if (rate == 0) Malformed("zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    Malformed(fmt::format("unsupported encoding (format {}, {} bits)", format,
                          bits));
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) *
                                  (bits / 8);
  const std::size_t frames = data.size() / frame_bytes;
  dsp::AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::size_t at = f * frame_bytes + ch * (bits / 8);
      if (pcm16) {
        sum += static_cast<std::int16_t>(U16(data, at)) / 32768.0;
      } else {
        sum += std::bit_cast<float>(U32(data, at));
      }
    }
    clip.samples[f] = channels == 1 ? static_cast<float>(sum)
                                    : static_cast<float>(sum / channels);
  }
  return clip;
}

dsp::AudioClip Read(const std::filesystem::path& path) {
  try {
    return Decode(ReadFileBytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string EncodeFloat32(const dsp::AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 4);
  std::string out = Header(kFormatFloat, 32,
                           static_cast<std::uint32_t>(clip.sample_rate),
                           data_bytes);
  for (float s : clip.samples) PutU32(out, std::bit_cast<std::uint32_t>(s));
  return out;
}

void WriteFloat32(const dsp::AudioClip& clip,
                  const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeFloat32(clip));
}

std::string EncodePcm16(const dsp::AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out = Header(kFormatPcm, 16,
                           static_cast<std::uint32_t>(clip.sample_rate),
                           data_bytes);
  for (float s : clip.samples) {
    const double scaled =
        std::clamp(std::round(static_cast<double>(s) * 32768.0), -32768.0,
                   32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

}  // namespace embsense::wav
