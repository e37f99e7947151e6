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

#include "embsense/emb1.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include <fmt/format.h>

#include "embsense/error.hpp"
#include "embsense/fileio.hpp"

namespace embsense {

namespace {

constexpr std::string_view kMagic = "EMB1";
constexpr std::size_t kHeaderBytes = 16;
// Payloads beyond 2^46 bytes (64 TiB) are rejected as overflow.
constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 46;

void PutU32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFFu));
  }
}

std::uint32_t GetU32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(
             static_cast<unsigned char>(bytes[offset + k]))
         << (8 * k);
  }
  return v;
}

[[noreturn]] void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, "EMB1: " + message);
}

}  // namespace

std::string EncodeEmb1(const Emb1Container& c) {
  if (static_cast<std::uint64_t>(c.rows) * c.cols != c.values.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "EMB1 payload size does not match rows * cols");
  }
  const std::string trailer = c.trailer.dump();
  if (trailer.size() > std::numeric_limits<std::uint32_t>::max()) {
    Fail(ErrorCode::kDimensionOverflow, "trailer too large");
  }
  std::string out;
  out.reserve(kHeaderBytes + 4 * c.values.size() + 4 + trailer.size());
  out.append(kMagic);
  PutU32(out, kEmb1Version);
  PutU32(out, c.rows);
  PutU32(out, c.cols);
  for (float v : c.values) PutU32(out, std::bit_cast<std::uint32_t>(v));
  PutU32(out, static_cast<std::uint32_t>(trailer.size()));
  out.append(trailer);
  return out;
}

Emb1Container DecodeEmb1(std::string_view bytes) {
  if (bytes.size() < kMagic.size()) Fail(ErrorCode::kTruncated, "no magic");
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    Fail(ErrorCode::kBadMagic, "file does not start with 'EMB1'");
  }
  if (bytes.size() < kHeaderBytes) Fail(ErrorCode::kTruncated, "short header");
  const std::uint32_t version = GetU32(bytes, 4);
  if (version != kEmb1Version) {
    Fail(ErrorCode::kVersionMismatch,
         fmt::format("version {} (expected {})", version, kEmb1Version));
  }
  Emb1Container c;
  c.rows = GetU32(bytes, 8);
  c.cols = GetU32(bytes, 12);

  const std::uint64_t elements = static_cast<std::uint64_t>(c.rows) * c.cols;
  if (elements > kMaxPayloadBytes / 4) {
    Fail(ErrorCode::kDimensionOverflow,
         fmt::format("{} x {} payload is too large", c.rows, c.cols));
  }
  const std::uint64_t payload = elements * 4;
  if (bytes.size() - kHeaderBytes < payload) {
    Fail(ErrorCode::kTruncated,
         fmt::format("{} x {} payload needs {} bytes, {} available", c.rows,
                     c.cols, payload, bytes.size() - kHeaderBytes));
  }
  c.values.resize(static_cast<std::size_t>(elements));
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    c.values[k] = std::bit_cast<float>(GetU32(bytes, kHeaderBytes + 4 * k));
  }

  std::size_t offset = kHeaderBytes + static_cast<std::size_t>(payload);
  if (bytes.size() - offset < 4) {
    Fail(ErrorCode::kTruncated, "missing trailer length");
  }
  const std::uint32_t trailer_len = GetU32(bytes, offset);
  offset += 4;
  if (bytes.size() - offset < trailer_len) {
    Fail(ErrorCode::kTruncated, "trailer shorter than its length prefix");
  }
  if (bytes.size() - offset > trailer_len) {
    Fail(ErrorCode::kMalformedTrailer, "trailing bytes after the trailer");
  }
  try {
    c.trailer = nlohmann::json::parse(bytes.substr(offset, trailer_len));
  } catch (const nlohmann::json::exception& ex) {
    Fail(ErrorCode::kMalformedTrailer, ex.what());
  }
  if (!c.trailer.is_object()) {
    Fail(ErrorCode::kMalformedTrailer, "trailer is not a JSON object");
  }
  return c;
}

std::string EncodeEmbeddings(const EmbeddingMatrix& m) {
  m.Validate();
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    Fail(ErrorCode::kDimensionOverflow, "matrix too large");
  }
  Emb1Container c;
  c.rows = static_cast<std::uint32_t>(m.rows());
  c.cols = static_cast<std::uint32_t>(m.cols());
  c.values.assign(m.data.data(), m.data.data() + m.data.size());
  c.trailer = {{"sample_ids", m.sample_ids},
               {"class_labels", m.class_labels},
               {"condition", m.condition.ToJson()},
               {"producer", m.producer}};
  return EncodeEmb1(c);
}

EmbeddingMatrix DecodeEmbeddings(std::string_view bytes) {
  Emb1Container c = DecodeEmb1(bytes);
  EmbeddingMatrix m;
  try {
    m.sample_ids =
        c.trailer.at("sample_ids").get<std::vector<std::string>>();
    m.class_labels =
        c.trailer.at("class_labels").get<std::vector<std::string>>();
    m.condition = Condition::FromJson(c.trailer.at("condition"));
    m.producer = c.trailer.value("producer", nlohmann::json::object());
  } catch (const nlohmann::json::exception& ex) {
    Fail(ErrorCode::kMalformedTrailer, ex.what());
  }
  if (m.sample_ids.size() != c.rows || m.class_labels.size() != c.rows) {
    Fail(ErrorCode::kMalformedTrailer,
         fmt::format("trailer lists {} ids for {} rows", m.sample_ids.size(),
                     c.rows));
  }
  m.data = Eigen::Map<const FloatMatrix>(c.values.data(), c.rows, c.cols);
  m.Validate();
  return m;
}

void WriteEmbeddings(const EmbeddingMatrix& m,
                     const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeEmbeddings(m));
}

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path) {
  return DecodeEmbeddings(ReadFileBytes(path));
}

}  // namespace embsense
