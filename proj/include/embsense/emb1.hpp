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

// EMB1 embedding interchange format.
//
//   offset  size         content
//   0       4            magic "EMB1"
//   4       4            u32 LE version (= 1)
//   8       4            u32 LE rows
//   12      4            u32 LE cols
//   16      4*rows*cols  float32 LE payload, row-major
//   ...     4            u32 LE trailer length L
//   ...     L            UTF-8 JSON trailer
//
// For embedding matrices the trailer carries sample_ids, class_labels,
// condition and producer. Projector files reuse the container with their own
// trailer keys (see projection.hpp).

#ifndef EMBSENSE_EMB1_HPP_
#define EMBSENSE_EMB1_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "embsense/embedding.hpp"

namespace embsense {

inline constexpr std::uint32_t kEmb1Version = 1;

struct Emb1Container {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;  // rows * cols, row-major
  nlohmann::json trailer = nlohmann::json::object();
};

std::string EncodeEmb1(const Emb1Container& container);
// Errors: kBadMagic, kVersionMismatch, kTruncated, kDimensionOverflow,
// kMalformedTrailer.
Emb1Container DecodeEmb1(std::string_view bytes);

void WriteEmbeddings(const EmbeddingMatrix& m,
                     const std::filesystem::path& path);
EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path);

std::string EncodeEmbeddings(const EmbeddingMatrix& m);
EmbeddingMatrix DecodeEmbeddings(std::string_view bytes);

}  // namespace embsense

#endif  // EMBSENSE_EMB1_HPP_
