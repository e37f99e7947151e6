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

#ifndef EMBSENSE_FILEIO_HPP_
#define EMBSENSE_FILEIO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace embsense {

std::string ReadFileBytes(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place. Parent
// directories are created as needed.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view bytes);

}  // namespace embsense

#endif  // EMBSENSE_FILEIO_HPP_
