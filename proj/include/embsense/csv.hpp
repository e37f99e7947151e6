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

#ifndef EMBSENSE_CSV_HPP_
#define EMBSENSE_CSV_HPP_

#include <initializer_list>
#include <string>
#include <string_view>

namespace embsense::csv {

// RFC 4180 quoting, applied only when the field needs it.
inline std::string Field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string Row(std::initializer_list<std::string_view> fields) {
  std::string out;
  bool first = true;
  for (std::string_view f : fields) {
    if (!first) out += ',';
    out += Field(f);
    first = false;
  }
  out += '\n';
  return out;
}

inline std::string RunIdHeader(std::string_view run_id) {
  return "# run_id: " + std::string(run_id) + "\n";
}

}  // namespace embsense::csv

#endif  // EMBSENSE_CSV_HPP_
