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

#ifndef EMBSENSE_PARALLEL_HPP_
#define EMBSENSE_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace embsense {

// Calls fn(i) for i in [0, n) on up to `workers` threads. Tasks must write
// only to their own output slot; callers assemble results by index. If any
// task throws, the exception from the lowest failing index is rethrown after
// all threads join.
void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn);

}  // namespace embsense

#endif  // EMBSENSE_PARALLEL_HPP_
