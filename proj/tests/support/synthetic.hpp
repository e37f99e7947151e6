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

// Synthetic trajectory sets with known deformation geometry.

#ifndef EMBSENSE_TESTS_SUPPORT_SYNTHETIC_HPP_
#define EMBSENSE_TESTS_SUPPORT_SYNTHETIC_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "embsense/embedding.hpp"
#include "embsense/numstats.hpp"

namespace embsense::testing {

stats::Matrix RandomGaussian(Eigen::Index rows, Eigen::Index cols,
                             std::mt19937_64& rng);

// Assembles a trajectory set from double rows: clean is N x d, effected[p]
// is N x d. Sample ids are "s000", ...; the sweep is a reverb grid of size P
// (strength ranks 1..P, no neutral point).
TrajectorySet MakeTrajectorySet(const stats::Matrix& clean,
                                const std::vector<stats::Matrix>& effected,
                                const std::vector<std::string>& labels);

// x^i_p = x^i + rank(p) * v with every x^i orthogonal to v. All values are
// exactly representable in float32.
struct SharedLinear {
  TrajectorySet traj;
  stats::Vector v;  // unit deformation direction
};
SharedLinear MakeSharedLinear(int n, int d, int p, std::uint64_t seed);

// x^i_p = x^i + rank(p) * w_i with the w_i mutually orthogonal (n <= d).
struct PerSampleOrthogonal {
  TrajectorySet traj;
  stats::Matrix w;  // n x d, orthonormal rows
};
PerSampleOrthogonal MakePerSampleOrthogonal(int n, int d, int p,
                                            std::uint64_t seed);

// Two classes separated along q and deformed along a unit v orthogonal to
// every clean row: class c0 by 0.5 * step * rank(p), class c1 by 1.5 * step *
// rank(p). Within a class the deformation is shared-linear.
struct DeformedClasses {
  TrajectorySet traj;
  stats::Vector v;
  stats::Vector q;
};
DeformedClasses MakeDeformedClasses(int n_per_class, int d, int p,
                                    double separation, double step,
                                    std::uint64_t seed);

}  // namespace embsense::testing

#endif  // EMBSENSE_TESTS_SUPPORT_SYNTHETIC_HPP_
