#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "spdebias/common.hpp"

namespace spdebias {

using Rng = std::mt19937_64;

/// Seed of an independent child stream, a pure function of (root, path).
std::uint64_t child_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);
Rng make_rng(std::uint64_t seed);

std::int64_t poisson(Rng& rng, double mean);
std::int64_t binomial(Rng& rng, std::int64_t trials, double p);
double uniform01(Rng& rng);

/// Counts selected from each category when `draws` of the pooled units are
/// chosen uniformly without replacement.
CountVector multivariate_hypergeometric(Rng& rng, const CountVector& category_sizes,
                                        std::int64_t draws);

}  // namespace spdebias
