#include "spdebias/random.hpp"

#include <numeric>
#include <vector>

namespace spdebias {

std::uint64_t child_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(root));
  words.push_back(static_cast<std::uint32_t>(root >> 32));
  for (std::uint64_t p : path) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

std::int64_t poisson(Rng& rng, double mean) {
  if (!(mean >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Poisson mean must be >= 0");
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

std::int64_t binomial(Rng& rng, std::int64_t trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

CountVector multivariate_hypergeometric(Rng& rng, const CountVector& category_sizes,
                                        std::int64_t draws) {
  std::int64_t remaining = std::accumulate(category_sizes.begin(), category_sizes.end(),
                                           std::int64_t{0});
  if (draws < 0 || draws > remaining) {
    throw Error(ErrorCode::InconsistentCounts, "cannot draw more units than the population");
  }
  CountVector out(category_sizes.size(), 0);
  std::int64_t needed = draws;
  // Selection sampling: each unit is taken with probability needed/remaining.
  for (std::size_t c = 0; c < category_sizes.size() && needed > 0; ++c) {
    if (needed == remaining) {
      out[c] = category_sizes[c];
      needed -= category_sizes[c];
      remaining -= category_sizes[c];
      continue;
    }
    for (std::int64_t u = 0; u < category_sizes[c]; ++u) {
      if (static_cast<double>(remaining) * uniform01(rng) < static_cast<double>(needed)) {
        ++out[c];
        --needed;
      }
      --remaining;
      if (needed == 0) break;
    }
  }
  return out;
}

}  // namespace spdebias
