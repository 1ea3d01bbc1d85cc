#ifndef PEXP_RNG_HPP
#define PEXP_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pexp {

using Rng = std::mt19937_64;

/// Deterministic sub-stream keyed by a master seed and an index path, e.g.
/// (seed, n-index, replicate) or (seed, block). Two different paths give
/// statistically independent generators; the same path always gives the same
/// generator, which is what makes the parallel kernels order-independent.
Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// 64-bit mix of a master seed and an index path (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

/// Uniform in the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random bits, shifted half a step off zero.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Number of worker threads: PEXP_THREADS env var if set, else `requested`
/// if positive, else the OpenMP default.
int resolve_threads(int requested);

/// Applies resolve_threads() to the OpenMP runtime.
void set_threads(int requested);

}  // namespace pexp

#endif  // PEXP_RNG_HPP
