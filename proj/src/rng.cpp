#include "pexp/rng.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace pexp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t v : path) {
    h = splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
  }
  return h;
}

Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

int resolve_threads(int requested) {
  if (const char* env = std::getenv("PEXP_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
      // malformed value falls through to the flag
    }
  }
  if (requested > 0) return requested;
  return omp_get_max_threads();
}

void set_threads(int requested) { omp_set_num_threads(resolve_threads(requested)); }

}  // namespace pexp
