#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace relaxmt {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream owned by one (cell, replicate) pair.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t cell,
                                    std::uint64_t replicate) {
  return mix64(mix64(mix64(seed) ^ cell) ^ replicate);
}

/// Worker count: RELAXMT_THREADS if set and positive, else the number of
/// logical cores.
std::size_t default_workers();

/// Calls body(i) for i in [0, count) on up to `workers` threads. Exceptions
/// thrown by body are rethrown (the first one) after all workers finish.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace relaxmt
