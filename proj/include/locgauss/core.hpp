#pragma once

#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace locgauss {

// One row per trading day, one column per intraday increment.
template <typename Scalar>
using DayMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DayMatrix = DayMatrixT<double>;

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vector = VectorT<double>;

using Engine = std::mt19937_64;
// Ziggurat sampler; several times faster than std::normal_distribution.
using NormalDist = boost::random::normal_distribution<double>;

// splitmix64 finalizer; used to derive independent sub-streams from a master seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for sub-stream `index` of family `stream` under `master`. Results depend only on
// the triple, never on which worker consumes it.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(mix64(master) ^ stream) + index);
}

inline Engine make_engine(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
  return Engine(derive_seed(master, stream, index));
}

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

// Runs body(i) for i in [0, count) over `threads` workers with static striping.
// body must only write to slots owned by index i.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = 0) {
  if (threads == 0) threads = default_threads();
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace locgauss
