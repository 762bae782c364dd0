#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "tilt/rng.hpp"

namespace tilt {

/// Samples per block. Block `b` of a run always draws from stream `b`, so a
/// run's output does not depend on how blocks are scheduled.
inline constexpr std::size_t kBlockSize = 4096;

/// Worker count used when a caller passes 0.
unsigned default_workers() noexcept;

/// Runs `task(b)` for every b in [0, num_tasks) on up to `workers` threads.
/// Tasks must write only to storage indexed by b.
void parallel_for(std::size_t num_tasks, unsigned workers,
                  const std::function<void(std::size_t)>& task);

/// Streaming mean/second-moment accumulator (Welford), mergeable in a
/// fixed order so reductions are deterministic.
struct MomentAccumulator {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const MomentAccumulator& other) noexcept;

  /// Population variance (divisor count).
  double variance() const noexcept {
    return count > 0 ? m2 / static_cast<double>(count) : 0.0;
  }
  /// Sample variance (divisor count - 1).
  double sample_variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
};

/// Draws `n` values `draw(rng)` split into kBlockSize blocks, block b using
/// Rng::stream(seed, b), and reduces the per-block moments in block order.
MomentAccumulator blocked_moments(std::uint64_t n, std::uint64_t seed, unsigned workers,
                                  const std::function<double(Rng&)>& draw);

/// Evaluates `replicate(rng)` for r in [0, replicates) with Rng::stream(seed, r)
/// and returns the values in replicate order.
std::vector<double> replicated_values(std::uint64_t replicates, std::uint64_t seed,
                                      unsigned workers,
                                      const std::function<double(Rng&)>& replicate);

}  // namespace tilt
