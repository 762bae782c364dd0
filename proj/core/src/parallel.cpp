#include "tilt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "tilt/rng.hpp"

namespace tilt {

unsigned default_workers() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t num_tasks, unsigned workers,
                  const std::function<void(std::size_t)>& task) {
  if (num_tasks == 0) return;
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, num_tasks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < num_tasks; ++b) task(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= num_tasks) return;
      try {
        task(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(num_tasks);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

void MomentAccumulator::merge(const MomentAccumulator& other) noexcept {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double n = na + nb;
  const double delta = other.mean - mean;
  mean += delta * nb / n;
  m2 += other.m2 + delta * delta * na * nb / n;
  count += other.count;
}

MomentAccumulator blocked_moments(std::uint64_t n, std::uint64_t seed, unsigned workers,
                                  const std::function<double(Rng&)>& draw) {
  const std::size_t blocks = static_cast<std::size_t>((n + kBlockSize - 1) / kBlockSize);
  std::vector<MomentAccumulator> partial(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng = Rng::stream(seed, b);
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * kBlockSize;
    const std::uint64_t end = std::min<std::uint64_t>(n, begin + kBlockSize);
    MomentAccumulator acc;
    for (std::uint64_t i = begin; i < end; ++i) acc.push(draw(rng));
    partial[b] = acc;
  });
  MomentAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

std::vector<double> replicated_values(std::uint64_t replicates, std::uint64_t seed,
                                      unsigned workers,
                                      const std::function<double(Rng&)>& replicate) {
  constexpr std::size_t kChunk = 16;
  std::vector<double> values(static_cast<std::size_t>(replicates));
  const std::size_t chunks = (values.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(values.size(), (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      Rng rng = Rng::stream(seed, r);
      values[r] = replicate(rng);
    }
  });
  return values;
}

}  // namespace tilt
