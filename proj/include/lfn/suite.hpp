#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "engine.hpp"

namespace lfn {

// Worker count for Monte Carlo suites: LFN_THREADS if set, else the
// hardware concurrency.
inline unsigned suite_threads() {
  if (const char* env = std::getenv("LFN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs one simulation per seed. Results come back in seed order whatever
// the scheduling; the first failure is rethrown after all workers finish.
inline std::vector<RunResult> run_suite(const ScenarioConfig& cfg, std::span<const std::uint64_t> seeds,
                                        const RunOptions& opt = {}, unsigned threads = 0) {
  std::vector<RunResult> results(seeds.size());
  if (threads == 0) threads = suite_threads();
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failed_index = seeds.size();
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      try {
        results[k] = run(cfg, seeds[k], opt);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (k < failed_index) {
          failed_index = k;
          failure = std::current_exception();
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

// Element-wise mean of the suite's collection-window densities.
inline FlowTriple mean_flows(std::span<const RunResult> runs) {
  if (runs.empty()) throw InsufficientData("mean_flows: empty suite");
  FlowTriple acc = runs.front().flows;
  for (std::size_t k = 1; k < runs.size(); ++k)
    for (auto d : kFlowDimensions) acc[d] += runs[k].flows[d];
  for (auto d : kFlowDimensions) acc[d] *= 1.0 / static_cast<double>(runs.size());
  return acc;
}

// Deterministic seed block for suite `block` of size m.
inline std::vector<std::uint64_t> seed_block(std::uint64_t base, std::size_t block, std::size_t m) {
  std::vector<std::uint64_t> seeds(m);
  for (std::size_t k = 0; k < m; ++k) seeds[k] = base + block * m + k;
  return seeds;
}

}  // namespace lfn
