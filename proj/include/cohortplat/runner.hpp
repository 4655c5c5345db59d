#pragma once

// Parallel execution of many trials. Iteration k of scenario s always runs
// on the stream derive(seed, s, k), whatever the number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cohortplat/error.hpp"
#include "cohortplat/ocs.hpp"
#include "cohortplat/random.hpp"
#include "cohortplat/scenario.hpp"
#include "cohortplat/trial.hpp"

namespace cohortplat {

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

struct RunOptions {
  std::size_t iterations = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;  // 0 = one per hardware thread
  std::size_t scenario_index = 0;
  // Called from worker threads for every finished trial; must be thread safe.
  std::function<void(std::size_t iteration, const TrialResult&)> on_trial;
  // Called with the number of finished trials, serialized under a lock.
  std::function<void(std::size_t done, std::size_t total)> on_progress;
};

inline OcsAccumulator run_trials(const ScenarioSpec& spec, const RunOptions& opt) {
  if (opt.iterations < 1) throw RuntimeError("iterations must be >= 1");
  const std::size_t workers = std::min(resolve_workers(opt.workers), opt.iterations);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t done = 0;
  std::exception_ptr error;
  std::vector<OcsAccumulator> partial(workers);

  auto work = [&](std::size_t w) {
    try {
      while (!failed.load()) {
        const std::size_t k = next.fetch_add(1);
        if (k >= opt.iterations) break;
        const auto result = simulate_trial(spec, RandomStream::derive(opt.seed, opt.scenario_index, k));
        if (opt.on_trial) opt.on_trial(k, result);
        partial[w].add(k, digest(result, spec));
        if (opt.on_progress) {
          std::lock_guard lock(mu);
          opt.on_progress(++done, opt.iterations);
        }
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  OcsAccumulator acc;
  for (const auto& p : partial) acc.merge(p);
  return acc;
}

inline OperatingCharacteristics run_ocs(const ScenarioSpec& spec, const RunOptions& opt) {
  return finalize(run_trials(spec, opt));
}

// FNV-1a; identifies a scenario in run manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

}  // namespace cohortplat
