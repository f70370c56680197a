#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

#include "sublab/config.hpp"
#include "sublab/report.hpp"
#include "sublab/scenarios.hpp"

namespace sublab {

inline constexpr const char* kVersion = "1.0.0";

/// SUBLAB_JOBS if set to a positive integer, else the hardware concurrency (at least 1).
int default_jobs();

/// Evaluates fn(0..count-1) on up to `jobs` threads. Results are stored by index,
/// so the output never depends on scheduling; the lowest-index exception is rethrown.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(count, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

/// Runs one experiment; failures inside it are captured in `error`.
ExperimentResult run_experiment(const Scenario& scenario, const ExperimentSpec& spec, int jobs);

/// Builds the scenario and runs every experiment in config order. jobs ≤ 0 means default_jobs().
RunReport run(const ExperimentConfig& config, int jobs = 0);

}  // namespace sublab
