#pragma once

#include <cstddef>
#include <functional>

namespace isingforage {

/// Runs task(0) .. task(count - 1) on up to `workers` threads (0 means the
/// hardware concurrency). Tasks must write only to their own index; results
/// are therefore independent of the worker count. The first exception thrown
/// by any task is rethrown after all workers have stopped.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task);

std::size_t resolve_workers(std::size_t requested) noexcept;

}  // namespace isingforage
