#pragma once

#include <cstddef>
#include <functional>

namespace infotraj {

/// Worker count: `requested` if positive, else $INFOTRAJ_WORKERS if set,
/// else the hardware concurrency.
int resolve_workers(int requested);

/// Runs body(begin, end) over a static partition of [0, n). Each index is
/// visited exactly once; results written per index do not depend on the
/// number of workers.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace infotraj
