#pragma once

#include <cstddef>
#include <functional>

namespace supou {

// Worker count: `requested` if > 0, else SUPOU_THREADS if set and > 0, else
// the hardware concurrency (at least 1).
[[nodiscard]] unsigned resolve_threads(unsigned requested = 0);

// Calls body(i) for i in [0, n) over contiguous blocks, one block per worker.
// The partition does not affect results as long as body(i) only writes slot i.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace supou
