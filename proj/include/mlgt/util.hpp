#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace mlgt {

// Runs fn(i) for i in [begin, end) across up to `threads` worker threads.
// Work is split into contiguous chunks; callers must write only to
// per-index slots so the result is identical for any thread count.
void parallel_for(std::int64_t begin, std::int64_t end, int threads,
                  const std::function<void(std::int64_t)>& fn);

int default_threads();

// Shortest round-trip decimal form (%.17g semantics) used by every text
// emitter so identical runs produce byte-identical files.
std::string format_double(double v);

}  // namespace mlgt
