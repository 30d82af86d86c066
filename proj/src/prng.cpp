#include "mlgt/prng.hpp"

#include <algorithm>
#include <stdexcept>

namespace mlgt {

std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k,
                                                     SplitMix64& rng) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
    // Partial Fisher-Yates over an index array; fine at desk scale.
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < k; ++i) {
        std::int64_t j = i + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace mlgt
