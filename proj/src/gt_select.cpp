#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mlgt/codec.hpp"
#include "mlgt/gt.hpp"
#include "mlgt/prng.hpp"
#include "mlgt/util.hpp"

namespace mlgt {

namespace {

// Decodes at the evaluation slot budget (5), matching how predictions are
// consumed downstream; per-row-sparsity decoding would understate the loss.
double reduce_decode_loss(const GroupTestingMatrix& a, const Dataset& ds,
                          const std::vector<std::int64_t>& sample) {
    double total = 0.0;
    int k = std::min(5, a.d);
    for (std::int64_t row : sample) {
        auto y = ds.labels(row);
        if (y.empty()) continue;
        ReducedLabel z = boolean_reduce(a, y);
        DecodeResult res = topk_score_decode(a, z, k);
        std::vector<int> diff;
        std::set_symmetric_difference(y.begin(), y.end(), res.support.begin(),
                                      res.support.end(), std::back_inserter(diff));
        total += static_cast<double>(diff.size());
    }
    return total / static_cast<double>(sample.size());
}

}  // namespace

ColumnWeightChoice select_column_weight(const Dataset& ds, int m,
                                        const std::vector<int>& candidates,
                                        int sample_size, const GtBuilder& builder,
                                        std::uint64_t seed, int threads) {
    if (candidates.empty()) throw std::invalid_argument("select_column_weight: no candidates");
    if (sample_size < 1 || sample_size > ds.n()) {
        throw std::invalid_argument("select_column_weight: bad sample size");
    }
    SplitMix64 rng(derive_seed(seed, 0x5A));
    std::vector<std::int64_t> sample =
        sample_without_replacement(ds.n(), sample_size, rng);

    int nc = static_cast<int>(candidates.size());
    std::vector<double> losses(nc, std::numeric_limits<double>::quiet_NaN());
    parallel_for(0, nc, threads, [&](std::int64_t idx) {
        std::uint64_t cand_seed = derive_seed(seed, 100 + static_cast<std::uint64_t>(idx));
        try {
            GroupTestingMatrix a = builder(ds, m, candidates[idx], cand_seed);
            losses[idx] = reduce_decode_loss(a, ds, sample);
        } catch (const std::exception&) {
            // leave NaN: candidate skipped
        }
    });

    ColumnWeightChoice choice;
    int best = -1;
    for (int idx = 0; idx < nc; ++idx) {
        if (std::isnan(losses[idx])) {
            choice.skipped.push_back(candidates[idx]);
            continue;
        }
        choice.losses.emplace_back(candidates[idx], losses[idx]);
        if (best < 0 || losses[idx] < losses[best] ||
            (losses[idx] == losses[best] && candidates[idx] < candidates[best])) {
            best = idx;
        }
    }
    if (best < 0) throw std::runtime_error("select_column_weight: every candidate failed");
    choice.c = candidates[best];
    return choice;
}

}  // namespace mlgt
