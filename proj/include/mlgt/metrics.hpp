#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlgt/codec.hpp"
#include "mlgt/dataset.hpp"
#include "mlgt/gt.hpp"

namespace mlgt {

// Label indices ranked by (score desc, margin sum desc, index asc), truncated
// to `count`. margin_sums may be empty.
std::vector<int> rank_labels(const std::vector<double>& scores,
                             const std::vector<double>& margin_sums, int count);

// The decoder's support first (in rank order), then the best-ranked
// non-support labels until `count` entries.
std::vector<int> ordered_predictions(const DecodeResult& pred, int count);

// Fraction of the k top-scored labels that are true. Ties by smaller index.
double precision_at_k(const std::vector<double>& scores, std::span<const int> y, int k);

// min(k, hits among the top 5 predictions) / k; pads the support to 5 ranked
// labels from the score vector when the decoder returned fewer.
double modified_precision_at_k(const DecodeResult& pred, std::span<const int> y, int k);

// Count of disagreeing coordinates between two sorted support lists.
double hamming_loss(std::span<const int> predicted, std::span<const int> truth);

struct EvalReport {
    double p_at[3] = {0.0, 0.0, 0.0};   // k = 1, 3, 5
    double pi_at[3] = {0.0, 0.0, 0.0};  // k = 1, 3, 5
    double hamming = 0.0;
    std::int64_t n_test = 0;

    std::string to_csv() const;
};

void save_report(const EvalReport& report, const std::string& path);

struct ReductionLoss {
    double r_loss = 0.0;
    std::optional<double> t_loss;
};

using ReducedPredictor = std::function<ReducedLabel(std::int64_t row)>;

// Mean Hamming loss of decode(reduce(y)) over a sampled subset of training
// rows, decoding at the shared evaluation budget min(5, d). When a predictor
// is supplied, t_loss additionally runs decode(predict(x)) on the same rows.
ReductionLoss reduction_loss(const GroupTestingMatrix& a, DecodeMethod method,
                             const Dataset& ds, std::int64_t sample_size,
                             std::uint64_t seed,
                             const ReducedPredictor& predictor = nullptr);

// Dispatch to the decoder named by `method` (TOPK/PEELING decode at
// sparsity k).
DecodeResult decode_with(const GroupTestingMatrix& a, const ReducedLabel& z,
                         DecodeMethod method, int k);

}  // namespace mlgt
