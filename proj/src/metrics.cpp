#include "mlgt/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "mlgt/prng.hpp"
#include "mlgt/util.hpp"

namespace mlgt {

std::vector<int> rank_labels(const std::vector<double>& scores,
                             const std::vector<double>& margin_sums, int count) {
    int d = static_cast<int>(scores.size());
    if (count < 0 || count > d) throw std::invalid_argument("rank_labels: bad count");
    if (!margin_sums.empty() && margin_sums.size() != scores.size()) {
        throw std::invalid_argument("rank_labels: margin vector length mismatch");
    }
    std::vector<int> order(d);
    for (int j = 0; j < d; ++j) order[j] = j;
    auto better = [&](int x, int y) {
        if (scores[x] != scores[y]) return scores[x] > scores[y];
        if (!margin_sums.empty() && margin_sums[x] != margin_sums[y]) {
            return margin_sums[x] > margin_sums[y];
        }
        return x < y;
    };
    std::partial_sort(order.begin(), order.begin() + count, order.end(), better);
    order.resize(count);
    return order;
}

std::vector<int> ordered_predictions(const DecodeResult& pred, int count) {
    int d = static_cast<int>(pred.scores.size());
    if (count > d) throw std::invalid_argument("ordered_predictions: count exceeds label count");
    std::vector<int> ranked;
    ranked.reserve(count);

    auto better = [&](int x, int y) {
        if (pred.scores[x] != pred.scores[y]) return pred.scores[x] > pred.scores[y];
        if (!pred.margin_sums.empty() && pred.margin_sums[x] != pred.margin_sums[y]) {
            return pred.margin_sums[x] > pred.margin_sums[y];
        }
        return x < y;
    };
    std::vector<int> support = pred.support;
    std::sort(support.begin(), support.end(), better);
    for (int j : support) {
        if (static_cast<int>(ranked.size()) == count) break;
        ranked.push_back(j);
    }
    if (static_cast<int>(ranked.size()) < count) {
        std::vector<std::uint8_t> taken(d, 0);
        for (int j : ranked) taken[j] = 1;
        std::vector<int> rest;
        rest.reserve(d - ranked.size());
        for (int j = 0; j < d; ++j) {
            if (!taken[j]) rest.push_back(j);
        }
        int need = count - static_cast<int>(ranked.size());
        std::partial_sort(rest.begin(), rest.begin() + need, rest.end(), better);
        ranked.insert(ranked.end(), rest.begin(), rest.begin() + need);
    }
    return ranked;
}

namespace {

int hits_in(std::span<const int> picks, std::span<const int> y) {
    int hits = 0;
    for (int j : picks) {
        if (std::binary_search(y.begin(), y.end(), j)) ++hits;
    }
    return hits;
}

}  // namespace

double precision_at_k(const std::vector<double>& scores, std::span<const int> y, int k) {
    if (k < 1) throw std::invalid_argument("precision_at_k: k must be positive");
    if (k > static_cast<int>(scores.size())) {
        throw std::invalid_argument("precision_at_k: k exceeds label count");
    }
    std::vector<int> top = rank_labels(scores, {}, k);
    return static_cast<double>(hits_in(top, y)) / static_cast<double>(k);
}

double modified_precision_at_k(const DecodeResult& pred, std::span<const int> y, int k) {
    if (k != 1 && k != 3 && k != 5) {
        throw std::invalid_argument("modified_precision_at_k: k must be 1, 3 or 5");
    }
    std::vector<int> top5 = ordered_predictions(pred, 5);
    int hits = hits_in(top5, y);
    return static_cast<double>(std::min(k, hits)) / static_cast<double>(k);
}

double hamming_loss(std::span<const int> predicted, std::span<const int> truth) {
    std::vector<int> diff;
    std::set_symmetric_difference(predicted.begin(), predicted.end(), truth.begin(),
                                  truth.end(), std::back_inserter(diff));
    return static_cast<double>(diff.size());
}

std::string EvalReport::to_csv() const {
    std::string csv = "metric,k,value,n_test\n";
    const int ks[3] = {1, 3, 5};
    for (int i = 0; i < 3; ++i) {
        csv += "P," + std::to_string(ks[i]) + "," + format_double(p_at[i]) + "," +
               std::to_string(n_test) + "\n";
    }
    for (int i = 0; i < 3; ++i) {
        csv += "Pi," + std::to_string(ks[i]) + "," + format_double(pi_at[i]) + "," +
               std::to_string(n_test) + "\n";
    }
    csv += "hamming,," + format_double(hamming) + "," + std::to_string(n_test) + "\n";
    return csv;
}

void save_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << report.to_csv();
    if (!out) throw std::runtime_error("write failed: " + path);
}

DecodeResult decode_with(const GroupTestingMatrix& a, const ReducedLabel& z,
                         DecodeMethod method, int k) {
    switch (method) {
        case DecodeMethod::LINEAR: return linear_decode(a, z);
        case DecodeMethod::TOPK: return topk_score_decode(a, z, k);
        case DecodeMethod::PEELING: return saffron_peel_decode(a, z, k);
    }
    throw std::logic_error("unknown decode method");
}

ReductionLoss reduction_loss(const GroupTestingMatrix& a, DecodeMethod method,
                             const Dataset& ds, std::int64_t sample_size,
                             std::uint64_t seed, const ReducedPredictor& predictor) {
    if (sample_size < 1 || sample_size > ds.n()) {
        throw std::invalid_argument("reduction_loss: bad sample size");
    }
    SplitMix64 rng(derive_seed(seed, 0x1055));
    std::vector<std::int64_t> sample = sample_without_replacement(ds.n(), sample_size, rng);

    double r_total = 0.0;
    double t_total = 0.0;
    int k = std::min(5, a.d);  // the evaluation slot budget
    for (std::int64_t row : sample) {
        auto y = ds.labels(row);
        if (y.empty()) {
            // nothing to recover; an exact decoder outputs nothing
            continue;
        }
        ReducedLabel z = boolean_reduce(a, y);
        DecodeResult res = decode_with(a, z, method, k);
        r_total += hamming_loss(res.support, y);
        if (predictor) {
            ReducedLabel zp = predictor(row);
            DecodeResult rp = decode_with(a, zp, method, k);
            t_total += hamming_loss(rp.support, y);
        }
    }
    ReductionLoss out;
    out.r_loss = r_total / static_cast<double>(sample.size());
    if (predictor) out.t_loss = t_total / static_cast<double>(sample.size());
    return out;
}

}  // namespace mlgt
