#include "mlgt/codec.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace mlgt {

ReducedLabel reduced_from_margins(const std::vector<double>& margins) {
    ReducedLabel z;
    z.bits.resize(margins.size());
    for (std::size_t i = 0; i < margins.size(); ++i) {
        z.bits[i] = margins[i] > 0.0 ? 1 : 0;
    }
    z.scores = margins;
    return z;
}

ReducedLabel boolean_reduce(const GroupTestingMatrix& a, std::span<const int> y_support) {
    ReducedLabel z;
    z.bits.assign(a.m, 0);
    for (int j : y_support) {
        if (j < 0 || j >= a.d) throw std::invalid_argument("boolean_reduce: label out of range");
        for (int i : a.cols[j]) z.bits[i] = 1;
    }
    return z;
}

namespace {

void check_reduced(const GroupTestingMatrix& a, const ReducedLabel& z) {
    if (z.bits.size() != static_cast<std::size_t>(a.m)) {
        throw std::invalid_argument("decode: reduced vector length does not match group count");
    }
}

// b_j = number of fired groups containing j, plus the margin sums used for
// tie-breaking when margins are present.
void count_scores(const GroupTestingMatrix& a, const ReducedLabel& z, DecodeResult& res) {
    res.scores.assign(a.d, 0.0);
    if (z.has_scores()) res.margin_sums.assign(a.d, 0.0);
    for (int j = 0; j < a.d; ++j) {
        int b = 0;
        double ms = 0.0;
        for (int i : a.cols[j]) {
            if (z.bits[i]) ++b;
            if (z.has_scores()) ms += z.scores[i];
        }
        res.scores[j] = b;
        if (z.has_scores()) res.margin_sums[j] = ms;
    }
}

std::vector<int> top_k_support(const DecodeResult& res, int k) {
    std::vector<int> cand;
    for (int j = 0; j < static_cast<int>(res.scores.size()); ++j) {
        if (res.scores[j] > 0.0) cand.push_back(j);
    }
    auto better = [&](int x, int y) {
        if (res.scores[x] != res.scores[y]) return res.scores[x] > res.scores[y];
        if (!res.margin_sums.empty() && res.margin_sums[x] != res.margin_sums[y]) {
            return res.margin_sums[x] > res.margin_sums[y];
        }
        return x < y;
    };
    int keep = std::min<int>(k, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), better);
    cand.resize(keep);
    std::sort(cand.begin(), cand.end());
    return cand;
}

}  // namespace

DecodeResult linear_decode(const GroupTestingMatrix& a, const ReducedLabel& z) {
    check_reduced(a, z);
    DecodeResult res;
    res.method = DecodeMethod::LINEAR;
    count_scores(a, z, res);
    for (int j = 0; j < a.d; ++j) {
        if (!a.cols[j].empty() && res.scores[j] == static_cast<double>(a.cols[j].size())) {
            res.support.push_back(j);
        }
    }
    return res;
}

DecodeResult topk_score_decode(const GroupTestingMatrix& a, const ReducedLabel& z, int k) {
    check_reduced(a, z);
    if (k < 1 || k > a.d) throw std::invalid_argument("topk_score_decode: bad k");
    DecodeResult res;
    res.method = DecodeMethod::TOPK;
    count_scores(a, z, res);
    res.support = top_k_support(res, k);
    return res;
}

BinDecode saffron_bin_decode(const SignatureMatrix& sig, std::span<const std::uint8_t> v,
                             int known) {
    if (v.size() != static_cast<std::size_t>(sig.m2)) {
        throw std::invalid_argument("saffron_bin_decode: observation length mismatch");
    }
    int b = sig.b;
    bool all_zero = true;
    for (auto bit : v) {
        if (bit) {
            all_zero = false;
            break;
        }
    }
    if (all_zero) return {BinDecode::Type::EMPTY, -1};

    bool xor_all = true;
    for (int t = 0; t < b; ++t) {
        if ((v[t] ^ v[b + t]) != 1) {
            xor_all = false;
            break;
        }
    }
    if (xor_all) {
        int j = 0;
        for (int t = 0; t < b; ++t) j = (j << 1) | v[t];
        if (j < sig.d) {
            bool match = true;
            for (int t = 0; t < sig.m2; ++t) {
                if (sig.bit(t, j) != v[t]) {
                    match = false;
                    break;
                }
            }
            if (match) return {BinDecode::Type::SINGLETON, j};
        }
        return {BinDecode::Type::UNRESOLVED, -1};
    }

    if (known < 0) return {BinDecode::Type::UNRESOLVED, -1};
    if (known >= sig.d) throw std::invalid_argument("saffron_bin_decode: known label out of range");

    int partner = 0;
    for (int t = 0; t < b; ++t) {
        int kb = sig.bit(t, known);
        int hi = v[t];
        int lo = v[b + t];
        int pb;
        if (hi && lo) {
            pb = 1 - kb;  // the two members disagree here
        } else if (hi != lo) {
            pb = hi;  // both members carry the same bit
        } else {
            return {BinDecode::Type::UNRESOLVED, -1};  // not an OR of signatures
        }
        partner = (partner << 1) | pb;
    }
    if (partner >= sig.d) return {BinDecode::Type::UNRESOLVED, -1};
    for (int t = 0; t < sig.m2; ++t) {
        if ((sig.bit(t, known) | sig.bit(t, partner)) != v[t]) {
            return {BinDecode::Type::UNRESOLVED, -1};
        }
    }
    return {BinDecode::Type::RESOLVED_DOUBLETON, partner};
}

DecodeResult saffron_peel_decode(const GroupTestingMatrix& a, const ReducedLabel& z, int k) {
    check_reduced(a, z);
    if (k < 1 || k > a.d) throw std::invalid_argument("saffron_peel_decode: bad k");
    if (a.kind != GtKind::SAFFRON || a.saffron_meta.bin_edges.empty()) {
        throw std::invalid_argument("saffron_peel_decode: matrix carries no bin layout");
    }
    const SaffronMeta& meta = a.saffron_meta;
    SignatureMatrix sig = signature_matrix(a.d);
    if (sig.m2 != meta.m2 || meta.m1 * meta.m2 != a.m) {
        throw std::invalid_argument("saffron_peel_decode: bin layout disagrees with matrix shape");
    }

    std::vector<std::vector<int>> label_bins(a.d);
    for (int i = 0; i < meta.m1; ++i) {
        for (int j : meta.bin_edges[i]) label_bins[j].push_back(i);
    }
    auto bin_view = [&](int i) {
        return std::span<const std::uint8_t>(z.bits.data() + static_cast<std::size_t>(i) * meta.m2,
                                             meta.m2);
    };
    // accepted labels must never claim a bit that is 0 in any of their bins
    auto consistent = [&](int j) {
        for (int i : label_bins[j]) {
            auto v = bin_view(i);
            for (int t = 0; t < meta.m2; ++t) {
                if (sig.bit(t, j) && !v[t]) return false;
            }
        }
        return true;
    };

    DecodeResult res;
    res.method = DecodeMethod::PEELING;
    count_scores(a, z, res);

    std::vector<std::uint8_t> in_p(a.d, 0), queued(a.d, 0);
    std::deque<int> frontier;
    for (int i = 0; i < meta.m1; ++i) {
        ++res.bin_calls_pass1;
        BinDecode out = saffron_bin_decode(sig, bin_view(i));
        if (out.type == BinDecode::Type::SINGLETON && !queued[out.label]) {
            queued[out.label] = 1;
            frontier.push_back(out.label);
        }
    }

    std::vector<int> peeled;
    while (!frontier.empty()) {
        int j = frontier.front();
        frontier.pop_front();
        if (in_p[j]) continue;
        if (!consistent(j)) continue;
        in_p[j] = 1;
        peeled.push_back(j);
        for (int i : label_bins[j]) {
            ++res.bin_calls_peel;
            BinDecode out = saffron_bin_decode(sig, bin_view(i), j);
            int found = -1;
            if (out.type == BinDecode::Type::RESOLVED_DOUBLETON) found = out.label;
            if (out.type == BinDecode::Type::SINGLETON) found = out.label;
            if (found >= 0 && !in_p[found] && !queued[found]) {
                queued[found] = 1;
                frontier.push_back(found);
            }
        }
    }

    bool explained = true;
    for (int i = 0; i < meta.m1 && explained; ++i) {
        auto v = bin_view(i);
        for (int t = 0; t < meta.m2; ++t) {
            int expect = 0;
            for (int j : meta.bin_edges[i]) {
                if (in_p[j] && sig.bit(t, j)) {
                    expect = 1;
                    break;
                }
            }
            if (expect != static_cast<int>(v[t])) {
                explained = false;
                break;
            }
        }
    }

    if (static_cast<int>(peeled.size()) >= k || explained) {
        res.peel_success = true;
        if (static_cast<int>(peeled.size()) > k) {
            auto better = [&](int x, int y) {
                if (res.scores[x] != res.scores[y]) return res.scores[x] > res.scores[y];
                if (!res.margin_sums.empty() && res.margin_sums[x] != res.margin_sums[y]) {
                    return res.margin_sums[x] > res.margin_sums[y];
                }
                return x < y;
            };
            std::partial_sort(peeled.begin(), peeled.begin() + k, peeled.end(), better);
            peeled.resize(k);
        }
        std::sort(peeled.begin(), peeled.end());
        res.support = std::move(peeled);
        return res;
    }

    DecodeResult fallback = topk_score_decode(a, z, k);
    fallback.method = DecodeMethod::PEELING;
    fallback.peel_success = false;
    fallback.bin_calls_pass1 = res.bin_calls_pass1;
    fallback.bin_calls_peel = res.bin_calls_peel;
    return fallback;
}

}  // namespace mlgt
