#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlgt/gt.hpp"

namespace mlgt {

// Pooled m-bit label vector; scores carries classifier margins when the bits
// came from predictions rather than exact reduction.
struct ReducedLabel {
    std::vector<std::uint8_t> bits;
    std::vector<double> scores;  // empty when no margins are available

    bool has_scores() const { return !scores.empty(); }
};

ReducedLabel reduced_from_margins(const std::vector<double>& margins);

enum class DecodeMethod { LINEAR, TOPK, PEELING };

struct DecodeResult {
    std::vector<int> support;        // sorted label indices
    std::vector<double> scores;      // length d: b_j = count of fired groups containing j
    std::vector<double> margin_sums; // length d when margins were available, else empty
    DecodeMethod method = DecodeMethod::LINEAR;
    bool peel_success = true;
    // bin-decoder invocation counters (PEELING only)
    int bin_calls_pass1 = 0;
    int bin_calls_peel = 0;
};

// z = A OR y over the rows of A; cost proportional to the summed degree of
// supp(y)'s columns.
ReducedLabel boolean_reduce(const GroupTestingMatrix& a, std::span<const int> y_support);

// Label included iff its column is nonempty and every group containing it
// fired.
DecodeResult linear_decode(const GroupTestingMatrix& a, const ReducedLabel& z);

// b = A^T bits; support = k largest positive b, ties by larger margin sum
// then smaller index.
DecodeResult topk_score_decode(const GroupTestingMatrix& a, const ReducedLabel& z, int k);

struct BinDecode {
    enum class Type { EMPTY, SINGLETON, RESOLVED_DOUBLETON, UNRESOLVED };
    Type type = Type::UNRESOLVED;
    int label = -1;
};

// Decodes one bin observation v (length 2b). With no known member: detects
// all-zero bins and exact singletons. With a known member's label: attempts
// to reconstruct the second member of a doubleton and verifies by
// re-encoding.
BinDecode saffron_bin_decode(const SignatureMatrix& sig, std::span<const std::uint8_t> v,
                             int known = -1);

// Pass 1 singleton scan over all bins, then frontier peeling through
// resolvable doubletons. Falls back to topk_score_decode (peel_success =
// false) when peeling explains neither k labels nor the whole observation.
DecodeResult saffron_peel_decode(const GroupTestingMatrix& a, const ReducedLabel& z, int k);

}  // namespace mlgt
