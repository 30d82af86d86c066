#pragma once

#include <cstdint>
#include <vector>

#include "mlgt/dataset.hpp"

namespace mlgt {

// Symmetric nonnegative real matrix, upper triangle + diagonal as sorted
// (i, j, value) triples with i <= j.
struct SparseSymMatrix {
    struct Entry {
        int i;
        int j;
        double value;
    };
    int dim = 0;
    std::vector<Entry> entries;

    static SparseSymMatrix from_cooccurrence(const CooccurrenceMatrix& cooc);
    // Validates symmetry; throws std::invalid_argument otherwise.
    static SparseSymMatrix from_dense(const std::vector<double>& m, int dim, double tol = 1e-12);
};

// Rank-m nonnegative basis H (row-major m x d) with the per-sweep objective
// values of ||M - H^T H||_F^2. The trace includes the initial objective and
// is non-increasing.
struct NmfBasis {
    int m = 0;
    int d = 0;
    std::vector<double> h;  // row-major, h[a * d + j]
    std::vector<double> objective_trace;

    double& at(int a, int j) { return h[static_cast<std::size_t>(a) * d + j]; }
    double at(int a, int j) const { return h[static_cast<std::size_t>(a) * d + j]; }
};

// Column-stochastic-like form of H: entries in [0,1], every column sums to
// target_weight unless its support is smaller than target_weight (then all
// support entries are 1).
struct SamplingBasis {
    int m = 0;
    int d = 0;
    std::vector<double> h;  // row-major
    int target_weight = 0;

    double at(int a, int j) const { return h[static_cast<std::size_t>(a) * d + j]; }
    double column_sum(int j) const;
};

struct SymNmfConfig {
    int max_sweeps = 100;
    double tol = 1e-4;  // relative objective change stopping rule
    std::uint64_t seed = 0;
};

// Cyclic coordinate descent for min_{H >= 0} ||M - H^T H||_F^2. Each scalar
// is set to the exact nonnegative minimizer of its quartic restriction
// (closed-form cubic root selection), cycling in row-major order.
// Initialization: H ~ Uniform(0, sqrt(mean(M)/m)) from the given seed.
NmfBasis symnmf_cd(const SparseSymMatrix& m_mat, int m, const SymNmfConfig& cfg = {});
NmfBasis symnmf_cd(const CooccurrenceMatrix& cooc, int m, const SymNmfConfig& cfg = {});

// Per column: normalize to sum 1 (zero columns become uniform), scale by c,
// then clip entries above 1 and redistribute the excess proportionally over
// the unclipped positive entries, iterating to a fixed point.
SamplingBasis reweight_columns(const NmfBasis& basis, int c);

// Independent Bernoulli(h[i][j]) draws; column j uses a stream derived from
// (seed, j) so individual columns can be resampled reproducibly. Returns
// per-label sorted group-index lists (the column view of the m x d pattern).
std::vector<std::vector<int>> sample_columns(const SamplingBasis& basis, std::uint64_t seed);

// Matrix Market array dump of H, for debugging.
void dump_basis(const NmfBasis& basis, const std::string& path);

}  // namespace mlgt
