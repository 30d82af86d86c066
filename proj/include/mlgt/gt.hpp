#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlgt/dataset.hpp"
#include "mlgt/symnmf.hpp"

namespace mlgt {

enum class GtKind { SP, CW, SAFFRON, NMF, IDENTITY };

std::string gt_kind_name(GtKind kind);
GtKind gt_kind_from_name(const std::string& name);

// Per-bin membership of the pooling graph behind a SAFFRON matrix.
struct SaffronMeta {
    int m1 = 0;                            // bin count
    int m2 = 0;                            // signature length = 2*ceil(log2 d)
    std::vector<std::vector<int>> bin_edges;  // per-bin sorted label lists
};

// Binary m x d pooling matrix with both orientations materialized.
struct GroupTestingMatrix {
    int m = 0;
    int d = 0;
    GtKind kind = GtKind::SP;
    std::vector<std::vector<int>> rows;  // per-group sorted label indices
    std::vector<std::vector<int>> cols;  // per-label sorted group indices
    SaffronMeta saffron_meta;            // populated iff kind == SAFFRON
    int c = 0;   // column-weight parameter (exact for CW/SAFFRON, target for NMF)
    int r = 0;   // row-weight parameter (exact for CW)
    std::uint64_t seed = 0;

    std::size_t nnz() const;
    bool has(int group, int label) const;
};

// Throws std::logic_error when rows and cols are not exact duals.
void check_dual(const GroupTestingMatrix& a);

// [bits(j) MSB-first; complement] signature code over m2 = 2b rows.
struct SignatureMatrix {
    int d = 0;
    int b = 0;
    int m2 = 0;

    // bit t of column j, t in [0, m2)
    int bit(int t, int j) const;
    std::vector<std::uint8_t> column(int j) const;
};

SignatureMatrix signature_matrix(int d);

// Independent Bernoulli(1/(k+1)) entries.
GroupTestingMatrix build_sp_gt(int m, int d, int k, std::uint64_t seed);
GroupTestingMatrix build_sp_gt_prob(int m, int d, double prob, std::uint64_t seed);

// Gallager-style constant-weight matrix: c stacked (d/r x d) submatrices,
// the first a block partition of the columns, the rest uniform column
// permutations of it. Every column weight c, every row weight r; requires
// r | d.
GroupTestingMatrix build_cw_gt(int d, int c, int r, std::uint64_t seed);
// Pads d up to a multiple of r, builds, then drops the padded columns
// (column weights stay exactly c; row weights may fall below r).
GroupTestingMatrix build_cw_gt_padded(int d, int c, int r, std::uint64_t seed);
// Picks r so the padded build lands exactly m rows; throws when no such r
// exists near d*c/m.
int cw_row_weight_for(int d, int m, int c);

// Left-c-regular pooling graph over m1 bins (right degrees d*c/m1, spread
// floor/ceil when not integral) built by permuting the d*c edge stubs;
// duplicate (label, bin) edges are repaired by degree-preserving stub swaps.
// A stacks one signature submatrix per bin; m = m1 * m2.
GroupTestingMatrix build_saffron(int d, int m1, int c, std::uint64_t seed);

GroupTestingMatrix build_identity(int d);

// Cooccurrence -> symNMF rank-m basis -> column reweighting to target c ->
// Bernoulli sampling; empty sampled columns get a 1 at the group with the
// column's largest probability.
GroupTestingMatrix build_nmf_gt(const Dataset& ds, int m, int c,
                                const SymNmfConfig& nmf_cfg, std::uint64_t seed);
// Sampling stage alone, for resampling studies against a fixed basis.
GroupTestingMatrix sample_nmf_gt(const SamplingBasis& basis, std::uint64_t seed,
                                 bool repair_empty = true);

// Phi_Y(A) = || (1/n) Y^T Y - (1/m) A^T A ||_F, computed over the union of
// the two sparsity patterns.
double correlation_metric(const GroupTestingMatrix& a, const Dataset& ds);

using GtBuilder =
    std::function<GroupTestingMatrix(const Dataset&, int m, int c, std::uint64_t seed)>;

struct ColumnWeightChoice {
    int c = 0;
    // (candidate, mean Hamming loss) for candidates that built successfully
    std::vector<std::pair<int, double>> losses;
    std::vector<int> skipped;
};

// Remark-1 style sweep: reduce-then-decode a sampled subset of training label
// vectors for each candidate c (no classifiers) and keep the c with the
// smallest mean Hamming loss; ties toward smaller c.
ColumnWeightChoice select_column_weight(const Dataset& ds, int m,
                                        const std::vector<int>& candidates,
                                        int sample_size, const GtBuilder& builder,
                                        std::uint64_t seed, int threads = 1);

// Matrix Market coordinate pattern + sidecar JSON metadata.
void save_gt_matrix(const GroupTestingMatrix& a, const std::string& mtx_path,
                    const std::string& meta_path);
GroupTestingMatrix load_gt_matrix(const std::string& mtx_path,
                                  const std::string& meta_path);

}  // namespace mlgt
