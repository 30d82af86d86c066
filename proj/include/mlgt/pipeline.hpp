#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlgt/classifier.hpp"
#include "mlgt/codec.hpp"
#include "mlgt/dataset.hpp"
#include "mlgt/gt.hpp"
#include "mlgt/metrics.hpp"
#include "mlgt/partition.hpp"
#include "mlgt/symnmf.hpp"

namespace mlgt {

// Resolved construction parameters. c == 0 requests the column-weight sweep
// over {2..8} for the kinds parameterized by c.
struct BuildSpec {
    GtKind kind = GtKind::NMF;
    int m = 0;
    int c = 0;
    int k = 5;   // sparsity parameter of the SP construction
    int m1 = 0;  // bin count (SAFFRON)
    int r = 0;   // row weight (CW); 0 derives it from m
    SymNmfConfig nmf;
};

struct TrainedModel {
    GroupTestingMatrix a;
    ClassifierEnsemble ens;
    BuildSpec spec;
    std::uint64_t seed = 0;
    int chosen_c = 0;
    double phi = 0.0;
    double construct_seconds = 0.0;
    double train_seconds = 0.0;
};

// Builds the pooling matrix for `spec`. `ds` is required for the NMF kind and
// for the c sweep; `d` is the label count (must match ds when given).
GroupTestingMatrix construct_matrix(const BuildSpec& spec, const Dataset* ds, int d,
                                    std::uint64_t seed, int threads, int* chosen_c = nullptr);

TrainedModel train_model(const Dataset& ds, const BuildSpec& spec, const TrainConfig& tc,
                         std::uint64_t seed, int threads);

// New dataset keeping every row and only the given labels, remapped to
// 0..labels.size()-1 in the given order. Features are untouched.
Dataset restrict_to_labels(const Dataset& ds, const std::vector<int>& labels);

struct PartitionedModel {
    PartitionFile partition;
    std::vector<TrainedModel> blocks;
    int d = 0;
    std::vector<int> permutation;  // empty when the partition came from a file
};

// Trains one independent model per block S ∪ C_i; block b uses seed
// derive_seed(seed, b). Per-block m and c are clamped to the block size, and
// single-label blocks fall back to the identity construction.
PartitionedModel train_partitioned(const Dataset& ds, const PartitionFile& partition,
                                   const BuildSpec& spec, const TrainConfig& tc,
                                   std::uint64_t seed, int threads);

struct Model {
    bool partitioned = false;
    GroupTestingMatrix a;
    ClassifierEnsemble ens;
    PartitionFile partition;
    std::vector<GroupTestingMatrix> block_as;
    std::vector<ClassifierEnsemble> block_ens;
    int d = 0;
    int p = 0;
    std::uint64_t seed = 0;
};

void save_model(const TrainedModel& model, int p, const std::string& dir);
void save_partitioned_model(const PartitionedModel& model, int p, const std::string& dir);
Model load_model(const std::string& dir);

struct EvalOptions {
    DecodeMethod method = DecodeMethod::TOPK;
    int threads = 1;
};

struct EvalTimings {
    double total_seconds = 0.0;
    double per_instance_seconds = 0.0;
};

// Decodes every test row at sparsity budget 5 (the modified precision's slot
// count) and averages the metrics.
EvalReport evaluate(const GroupTestingMatrix& a, const ClassifierEnsemble& ens,
                    const Dataset& test, const EvalOptions& opts,
                    EvalTimings* timings = nullptr);

DecodeResult predict_combined(const Model& model, std::span<const int> idx,
                              std::span<const double> val, DecodeMethod method, int k);

EvalReport evaluate_model(const Model& model, const Dataset& test, const EvalOptions& opts,
                          EvalTimings* timings = nullptr);

}  // namespace mlgt
