#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlgt/codec.hpp"
#include "mlgt/dataset.hpp"

namespace mlgt {

// Undirected graph over labels: edge iff the labels co-occur in some row.
struct LabelGraph {
    int d = 0;
    std::vector<std::vector<int>> adj;  // sorted neighbor lists, no self-loops
};

LabelGraph build_label_graph(const CooccurrenceMatrix& cooc);

struct SeparatorSplit {
    std::vector<int> separator;
    std::vector<int> part_a;
    std::vector<int> part_b;
};

// BFS level-structure separator from a pseudo-peripheral root: picks the
// level cut minimizing |S| / min(|A|, |B|) among cuts keeping both sides at
// most (1 - balance) * |V|, shrinking the cut to the level nodes that
// actually border the next level. Relaxes balance once (to balance/2) before
// giving up.
SeparatorSplit find_vertex_separator(const LabelGraph& g, double balance);

struct HierNode {
    std::vector<int> children;   // node ids; empty for a leaf
    std::vector<int> separator;  // empty for leaves and component splits
    std::vector<int> labels;     // leaf component labels
    bool oversized = false;      // leaf kept above max_block (separator failed)
};

struct HierPartition {
    int d = 0;
    std::vector<HierNode> nodes;  // nodes[0] is the root
    std::vector<std::vector<int>> leaves;
    std::vector<std::vector<int>> blocks;  // leaf plus separators on its root path
    std::vector<int> block_sizes;
    std::vector<int> permutation;  // position -> label; leaf blocks contiguous, separators last
    std::vector<int> top_separator;
    std::vector<std::uint8_t> separator_flag;  // label belongs to some separator
};

// Splits disconnected components first (empty separator), then recursively
// bisects any component larger than max_block. A component whose separator
// search fails becomes an oversized leaf.
HierPartition hierarchical_partition(const LabelGraph& g, int max_block, int max_depth = 32);

struct BlockPrediction {
    std::vector<int> labels;  // local index -> global label
    DecodeResult result;      // local-index support and scores
};

// Merges per-block decodes: each block's scores are scaled by its own max
// positive score, a label appearing in q blocks contributes with weight 1/q,
// and ties go to labels shared across blocks (the separators), then to the
// smaller index. Output support size is exactly min(k, distinct labels).
DecodeResult combine_predictions(const std::vector<BlockPrediction>& blocks, int d, int k);

struct PartitionFile {
    std::vector<std::vector<int>> blocks;
    std::vector<int> top_separator;
};

void save_partition(const HierPartition& part, const std::string& path);
void save_partition(const PartitionFile& part, const std::string& path);
PartitionFile load_partition(const std::string& path);

void save_permutation(const std::vector<int>& perm, const std::string& path);
std::vector<int> load_permutation(const std::string& path);

// (row, col) coordinates of the permuted co-occurrence nonzeros, both
// triangles, sorted; consumed by any plotting tool.
void write_spy_csv(const CooccurrenceMatrix& cooc, const std::vector<int>& perm,
                   const std::string& path);

}  // namespace mlgt
