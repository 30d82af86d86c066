#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mlgt/dataset.hpp"
#include "mlgt/partition.hpp"
#include "mlgt/prng.hpp"
#include "support/synthetic.hpp"

using namespace mlgt;

namespace {

Dataset rows_with_labels(int d, std::vector<std::vector<int>> rows) {
    Dataset ds(0, 1, d);
    for (auto& labels : rows) ds.add_row(std::move(labels), {{0, 1.0}});
    return ds;
}

LabelGraph graph_of(int d, std::vector<std::vector<int>> rows) {
    Dataset ds = rows_with_labels(d, std::move(rows));
    return build_label_graph(label_cooccurrence(ds));
}

LabelGraph path_graph(int d) {
    std::vector<std::vector<int>> rows;
    for (int i = 0; i + 1 < d; ++i) rows.push_back({i, i + 1});
    return graph_of(d, std::move(rows));
}

bool has_edge(const LabelGraph& g, int u, int v) {
    return std::binary_search(g.adj[static_cast<std::size_t>(u)].begin(),
                              g.adj[static_cast<std::size_t>(u)].end(), v);
}

void check_split(const LabelGraph& g, const SeparatorSplit& split) {
    std::vector<int> all = split.part_a;
    all.insert(all.end(), split.part_b.begin(), split.part_b.end());
    all.insert(all.end(), split.separator.begin(), split.separator.end());
    std::sort(all.begin(), all.end());
    std::vector<int> want(static_cast<std::size_t>(g.d));
    for (int j = 0; j < g.d; ++j) want[static_cast<std::size_t>(j)] = j;
    CHECK(all == want);
    for (int u : split.part_a) {
        for (int v : split.part_b) CHECK_FALSE(has_edge(g, u, v));
    }
    CHECK_FALSE(split.part_a.empty());
    CHECK_FALSE(split.part_b.empty());
}

BlockPrediction block_of(std::vector<int> labels, std::vector<double> scores,
                         std::vector<double> margins = {}) {
    BlockPrediction bp;
    bp.labels = std::move(labels);
    bp.result.scores = std::move(scores);
    bp.result.margin_sums = std::move(margins);
    return bp;
}

}  // namespace

TEST_CASE("the label graph links exactly the co-occurring pairs") {
    LabelGraph g = graph_of(4, {{0, 1}, {1, 2}, {3}});
    CHECK(g.d == 4);
    CHECK(g.adj[0] == std::vector<int>{1});
    CHECK(g.adj[1] == std::vector<int>{0, 2});
    CHECK(g.adj[2] == std::vector<int>{1});
    CHECK(g.adj[3].empty());
}

TEST_CASE("the label graph matches a direct pair scan") {
    SplitMix64 rng(31);
    std::vector<std::vector<int>> rows;
    for (int i = 0; i < 40; ++i) {
        std::vector<std::int64_t> pick =
            sample_without_replacement(12, 1 + static_cast<std::int64_t>(rng.next_below(3)), rng);
        rows.emplace_back(pick.begin(), pick.end());
    }
    LabelGraph g = graph_of(12, rows);
    std::set<std::pair<int, int>> expect;
    for (const auto& row : rows) {
        for (std::size_t a = 0; a < row.size(); ++a) {
            for (std::size_t b = a + 1; b < row.size(); ++b) {
                expect.insert({row[a], row[b]});
            }
        }
    }
    for (int u = 0; u < 12; ++u) {
        for (int v = u + 1; v < 12; ++v) {
            CHECK(has_edge(g, u, v) == (expect.count({u, v}) > 0));
        }
    }
}

TEST_CASE("a path splits at its midpoint") {
    SeparatorSplit split = find_vertex_separator(path_graph(3), 0.25);
    CHECK(split.separator == std::vector<int>{1});
    std::vector<int> rest = split.part_a;
    rest.insert(rest.end(), split.part_b.begin(), split.part_b.end());
    std::sort(rest.begin(), rest.end());
    CHECK(rest == std::vector<int>{0, 2});
}

TEST_CASE("two cliques separate at the shared articulation label") {
    LabelGraph g = graph_of(5, {{0, 1, 2}, {2, 3, 4}});
    SeparatorSplit split = find_vertex_separator(g, 0.25);
    CHECK(split.separator == std::vector<int>{2});
    check_split(g, split);
}

TEST_CASE("a clique admits no balanced separator") {
    LabelGraph g = graph_of(4, {{0, 1, 2, 3}});
    CHECK_THROWS_AS(find_vertex_separator(g, 0.25), std::runtime_error);
}

TEST_CASE("separator search validates its inputs") {
    LabelGraph g = path_graph(6);
    CHECK_THROWS_AS(find_vertex_separator(g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(find_vertex_separator(g, 0.6), std::invalid_argument);
    LabelGraph single = graph_of(1, {{0}});
    CHECK_THROWS_AS(find_vertex_separator(single, 0.25), std::invalid_argument);
    LabelGraph split_graph = graph_of(4, {{0, 1}, {2, 3}});
    CHECK_THROWS_AS(find_vertex_separator(split_graph, 0.25), std::invalid_argument);
}

TEST_CASE("separators on a sparse graph disconnect and stay balanced") {
    std::vector<std::vector<int>> rows;
    for (int i = 0; i + 1 < 40; ++i) rows.push_back({i, i + 1});
    for (int i = 0; i + 2 < 40; i += 5) rows.push_back({i, i + 2});
    LabelGraph g = graph_of(40, rows);
    SeparatorSplit split = find_vertex_separator(g, 0.25);
    check_split(g, split);
    std::size_t bigger = std::max(split.part_a.size(), split.part_b.size());
    CHECK(bigger <= static_cast<std::size_t>(0.75 * 40));
}

TEST_CASE("disconnected label groups become standalone leaves") {
    LabelGraph g = graph_of(6, {{0, 1, 2}, {3, 4, 5}});
    HierPartition part = hierarchical_partition(g, 10);
    REQUIRE(part.leaves.size() == 2);
    CHECK(part.leaves[0] == std::vector<int>{0, 1, 2});
    CHECK(part.leaves[1] == std::vector<int>{3, 4, 5});
    CHECK(part.blocks == part.leaves);
    CHECK(part.top_separator.empty());
    CHECK(part.block_sizes == std::vector<int>{3, 3});
    CHECK(part.permutation == std::vector<int>{0, 1, 2, 3, 4, 5});
    for (auto flag : part.separator_flag) CHECK(flag == 0);
}

TEST_CASE("an oversized component bisects through a separator") {
    LabelGraph g = path_graph(7);
    HierPartition part = hierarchical_partition(g, 3);
    CHECK(part.top_separator == std::vector<int>{3});
    REQUIRE(part.leaves.size() == 2);
    for (const auto& leaf : part.leaves) CHECK(leaf.size() <= 3);
    for (const auto& block : part.blocks) {
        CHECK(std::binary_search(block.begin(), block.end(), 3));
    }
    CHECK(part.separator_flag[3] == 1);

    std::vector<int> sorted = part.permutation;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("leaf blocks only touch through separator labels") {
    SplitMix64 rng(47);
    std::vector<std::vector<int>> rows;
    for (int i = 0; i + 1 < 60; ++i) rows.push_back({i, i + 1});
    for (int t = 0; t < 30; ++t) {
        int u = static_cast<int>(rng.next_below(60));
        int span = 1 + static_cast<int>(rng.next_below(4));
        if (u + span < 60) rows.push_back({u, u + span});
    }
    Dataset ds = rows_with_labels(60, rows);
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    LabelGraph g = build_label_graph(cooc);
    HierPartition part = hierarchical_partition(g, 12);
    CHECK(part.leaves.size() >= 2);

    std::vector<int> leaf_of(60, -1);
    for (std::size_t b = 0; b < part.leaves.size(); ++b) {
        for (int j : part.leaves[b]) leaf_of[static_cast<std::size_t>(j)] = static_cast<int>(b);
    }
    for (const auto& e : cooc.entries) {
        if (e.i == e.j) continue;
        bool same_leaf = leaf_of[static_cast<std::size_t>(e.i)] >= 0 &&
                         leaf_of[static_cast<std::size_t>(e.i)] == leaf_of[static_cast<std::size_t>(e.j)];
        bool through_sep = part.separator_flag[static_cast<std::size_t>(e.i)] ||
                           part.separator_flag[static_cast<std::size_t>(e.j)];
        CHECK((same_leaf || through_sep));
    }
}

TEST_CASE("a component that cannot split is kept whole and flagged") {
    LabelGraph g = graph_of(5, {{0, 1, 2, 3, 4}});
    HierPartition part = hierarchical_partition(g, 2);
    REQUIRE(part.leaves.size() == 1);
    CHECK(part.leaves[0].size() == 5);
    CHECK(part.nodes[0].oversized);

    HierPartition depth_capped = hierarchical_partition(path_graph(7), 3, 0);
    REQUIRE(depth_capped.leaves.size() == 1);
    CHECK(depth_capped.nodes[0].oversized);

    CHECK_THROWS_AS(hierarchical_partition(g, 1), std::invalid_argument);
    CHECK_THROWS_AS(hierarchical_partition(LabelGraph{}, 4), std::invalid_argument);
}

TEST_CASE("a synthetic block corpus partitions into its construction blocks") {
    synth::Corpus corpus = synth::block_corpus(3, 14, 3000, 1500, 0xB10C5u);
    LabelGraph g = build_label_graph(label_cooccurrence(corpus.train));
    HierPartition part = hierarchical_partition(g, 20);
    REQUIRE(part.leaves.size() == 3);
    for (const auto& leaf : part.leaves) CHECK(leaf.size() == 14);
    CHECK(part.top_separator.empty());
    for (const auto& node : part.nodes) CHECK(node.separator.empty());
}

TEST_CASE("a single block passes through up to normalization") {
    DecodeResult merged = combine_predictions({block_of({0, 1, 2}, {2.0, 4.0, 0.0})}, 3, 2);
    CHECK(merged.scores == std::vector<double>{0.5, 1.0, 0.0});
    CHECK(merged.support == std::vector<int>{0, 1});
}

TEST_CASE("shared labels win tie-breaks over private ones") {
    std::vector<BlockPrediction> blocks = {block_of({0, 5}, {1.0, 1.0}),
                                           block_of({1, 5}, {1.0, 1.0})};
    DecodeResult merged = combine_predictions(blocks, 6, 1);
    CHECK(merged.scores[0] == doctest::Approx(1.0));
    CHECK(merged.scores[1] == doctest::Approx(1.0));
    CHECK(merged.scores[5] == doctest::Approx(1.0));
    CHECK(merged.support == std::vector<int>{5});
}

TEST_CASE("the merged support covers min(k, labels seen)") {
    std::vector<BlockPrediction> blocks = {block_of({0, 5}, {1.0, 0.5}),
                                           block_of({1, 5}, {0.25, 1.0})};
    DecodeResult merged = combine_predictions(blocks, 10, 5);
    CHECK(merged.support == std::vector<int>{0, 1, 5});

    DecodeResult silent = combine_predictions({block_of({3, 4}, {0.0, 0.0})}, 10, 1);
    CHECK(silent.support == std::vector<int>{3});
}

TEST_CASE("block score scale does not leak into the merge") {
    std::vector<BlockPrediction> one = {block_of({0, 1}, {3.0, 1.0}),
                                        block_of({2, 3}, {2.0, 4.0})};
    std::vector<BlockPrediction> two = {block_of({0, 1}, {3.0, 1.0}),
                                        block_of({2, 3}, {20.0, 40.0})};
    DecodeResult a = combine_predictions(one, 4, 4);
    DecodeResult b = combine_predictions(two, 4, 4);
    CHECK(a.scores == b.scores);
    CHECK(a.support == b.support);
}

TEST_CASE("merged margins keep resolving ties inside a block") {
    DecodeResult merged =
        combine_predictions({block_of({0, 1}, {1.0, 1.0}, {0.2, 0.7})}, 2, 1);
    CHECK(merged.support == std::vector<int>{1});
    REQUIRE(merged.margin_sums.size() == 2);
    CHECK(merged.margin_sums[1] == doctest::Approx(0.7));
}

TEST_CASE("merging rejects malformed block lists") {
    CHECK_THROWS_AS(combine_predictions({}, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(combine_predictions({block_of({0}, {1.0})}, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(combine_predictions({block_of({0, 1}, {1.0})}, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(combine_predictions({block_of({7}, {1.0})}, 4, 1), std::invalid_argument);
}

TEST_CASE("partitions and permutations survive the file round-trip") {
    PartitionFile pf;
    pf.blocks = {{0, 1, 4}, {2, 3, 4}};
    pf.top_separator = {4};
    std::string path = "partition_roundtrip.txt";
    save_partition(pf, path);
    PartitionFile back = load_partition(path);
    CHECK(back.blocks == pf.blocks);
    CHECK(back.top_separator == pf.top_separator);
    std::remove(path.c_str());

    HierPartition part = hierarchical_partition(path_graph(7), 3);
    save_partition(part, path);
    PartitionFile hier = load_partition(path);
    CHECK(hier.blocks == part.blocks);
    CHECK(hier.top_separator == part.top_separator);
    std::remove(path.c_str());

    save_permutation(part.permutation, path);
    CHECK(load_permutation(path) == part.permutation);
    std::remove(path.c_str());
}

TEST_CASE("partition files with gaps or no separator line are rejected") {
    std::string path = "partition_bad.txt";
    {
        std::ofstream out(path);
        out << "1: 0 1\nS:\n";
    }
    CHECK_THROWS(load_partition(path));
    {
        std::ofstream out(path);
        out << "0: 0 1\n";
    }
    CHECK_THROWS(load_partition(path));
    std::remove(path.c_str());
    CHECK_THROWS(load_partition("does_not_exist_partition.txt"));
}

TEST_CASE("the spy dump lists both triangles in permuted order") {
    Dataset ds = rows_with_labels(3, {{0, 1}, {1, 2}});
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    std::string path = "spy_test.csv";
    std::vector<int> identity = {0, 1, 2};
    write_spy_csv(cooc, identity, path);
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::remove(path.c_str());
    CHECK(buf.str() == "row,col\n0,0\n0,1\n1,0\n1,1\n1,2\n2,1\n2,2\n");

    std::vector<int> wrong = {0, 1};
    CHECK_THROWS_AS(write_spy_csv(cooc, wrong, path), std::invalid_argument);
}
