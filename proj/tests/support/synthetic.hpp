#pragma once

#include <cstdint>
#include <vector>

#include "mlgt/dataset.hpp"
#include "mlgt/gt.hpp"

// Deterministic benchmark corpora for the test suite. Each generator fabricates
// a topic-structured multilabel collection whose scale and difficulty mirror a
// published benchmark family; set MLGT_DATA_DIR to a directory holding
// <stem>_train.txt / <stem>_test.txt (repo line format, labels zero-indexed,
// features one-indexed) to evaluate against real data instead.
namespace synth {

struct Corpus {
    mlgt::Dataset train;
    mlgt::Dataset test;
    bool from_disk = false;
};

// Knobs for the text-style generator. The defaults are the calibrated corpus
// every test uses; the struct exists so harnesses can probe variants.
struct TextParams {
    int d = 159;
    int p = 1836;
    int topics = 12;
    std::int64_t n_train = 4880;
    std::int64_t n_test = 2515;
    double clique_prob = 0.358;  // rows drawn from a topic's window community
    double burst_prob = 0.08;    // dense multi-topic rows
    double member_keep = 0.526;  // window member dropout survival
    int window = 7;              // community window width (ring layout)
    int clique_ranks = 8;        // ranks 0..clique_ranks-1 carry the window mass
    std::vector<double> deep_counts = {0.478, 0.522};  // 1..2 labels on deep rows
    int anchor_count = 5;
    int anchor_pool = 5;         // anchors drawn from this prefix of the block
    double keep_clique = 0.459;  // anchor inclusion, window ranks
    double keep_deep = 0.257;    // anchor inclusion, deep ranks
    double hard_prob = 0.262;    // rows whose anchors are mostly absent
    double keep_hard = 0.123;    // anchor inclusion on those rows
    double train_drop = 0.00;    // per-label annotation miss rate, train split only
    double zipf_s = 0.179;       // skew of window-start popularity on the ring
    double zipf_q = 3.0;         // flattens the very head of the start distribution
    double echo_prob = 0.36;     // clique rows carry a distant window's features
    double keep_echo = 0.186;    // anchor inclusion for the echo window
    int topic_noise = 14;        // uniform draws from the topic's feature block
    int global_noise = 10;       // uniform draws from all features
    std::uint64_t seed = 0x5EC5u;
};

// Sparse binary text-style corpus: 159 labels, 1836 features,
// 4880 train / 2515 test rows. Stem "text".
Corpus text_corpus();
Corpus text_corpus(const TextParams& prm);

// Dense video-style corpus: 101 labels, 120 features, 6000 train / 3000 test
// rows, about 4.0 labels per row. Stem "video".
Corpus video_corpus();

// Corpus whose label co-occurrence
// graph has exactly `blocks` connected components (disjoint label and feature
// ranges per block). Stem "blocks".
Corpus block_corpus(int blocks, int labels_per_block, std::int64_t n_train,
                    std::int64_t n_test, std::uint64_t seed);

// Small fixed dataset used by unit tests: 6 labels, 10 features, 40 rows.
mlgt::Dataset tiny_dataset();

// Pooling matrix literal: builds the column view from the given rows.
mlgt::GroupTestingMatrix matrix_from_rows(int m, int d, std::vector<std::vector<int>> rows);

}  // namespace synth
