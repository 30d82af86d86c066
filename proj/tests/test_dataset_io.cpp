#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mlgt/dataset.hpp"
#include "mlgt/prng.hpp"
#include "support/synthetic.hpp"

using namespace mlgt;

namespace {

Dataset parse_text(const std::string& text, const IndexingConfig& cfg = {}) {
    std::istringstream in(text);
    return parse_repo_format(in, cfg);
}

Dataset random_dataset(std::int64_t n, int p, int d, std::uint64_t seed) {
    Dataset ds(0, p, d);
    SplitMix64 rng(seed);
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<int> labels;
        for (int l = 0; l < d; ++l) {
            if (rng.next_double() < 0.15) labels.push_back(l);
        }
        std::vector<std::pair<int, double>> feats;
        for (int f = 0; f < p; ++f) {
            if (rng.next_double() < 0.3) feats.emplace_back(f, rng.next_double() * 4.0 - 2.0);
        }
        ds.add_row(std::move(labels), std::move(feats));
    }
    return ds;
}

}  // namespace

TEST_CASE("parses header, labels and features") {
    Dataset ds = parse_text("2 3 2\n0 1:1.5\n0,1 2:2.0\n");
    REQUIRE(ds.n() == 2);
    CHECK(ds.p() == 3);
    CHECK(ds.d() == 2);
    REQUIRE(ds.labels(0).size() == 1);
    CHECK(ds.labels(0)[0] == 0);
    REQUIRE(ds.labels(1).size() == 2);
    CHECK(ds.labels(1)[0] == 0);
    CHECK(ds.labels(1)[1] == 1);
    // features are 1-based in the file by default
    REQUIRE(ds.feature_indices(0).size() == 1);
    CHECK(ds.feature_indices(0)[0] == 0);
    CHECK(ds.feature_values(0)[0] == 1.5);
    CHECK(ds.feature_indices(1)[0] == 1);
    CHECK(ds.feature_values(1)[0] == 2.0);
}

TEST_CASE("keeps an explicitly stored zero-valued feature") {
    Dataset ds = parse_text("1 1 1\n0 1:0.0\n");
    REQUIRE(ds.n() == 1);
    REQUIRE(ds.feature_indices(0).size() == 1);
    CHECK(ds.feature_values(0)[0] == 0.0);
}

TEST_CASE("accepts empty label lists and CRLF endings") {
    Dataset ds = parse_text("2 2 2\r\n 1:1.0\r\n1 2:3.0\r\n");
    CHECK(ds.labels(0).empty());
    REQUIRE(ds.labels(1).size() == 1);
    CHECK(ds.labels(1)[0] == 1);
}

TEST_CASE("honors the indexing configuration") {
    IndexingConfig cfg;
    cfg.labels_one_indexed = true;
    cfg.features_one_indexed = false;
    Dataset ds = parse_text("1 2 2\n1,2 0:1.0 1:2.0\n", cfg);
    CHECK(ds.labels(0)[0] == 0);
    CHECK(ds.labels(0)[1] == 1);
    CHECK(ds.feature_indices(0)[0] == 0);
    CHECK(ds.feature_indices(0)[1] == 1);
}

TEST_CASE("rejects malformed input") {
    CHECK_THROWS(parse_text(""));
    CHECK_THROWS(parse_text("1 2\n"));                  // short header
    CHECK_THROWS(parse_text("1 2 2 9\n0 1:1.0\n"));     // long header
    CHECK_THROWS(parse_text("2 2 2\n0 1:1.0\n"));       // fewer rows than declared
    CHECK_THROWS(parse_text("1 2 2\n5 1:1.0\n"));       // label out of range
    CHECK_THROWS(parse_text("1 2 2\n0 7:1.0\n"));       // feature out of range
    CHECK_THROWS(parse_text("1 2 2\n0 1:\n"));          // missing value
    CHECK_THROWS(parse_text("1 2 2\n0 :1.0\n"));        // missing index
    CHECK_THROWS(parse_text("1 2 2\n0 1;1.0\n"));       // wrong separator
    CHECK_THROWS(parse_text("1 2 2\n0 1:nan\n"));       // non-finite value
    CHECK_THROWS(parse_text("1 2 2\nx 1:1.0\n"));       // malformed label
}

TEST_CASE("write/parse round-trip preserves the dataset") {
    Dataset ds = random_dataset(40, 12, 9, 123);
    std::ostringstream out;
    write_repo_format(ds, out);
    Dataset back = parse_text(out.str());
    CHECK(back == ds);

    IndexingConfig cfg;
    cfg.labels_one_indexed = true;
    cfg.features_one_indexed = false;
    std::ostringstream out2;
    write_repo_format(ds, out2, cfg);
    std::istringstream in2(out2.str());
    CHECK(parse_repo_format(in2, cfg) == ds);
}

TEST_CASE("subsample keeps everything at fraction 1") {
    Dataset ds = random_dataset(25, 6, 5, 7);
    CHECK(subsample_split(ds, 1.0, 99) == ds);
}

TEST_CASE("subsample draws ceil(fraction*n) rows, order preserved, reproducibly") {
    Dataset ds = random_dataset(4, 6, 5, 8);
    Dataset half = subsample_split(ds, 0.5, 3);
    REQUIRE(half.n() == 2);
    CHECK(subsample_split(ds, 0.5, 3) == half);

    Dataset big = random_dataset(200, 6, 5, 9);
    Dataset sub = subsample_split(big, 0.33, 5);
    CHECK(sub.n() == 66);  // ceil(0.33 * 200)
    // order preserved: every row of sub appears in big at increasing positions
    std::int64_t cursor = 0;
    for (std::int64_t i = 0; i < sub.n(); ++i) {
        bool found = false;
        for (; cursor < big.n(); ++cursor) {
            if (std::vector<int>(sub.labels(i).begin(), sub.labels(i).end()) ==
                    std::vector<int>(big.labels(cursor).begin(), big.labels(cursor).end()) &&
                std::vector<double>(sub.feature_values(i).begin(), sub.feature_values(i).end()) ==
                    std::vector<double>(big.feature_values(cursor).begin(),
                                        big.feature_values(cursor).end())) {
                found = true;
                ++cursor;
                break;
            }
        }
        REQUIRE(found);
    }
}

TEST_CASE("subsample rejects bad fractions") {
    Dataset ds = random_dataset(10, 3, 3, 1);
    CHECK_THROWS(subsample_split(ds, 0.0, 1));
    CHECK_THROWS(subsample_split(ds, -0.5, 1));
    CHECK_THROWS(subsample_split(ds, 1.5, 1));
}

TEST_CASE("co-occurrence counts shared rows") {
    Dataset ds(0, 1, 3);
    ds.add_row({0, 1}, {});
    ds.add_row({2}, {});
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    CHECK(cooc.at(0, 0) == 1);
    CHECK(cooc.at(1, 1) == 1);
    CHECK(cooc.at(0, 1) == 1);
    CHECK(cooc.at(2, 2) == 1);
    CHECK(cooc.at(0, 2) == 0);
    CHECK(cooc.at(1, 2) == 0);
    CHECK(cooc.nnz() == 4);
}

TEST_CASE("co-occurrence of singleton rows is diagonal") {
    Dataset ds(0, 1, 4);
    for (int l = 0; l < 4; ++l) ds.add_row({l}, {});
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    CHECK(cooc.nnz() == 4);
    for (int l = 0; l < 4; ++l) CHECK(cooc.at(l, l) == 1);
}

TEST_CASE("co-occurrence matches a brute-force count") {
    Dataset ds = random_dataset(50, 2, 20, 17);
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    for (int i = 0; i < 20; ++i) {
        for (int j = i; j < 20; ++j) {
            std::int64_t expected = 0;
            for (std::int64_t r = 0; r < ds.n(); ++r) {
                auto ls = ds.labels(r);
                bool has_i = std::find(ls.begin(), ls.end(), i) != ls.end();
                bool has_j = std::find(ls.begin(), ls.end(), j) != ls.end();
                if (has_i && has_j) ++expected;
            }
            CHECK(cooc.at(i, j) == expected);
        }
    }
}

TEST_CASE("co-occurrence is label-permutation equivariant") {
    Dataset ds = random_dataset(40, 2, 10, 23);
    std::vector<int> perm = {3, 7, 1, 9, 0, 5, 2, 8, 6, 4};
    Dataset permuted(0, ds.p(), ds.d());
    for (std::int64_t r = 0; r < ds.n(); ++r) {
        std::vector<int> labels;
        for (int l : ds.labels(r)) labels.push_back(perm[static_cast<std::size_t>(l)]);
        permuted.add_row(std::move(labels), {});
    }
    CooccurrenceMatrix a = label_cooccurrence(ds);
    CooccurrenceMatrix b = label_cooccurrence(permuted);
    for (int i = 0; i < 10; ++i) {
        for (int j = i; j < 10; ++j) {
            CHECK(a.at(i, j) ==
                  b.at(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
        }
    }
}

TEST_CASE("bundled text corpus has the pinned shape") {
    synth::Corpus c = synth::text_corpus();
    CHECK(c.train.n() == 4880);
    CHECK(c.train.p() == 1836);
    CHECK(c.train.d() == 159);
    CHECK(c.test.n() == 2515);
    CHECK(c.train.mean_labels_per_row() == doctest::Approx(2.6).epsilon(0.08));
}
