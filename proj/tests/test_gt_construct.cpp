#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "mlgt/codec.hpp"
#include "mlgt/gt.hpp"
#include "mlgt/prng.hpp"
#include "support/synthetic.hpp"

using namespace mlgt;

namespace {

std::vector<int> row_weights(const GroupTestingMatrix& a) {
    std::vector<int> w;
    for (const auto& r : a.rows) w.push_back(static_cast<int>(r.size()));
    return w;
}

std::vector<int> col_weights(const GroupTestingMatrix& a) {
    std::vector<int> w;
    for (const auto& c : a.cols) w.push_back(static_cast<int>(c.size()));
    return w;
}

Dataset random_pairs_dataset(int d, std::uint64_t seed) {
    Dataset ds(0, 4, d);
    SplitMix64 rng(seed);
    for (int i = 0; i < 12 * d; ++i) {
        std::vector<int> labels = {static_cast<int>(rng.next_below(d))};
        if (rng.next_double() < 0.5) labels.push_back(static_cast<int>(rng.next_below(d)));
        ds.add_row(std::move(labels), {{0, 1.0}});
    }
    return ds;
}

// Frobenius distance between the label and group Gram matrices, densely.
double phi_dense(const GroupTestingMatrix& a, const Dataset& ds) {
    int d = ds.d();
    std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
    for (std::int64_t r = 0; r < ds.n(); ++r) {
        auto ls = ds.labels(r);
        for (int i : ls) {
            for (int j : ls) c[static_cast<std::size_t>(i) * d + j] += 1.0;
        }
    }
    for (double& v : c) v /= static_cast<double>(ds.n());
    std::vector<double> g(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& row : a.rows) {
        for (int i : row) {
            for (int j : row) g[static_cast<std::size_t>(i) * d + j] += 1.0;
        }
    }
    for (double& v : g) v /= static_cast<double>(a.m);
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += (c[i] - g[i]) * (c[i] - g[i]);
    return std::sqrt(sum);
}

}  // namespace

TEST_CASE("random sparse construction is reproducible and dual-consistent") {
    GroupTestingMatrix a = build_sp_gt(2, 2, 1, 99);
    GroupTestingMatrix b = build_sp_gt(2, 2, 1, 99);
    CHECK(a.rows == b.rows);
    CHECK(a.kind == GtKind::SP);
    check_dual(a);
    GroupTestingMatrix c = build_sp_gt(40, 30, 5, 1);
    check_dual(c);
}

TEST_CASE("probability zero gives the empty matrix") {
    GroupTestingMatrix a = build_sp_gt_prob(6, 9, 0.0, 3);
    CHECK(a.nnz() == 0);
    GroupTestingMatrix b = build_sp_gt_prob(6, 9, 1.0, 3);
    CHECK(b.nnz() == 6 * 9);
}

TEST_CASE("sparse construction density concentrates at 1/(k+1)") {
    GroupTestingMatrix a = build_sp_gt(120, 159, 5, 2024);
    double n_entries = 120.0 * 159.0;
    double density = static_cast<double>(a.nnz()) / n_entries;
    double p = 1.0 / 6.0;
    double sigma = std::sqrt(p * (1 - p) / n_entries);
    CHECK(std::abs(density - p) <= 3.0 * sigma);
}

TEST_CASE("constant-weight construction at weight one partitions the columns") {
    GroupTestingMatrix a = build_cw_gt(6, 1, 3, 1);
    REQUIRE(a.m == 2);
    CHECK(a.rows[0] == std::vector<int>{0, 1, 2});
    CHECK(a.rows[1] == std::vector<int>{3, 4, 5});
}

TEST_CASE("constant-weight construction keeps exact row and column weights") {
    GroupTestingMatrix a = build_cw_gt(6, 2, 3, 5);
    REQUIRE(a.m == 4);
    CHECK(a.rows[0] == std::vector<int>{0, 1, 2});
    CHECK(a.rows[1] == std::vector<int>{3, 4, 5});
    for (int w : row_weights(a)) CHECK(w == 3);
    for (int w : col_weights(a)) CHECK(w == 2);
    check_dual(a);

    GroupTestingMatrix big = build_cw_gt(48, 3, 8, 11);
    CHECK(big.m == 18);
    for (int w : row_weights(big)) CHECK(w == 8);
    for (int w : col_weights(big)) CHECK(w == 3);
}

TEST_CASE("constant-weight construction rejects weights that do not divide") {
    CHECK_THROWS(build_cw_gt(159, 3, 8, 1));
}

TEST_CASE("padded constant-weight build drops the padding but keeps column weights") {
    GroupTestingMatrix a = build_cw_gt_padded(159, 3, 8, 7);
    CHECK(a.d == 159);
    CHECK(a.m == 60);  // padded to 160, then 160 * 3 / 8
    for (int w : col_weights(a)) CHECK(w == 3);
    for (int w : row_weights(a)) {
        CHECK(w <= 8);
        CHECK(w >= 7);  // each submatrix loses the one padded column
    }
    check_dual(a);
    CHECK(cw_row_weight_for(159, 60, 3) == 8);
}

TEST_CASE("signature columns are binary expansions above their complements") {
    SignatureMatrix sig = signature_matrix(4);
    CHECK(sig.b == 2);
    CHECK(sig.m2 == 4);
    CHECK(sig.column(2) == std::vector<std::uint8_t>{1, 0, 0, 1});
    CHECK(sig.column(0) == std::vector<std::uint8_t>{0, 0, 1, 1});

    SignatureMatrix wide = signature_matrix(20);
    CHECK(wide.b == 5);
    std::set<std::vector<std::uint8_t>> seen;
    for (int j = 0; j < 20; ++j) {
        auto col = wide.column(j);
        CHECK(static_cast<int>(std::count(col.begin(), col.end(), 1)) == wide.b);
        seen.insert(col);
    }
    CHECK(seen.size() == 20);
}

TEST_CASE("bin-signature construction stacks signature columns per bin") {
    GroupTestingMatrix a = build_saffron(4, 2, 1, 13);
    REQUIRE(a.m == 8);  // 2 bins x signature length 4
    REQUIRE(a.saffron_meta.m1 == 2);
    REQUIRE(a.saffron_meta.m2 == 4);
    check_dual(a);
    SignatureMatrix sig = signature_matrix(4);

    int edges = 0;
    for (int bin = 0; bin < 2; ++bin) {
        const auto& members = a.saffron_meta.bin_edges[static_cast<std::size_t>(bin)];
        edges += static_cast<int>(members.size());
        for (int j = 0; j < 4; ++j) {
            bool member = std::find(members.begin(), members.end(), j) != members.end();
            for (int t = 0; t < 4; ++t) {
                bool set = a.has(bin * 4 + t, j);
                CHECK(set == (member && sig.bit(t, j) == 1));
            }
        }
    }
    CHECK(edges == 4);  // left degree 1 per label
}

TEST_CASE("bin-signature construction meets its degree equations at scale") {
    GroupTestingMatrix a = build_saffron(1024, 64, 4, 3);
    CHECK(a.m == 1280);  // 64 bins x 2 * 10 signature rows
    REQUIRE(a.saffron_meta.bin_edges.size() == 64);
    std::vector<int> left(1024, 0);
    for (const auto& bin : a.saffron_meta.bin_edges) {
        CHECK(bin.size() == 64);  // right degree 1024 * 4 / 64
        std::set<int> uniq(bin.begin(), bin.end());
        CHECK(uniq.size() == bin.size());  // no duplicate edges
        for (int j : bin) ++left[static_cast<std::size_t>(j)];
    }
    for (int deg : left) CHECK(deg == 4);
}

TEST_CASE("identity construction is the unit matrix") {
    GroupTestingMatrix a = build_identity(5);
    CHECK(a.m == 5);
    CHECK(a.kind == GtKind::IDENTITY);
    for (int i = 0; i < 5; ++i) CHECK(a.rows[static_cast<std::size_t>(i)] == std::vector<int>{i});
}

TEST_CASE("probability-one basis entries sample deterministically") {
    SamplingBasis sb;
    sb.m = 5;
    sb.d = 2;
    sb.target_weight = 2;
    sb.h = {1.0, 0.2,
            0.0, 0.2,
            0.0, 0.2,
            0.0, 0.2,
            1.0, 0.2};
    GroupTestingMatrix a = sample_nmf_gt(sb, 4);
    CHECK(a.cols[0] == std::vector<int>{0, 4});
    check_dual(a);
}

TEST_CASE("sampled column weight concentrates at the target") {
    SamplingBasis sb;
    sb.m = 10;
    sb.d = 1;
    sb.target_weight = 3;
    sb.h.assign(10, 0.3);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        total += static_cast<double>(sample_nmf_gt(sb, seed, false).cols[0].size());
    }
    double mean = total / 200.0;
    double sigma = std::sqrt(10 * 0.3 * 0.7 / 200.0);  // 0.102
    CHECK(std::abs(mean - 3.0) <= 3.0 * sigma);
}

TEST_CASE("empty sampled columns are repaired at the heaviest entry") {
    SamplingBasis sb;
    sb.m = 4;
    sb.d = 3;
    sb.target_weight = 1;
    // probabilities too small to ever fire; repair must fill the argmax row
    sb.h = {1e-12, 3e-12, 2e-12,
            2e-12, 1e-12, 4e-12,
            3e-12, 2e-12, 1e-12,
            1e-12, 1e-12, 2e-12};
    GroupTestingMatrix a = sample_nmf_gt(sb, 8);
    CHECK(a.cols[0] == std::vector<int>{2});
    CHECK(a.cols[1] == std::vector<int>{0});
    CHECK(a.cols[2] == std::vector<int>{1});
}

TEST_CASE("data-driven construction leaves no label untestable") {
    Dataset ds = random_pairs_dataset(12, 21);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        GroupTestingMatrix a = build_nmf_gt(ds, 6, 2, {}, seed);
        CHECK(a.kind == GtKind::NMF);
        check_dual(a);
        for (const auto& col : a.cols) CHECK(!col.empty());
    }
    GroupTestingMatrix a = build_nmf_gt(ds, 6, 2, {}, 5);
    GroupTestingMatrix b = build_nmf_gt(ds, 6, 2, {}, 5);
    CHECK(a.rows == b.rows);
}

TEST_CASE("data-driven construction rejects column weight at or above the rank") {
    Dataset ds = random_pairs_dataset(12, 22);
    CHECK_THROWS(build_nmf_gt(ds, 6, 6, {}, 1));
}

TEST_CASE("correlation metric vanishes when the Gram matrices match") {
    Dataset ds(0, 1, 4);
    for (int l = 0; l < 4; ++l) ds.add_row({l}, {{0, 1.0}});
    GroupTestingMatrix a = build_identity(4);
    CHECK(correlation_metric(a, ds) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("correlation metric of the empty matrix is the label Gram norm") {
    Dataset ds = random_pairs_dataset(8, 3);
    GroupTestingMatrix zero = build_sp_gt_prob(5, 8, 0.0, 1);
    double expected = phi_dense(zero, ds);  // reduces to ||YY^T||_F / n
    CHECK(correlation_metric(zero, ds) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("correlation metric agrees with the dense computation") {
    Dataset ds = random_pairs_dataset(10, 6);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GroupTestingMatrix a = build_sp_gt(7, 10, 2, seed);
        CHECK(correlation_metric(a, ds) == doctest::Approx(phi_dense(a, ds)).epsilon(1e-10));
    }
}

TEST_CASE("correlation metric survives the wide-label sparse path") {
    // d above the dense cutoff: same answer as the brute-force union walk
    int d = 5000;
    Dataset ds(0, 1, d);
    SplitMix64 rng(17);
    for (int i = 0; i < 40; ++i) {
        std::set<int> picks;
        while (picks.size() < 3) picks.insert(static_cast<int>(rng.next_below(d)));
        ds.add_row({picks.begin(), picks.end()}, {{0, 1.0}});
    }
    GroupTestingMatrix a = build_sp_gt_prob(6, d, 0.002, 9);
    std::map<std::pair<int, int>, double> diff;
    for (std::int64_t r = 0; r < ds.n(); ++r) {
        auto ls = ds.labels(r);
        for (int i : ls) {
            for (int j : ls) diff[{i, j}] += 1.0 / static_cast<double>(ds.n());
        }
    }
    for (const auto& row : a.rows) {
        for (int i : row) {
            for (int j : row) diff[{i, j}] -= 1.0 / static_cast<double>(a.m);
        }
    }
    double sum = 0.0;
    for (const auto& [ij, v] : diff) sum += v * v;
    CHECK(correlation_metric(a, ds) == doctest::Approx(std::sqrt(sum)).epsilon(1e-10));
}

TEST_CASE("correlation metric is invariant under a shared label permutation") {
    Dataset ds = random_pairs_dataset(9, 8);
    GroupTestingMatrix a = build_sp_gt(6, 9, 2, 4);
    std::vector<int> perm = {4, 0, 7, 2, 8, 1, 5, 3, 6};
    Dataset pds(0, ds.p(), 9);
    for (std::int64_t r = 0; r < ds.n(); ++r) {
        std::vector<int> labels;
        for (int l : ds.labels(r)) labels.push_back(perm[static_cast<std::size_t>(l)]);
        pds.add_row(std::move(labels), {{0, 1.0}});
    }
    std::vector<std::vector<int>> prows(static_cast<std::size_t>(a.m));
    for (int g = 0; g < a.m; ++g) {
        for (int l : a.rows[static_cast<std::size_t>(g)]) {
            prows[static_cast<std::size_t>(g)].push_back(perm[static_cast<std::size_t>(l)]);
        }
    }
    GroupTestingMatrix pa = synth::matrix_from_rows(a.m, 9, prows);
    CHECK(correlation_metric(pa, pds) == doctest::Approx(correlation_metric(a, ds)).epsilon(1e-10));
}

TEST_CASE("column-weight sweep returns the single candidate") {
    Dataset ds = random_pairs_dataset(10, 41);
    GtBuilder builder = [](const Dataset&, int, int c, std::uint64_t seed) {
        return build_cw_gt_padded(10, c, 4, seed);
    };
    ColumnWeightChoice choice = select_column_weight(ds, 5, {2}, 20, builder, 1);
    CHECK(choice.c == 2);
    REQUIRE(choice.losses.size() == 1);
    CHECK(choice.losses[0].first == 2);
    CHECK(choice.skipped.empty());
}

TEST_CASE("column-weight sweep prefers the candidate that decodes better") {
    Dataset ds = random_pairs_dataset(10, 42);
    GtBuilder builder = [](const Dataset&, int, int c, std::uint64_t seed) {
        // candidate 2 decodes exactly; candidate 7 pools everything into one blob
        if (c == 2) return build_identity(10);
        return build_sp_gt_prob(10, 10, 1.0, seed);
    };
    ColumnWeightChoice choice = select_column_weight(ds, 10, {2, 7}, 30, builder, 3);
    CHECK(choice.c == 2);
}

TEST_CASE("column-weight sweep breaks ties toward the smaller weight") {
    Dataset ds = random_pairs_dataset(10, 43);
    GtBuilder builder = [](const Dataset&, int, int, std::uint64_t) { return build_identity(10); };
    ColumnWeightChoice choice = select_column_weight(ds, 10, {4, 3}, 30, builder, 5);
    CHECK(choice.c == 3);
}

TEST_CASE("column-weight sweep skips failing candidates and rejects an all-fail sweep") {
    Dataset ds = random_pairs_dataset(10, 44);
    GtBuilder builder = [](const Dataset&, int, int c, std::uint64_t) {
        if (c != 3) throw std::runtime_error("unbuildable");
        return build_identity(10);
    };
    ColumnWeightChoice choice = select_column_weight(ds, 10, {2, 3, 4}, 30, builder, 7);
    CHECK(choice.c == 3);
    CHECK(choice.skipped == std::vector<int>{2, 4});

    GtBuilder never = [](const Dataset&, int, int, std::uint64_t) -> GroupTestingMatrix {
        throw std::runtime_error("unbuildable");
    };
    CHECK_THROWS(select_column_weight(ds, 10, {2, 3}, 30, never, 9));
}

TEST_CASE("matrix files round-trip") {
    GroupTestingMatrix a = build_saffron(16, 4, 2, 6);
    std::string dir = "gt_io_test_tmp";
    save_gt_matrix(a, dir + "_A.mtx", dir + "_A.meta.json");
    GroupTestingMatrix back = load_gt_matrix(dir + "_A.mtx", dir + "_A.meta.json");
    CHECK(back.m == a.m);
    CHECK(back.d == a.d);
    CHECK(back.kind == a.kind);
    CHECK(back.rows == a.rows);
    CHECK(back.cols == a.cols);
    CHECK(back.c == a.c);
    CHECK(back.saffron_meta.m1 == a.saffron_meta.m1);
    CHECK(back.saffron_meta.m2 == a.saffron_meta.m2);
    CHECK(back.saffron_meta.bin_edges == a.saffron_meta.bin_edges);
    std::remove((dir + "_A.mtx").c_str());
    std::remove((dir + "_A.meta.json").c_str());
}
