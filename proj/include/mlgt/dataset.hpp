#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mlgt {

// Index base of the labels / features columns in a repository text file.
// Repository dumps commonly ship 0-based labels and 1-based features.
struct IndexingConfig {
    bool labels_one_indexed = false;
    bool features_one_indexed = true;
};

// Multilabel dataset: n instances, sparse real features (dim p) and sparse
// binary labels (dim d). Indices are 0-based internally, label lists sorted
// strictly increasing per row. Immutable after construction; safe to share
// across threads read-only.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::int64_t n, int p, int d);

    std::int64_t n() const { return n_; }
    int p() const { return p_; }
    int d() const { return d_; }

    std::span<const int> labels(std::int64_t row) const {
        return {label_idx_.data() + label_off_[static_cast<std::size_t>(row)],
                label_idx_.data() + label_off_[static_cast<std::size_t>(row) + 1]};
    }
    std::span<const int> feature_indices(std::int64_t row) const {
        return {feat_idx_.data() + feat_off_[static_cast<std::size_t>(row)],
                feat_idx_.data() + feat_off_[static_cast<std::size_t>(row) + 1]};
    }
    std::span<const double> feature_values(std::int64_t row) const {
        return {feat_val_.data() + feat_off_[static_cast<std::size_t>(row)],
                feat_val_.data() + feat_off_[static_cast<std::size_t>(row) + 1]};
    }

    double mean_labels_per_row() const;

    // Appends one row; used by the parser and by test fixtures. Labels are
    // sorted and deduplicated, features sorted by index. Throws on indices
    // out of range or non-finite values.
    void add_row(std::vector<int> labels, std::vector<std::pair<int, double>> features);

    bool operator==(const Dataset& other) const = default;

private:
    std::int64_t n_ = 0;
    int p_ = 0;
    int d_ = 0;
    std::vector<std::int64_t> label_off_{0};
    std::vector<int> label_idx_;
    std::vector<std::int64_t> feat_off_{0};
    std::vector<int> feat_idx_;
    std::vector<double> feat_val_;
};

// Sparse symmetric label co-occurrence counts. Stores the upper triangle
// plus diagonal as sorted (i, j, count) triples with i <= j.
struct CooccurrenceMatrix {
    struct Entry {
        int i;
        int j;
        std::int64_t count;
        bool operator==(const Entry&) const = default;
    };
    int dim = 0;
    std::vector<Entry> entries;

    std::int64_t at(int i, int j) const;
    std::int64_t nnz() const { return static_cast<std::int64_t>(entries.size()); }
};

// Parses the Extreme Classification Repository text format:
//   header "n p d", then one line per instance
//   "l1,l2,...  f1:v1 f2:v2 ...", labels comma separated (possibly empty).
Dataset parse_repo_format(std::istream& in, const IndexingConfig& cfg = {});
Dataset load_repo_file(const std::string& path, const IndexingConfig& cfg = {});

// Round-trip writer for the same format.
void write_repo_format(const Dataset& ds, std::ostream& out, const IndexingConfig& cfg = {});
void save_repo_file(const Dataset& ds, const std::string& path, const IndexingConfig& cfg = {});

// ceil(fraction*n) rows chosen uniformly without replacement; original row
// order preserved. Identical seeds give bitwise identical results.
Dataset subsample_split(const Dataset& ds, double fraction, std::uint64_t seed);

// Label-by-label co-occurrence counts. Rows with no labels contribute
// nothing. Cost O(sum of per-row label count squared).
CooccurrenceMatrix label_cooccurrence(const Dataset& ds);

}  // namespace mlgt
