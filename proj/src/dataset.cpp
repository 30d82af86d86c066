#include "mlgt/dataset.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mlgt/prng.hpp"
#include "mlgt/util.hpp"

namespace mlgt {

Dataset::Dataset(std::int64_t n, int p, int d) : p_(p), d_(d) {
    if (n < 0 || p < 0 || d < 0) throw std::invalid_argument("Dataset: negative dimension");
    (void)n;  // row count grows with add_row; header n is validated by the parser
}

double Dataset::mean_labels_per_row() const {
    if (n_ == 0) return 0.0;
    return static_cast<double>(label_idx_.size()) / static_cast<double>(n_);
}

void Dataset::add_row(std::vector<int> labels, std::vector<std::pair<int, double>> features) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (int l : labels) {
        if (l < 0 || l >= d_) throw std::out_of_range("Dataset: label index out of range");
    }
    std::sort(features.begin(), features.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [idx, val] : features) {
        if (idx < 0 || idx >= p_) throw std::out_of_range("Dataset: feature index out of range");
        if (!std::isfinite(val)) throw std::invalid_argument("Dataset: non-finite feature value");
    }
    label_idx_.insert(label_idx_.end(), labels.begin(), labels.end());
    label_off_.push_back(static_cast<std::int64_t>(label_idx_.size()));
    for (const auto& [idx, val] : features) {
        feat_idx_.push_back(idx);
        feat_val_.push_back(val);
    }
    feat_off_.push_back(static_cast<std::int64_t>(feat_idx_.size()));
    ++n_;
}

std::int64_t CooccurrenceMatrix::at(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(entries.begin(), entries.end(), Entry{i, j, 0},
                               [](const Entry& a, const Entry& b) {
                                   return a.i != b.i ? a.i < b.i : a.j < b.j;
                               });
    if (it != entries.end() && it->i == i && it->j == j) return it->count;
    return 0;
}

namespace {

int parse_int_token(std::string_view tok, std::int64_t line_no, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                 ": malformed " + what + " '" + std::string(tok) + "'");
    }
    return value;
}

double parse_double_token(std::string_view tok, std::int64_t line_no) {
    // std::from_chars for doubles is incomplete on some libstdc++ versions.
    std::string buf(tok);
    char* end = nullptr;
    double value = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                 ": malformed value '" + buf + "'");
    }
    return value;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace

Dataset parse_repo_format(std::istream& in, const IndexingConfig& cfg) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse error: empty input");
    std::string_view header = strip_cr(line);
    std::istringstream hs{std::string(header)};
    std::int64_t n = -1;
    int p = -1, d = -1;
    if (!(hs >> n >> p >> d)) throw std::runtime_error("parse error: malformed header");
    std::string extra;
    if (hs >> extra) throw std::runtime_error("parse error: malformed header");
    if (n < 0 || p < 0 || d < 0) throw std::runtime_error("parse error: negative header field");

    const int label_base = cfg.labels_one_indexed ? 1 : 0;
    const int feature_base = cfg.features_one_indexed ? 1 : 0;

    Dataset ds(n, p, d);
    std::int64_t line_no = 1;
    std::int64_t rows = 0;
    while (rows < n) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("parse error: expected " + std::to_string(n) +
                                     " rows, got " + std::to_string(rows));
        }
        ++line_no;
        std::string_view sv = strip_cr(line);

        // The label field is everything before the first space. It may be
        // empty: instances with no labels start with a space.
        std::size_t space = sv.find(' ');
        std::string_view label_field = sv.substr(0, space == std::string_view::npos ? sv.size() : space);
        std::vector<int> labels;
        if (!label_field.empty()) {
            std::size_t pos = 0;
            while (pos <= label_field.size()) {
                std::size_t comma = label_field.find(',', pos);
                std::string_view tok = label_field.substr(
                    pos, comma == std::string_view::npos ? label_field.size() - pos : comma - pos);
                int raw = parse_int_token(tok, line_no, "label");
                int l = raw - label_base;
                if (l < 0 || l >= d) {
                    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                             ": label index " + std::to_string(raw) +
                                             " out of range");
                }
                labels.push_back(l);
                if (comma == std::string_view::npos) break;
                pos = comma + 1;
            }
        }

        std::vector<std::pair<int, double>> features;
        std::size_t pos = space == std::string_view::npos ? sv.size() : space + 1;
        while (pos < sv.size()) {
            while (pos < sv.size() && sv[pos] == ' ') ++pos;
            if (pos >= sv.size()) break;
            std::size_t end = sv.find(' ', pos);
            if (end == std::string_view::npos) end = sv.size();
            std::string_view tok = sv.substr(pos, end - pos);
            std::size_t colon = tok.find(':');
            if (colon == std::string_view::npos || colon == 0 || colon == tok.size() - 1) {
                throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                         ": malformed feature token '" + std::string(tok) + "'");
            }
            int raw = parse_int_token(tok.substr(0, colon), line_no, "feature index");
            double val = parse_double_token(tok.substr(colon + 1), line_no);
            if (!std::isfinite(val)) {
                throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                         ": non-finite feature value");
            }
            int f = raw - feature_base;
            if (f < 0 || f >= p) {
                throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                         ": feature index " + std::to_string(raw) + " out of range");
            }
            features.emplace_back(f, val);
            pos = end + 1;
        }
        ds.add_row(std::move(labels), std::move(features));
        ++rows;
    }
    return ds;
}

Dataset load_repo_file(const std::string& path, const IndexingConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    return parse_repo_format(in, cfg);
}

void write_repo_format(const Dataset& ds, std::ostream& out, const IndexingConfig& cfg) {
    const int label_base = cfg.labels_one_indexed ? 1 : 0;
    const int feature_base = cfg.features_one_indexed ? 1 : 0;
    out << ds.n() << ' ' << ds.p() << ' ' << ds.d() << '\n';
    for (std::int64_t r = 0; r < ds.n(); ++r) {
        auto labels = ds.labels(r);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (i) out << ',';
            out << labels[i] + label_base;
        }
        auto idx = ds.feature_indices(r);
        auto val = ds.feature_values(r);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out << ' ' << idx[i] + feature_base << ':' << format_double(val[i]);
        }
        out << '\n';
    }
}

void save_repo_file(const Dataset& ds, const std::string& path, const IndexingConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    write_repo_format(ds, out, cfg);
}

Dataset subsample_split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("subsample_split: fraction must be in (0, 1]");
    }
    const std::int64_t keep = static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(ds.n())));
    if (keep < 1) throw std::invalid_argument("subsample_split: empty result");
    if (keep >= ds.n()) return ds;
    SplitMix64 rng(seed);
    std::vector<std::int64_t> rows = sample_without_replacement(ds.n(), keep, rng);
    Dataset out(keep, ds.p(), ds.d());
    for (std::int64_t r : rows) {
        auto labels = ds.labels(r);
        auto idx = ds.feature_indices(r);
        auto val = ds.feature_values(r);
        std::vector<std::pair<int, double>> feats;
        feats.reserve(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) feats.emplace_back(idx[i], val[i]);
        out.add_row({labels.begin(), labels.end()}, std::move(feats));
    }
    return out;
}

CooccurrenceMatrix label_cooccurrence(const Dataset& ds) {
    if (ds.d() < 1) throw std::invalid_argument("label_cooccurrence: d must be >= 1");
    std::map<std::pair<int, int>, std::int64_t> counts;
    for (std::int64_t r = 0; r < ds.n(); ++r) {
        auto labels = ds.labels(r);
        for (std::size_t a = 0; a < labels.size(); ++a) {
            for (std::size_t b = a; b < labels.size(); ++b) {
                ++counts[{labels[a], labels[b]}];
            }
        }
    }
    CooccurrenceMatrix cooc;
    cooc.dim = ds.d();
    cooc.entries.reserve(counts.size());
    for (const auto& [key, count] : counts) {
        cooc.entries.push_back({key.first, key.second, count});
    }
    return cooc;
}

}  // namespace mlgt
