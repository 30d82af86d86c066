#include "mlgt/gt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mlgt/prng.hpp"

namespace mlgt {

std::string gt_kind_name(GtKind kind) {
    switch (kind) {
        case GtKind::SP: return "SP";
        case GtKind::CW: return "CW";
        case GtKind::SAFFRON: return "SAFFRON";
        case GtKind::NMF: return "NMF";
        case GtKind::IDENTITY: return "IDENTITY";
    }
    throw std::logic_error("unknown matrix kind");
}

GtKind gt_kind_from_name(const std::string& name) {
    if (name == "SP") return GtKind::SP;
    if (name == "CW") return GtKind::CW;
    if (name == "SAFFRON") return GtKind::SAFFRON;
    if (name == "NMF") return GtKind::NMF;
    if (name == "IDENTITY") return GtKind::IDENTITY;
    throw std::invalid_argument("unknown matrix kind: " + name);
}

std::size_t GroupTestingMatrix::nnz() const {
    std::size_t total = 0;
    for (const auto& row : rows) total += row.size();
    return total;
}

bool GroupTestingMatrix::has(int group, int label) const {
    const auto& row = rows[group];
    return std::binary_search(row.begin(), row.end(), label);
}

void check_dual(const GroupTestingMatrix& a) {
    if (a.rows.size() != static_cast<std::size_t>(a.m) ||
        a.cols.size() != static_cast<std::size_t>(a.d)) {
        throw std::logic_error("matrix views sized inconsistently");
    }
    std::vector<std::vector<int>> rebuilt(a.d);
    for (int i = 0; i < a.m; ++i) {
        int prev = -1;
        for (int j : a.rows[i]) {
            if (j <= prev || j >= a.d) throw std::logic_error("row list unsorted or out of range");
            prev = j;
            rebuilt[j].push_back(i);
        }
    }
    if (rebuilt != a.cols) throw std::logic_error("rows and cols views disagree");
}

namespace {

std::vector<std::vector<int>> cols_from_rows(const std::vector<std::vector<int>>& rows, int d) {
    std::vector<std::vector<int>> cols(d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j : rows[i]) cols[j].push_back(static_cast<int>(i));
    }
    return cols;
}

std::vector<std::vector<int>> rows_from_cols(const std::vector<std::vector<int>>& cols, int m) {
    std::vector<std::vector<int>> rows(m);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (int i : cols[j]) rows[i].push_back(static_cast<int>(j));
    }
    return rows;
}

void finalize(GroupTestingMatrix& a) {
    for (auto& row : a.rows) std::sort(row.begin(), row.end());
    a.cols = cols_from_rows(a.rows, a.d);
    check_dual(a);
}

}  // namespace

int SignatureMatrix::bit(int t, int j) const {
    int base = (t < b) ? ((j >> (b - 1 - t)) & 1) : (1 - ((j >> (b - 1 - (t - b))) & 1));
    return base;
}

std::vector<std::uint8_t> SignatureMatrix::column(int j) const {
    std::vector<std::uint8_t> col(m2);
    for (int t = 0; t < m2; ++t) col[t] = static_cast<std::uint8_t>(bit(t, j));
    return col;
}

SignatureMatrix signature_matrix(int d) {
    if (d < 2) throw std::invalid_argument("signature_matrix: need at least 2 labels");
    int b = 1;
    while ((1LL << b) < d) ++b;
    SignatureMatrix sig;
    sig.d = d;
    sig.b = b;
    sig.m2 = 2 * b;
    return sig;
}

GroupTestingMatrix build_sp_gt_prob(int m, int d, double prob, std::uint64_t seed) {
    if (m < 1 || d < 1) throw std::invalid_argument("build_sp_gt: m and d must be positive");
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("build_sp_gt: bad probability");
    GroupTestingMatrix a;
    a.m = m;
    a.d = d;
    a.kind = GtKind::SP;
    a.seed = seed;
    a.rows.resize(m);
    SplitMix64 rng(seed);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < d; ++j) {
            if (rng.bernoulli(prob)) a.rows[i].push_back(j);
        }
    }
    finalize(a);
    return a;
}

GroupTestingMatrix build_sp_gt(int m, int d, int k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("build_sp_gt: sparsity must be positive");
    return build_sp_gt_prob(m, d, 1.0 / (k + 1), seed);
}

GroupTestingMatrix build_cw_gt(int d, int c, int r, std::uint64_t seed) {
    if (d < 1 || c < 1 || r < 1) throw std::invalid_argument("build_cw_gt: bad dimensions");
    if (d % r != 0) throw std::invalid_argument("build_cw_gt: row weight must divide label count");
    int per = d / r;
    GroupTestingMatrix a;
    a.m = per * c;
    a.d = d;
    a.kind = GtKind::CW;
    a.c = c;
    a.r = r;
    a.seed = seed;
    a.rows.resize(a.m);
    SplitMix64 rng(seed);
    std::vector<int> perm(d);
    for (int s = 0; s < c; ++s) {
        for (int j = 0; j < d; ++j) perm[j] = j;
        if (s > 0) shuffle(perm, rng);
        for (int i = 0; i < per; ++i) {
            auto& row = a.rows[s * per + i];
            row.assign(perm.begin() + static_cast<std::ptrdiff_t>(i) * r,
                       perm.begin() + static_cast<std::ptrdiff_t>(i + 1) * r);
        }
    }
    finalize(a);
    return a;
}

GroupTestingMatrix build_cw_gt_padded(int d, int c, int r, std::uint64_t seed) {
    if (d < 1 || r < 1) throw std::invalid_argument("build_cw_gt_padded: bad dimensions");
    int d_pad = ((d + r - 1) / r) * r;
    GroupTestingMatrix full = build_cw_gt(d_pad, c, r, seed);
    if (d_pad == d) return full;
    GroupTestingMatrix a;
    a.m = full.m;
    a.d = d;
    a.kind = GtKind::CW;
    a.c = c;
    a.r = r;
    a.seed = seed;
    a.rows.resize(a.m);
    for (int i = 0; i < a.m; ++i) {
        for (int j : full.rows[i]) {
            if (j < d) a.rows[i].push_back(j);
        }
    }
    finalize(a);
    return a;
}

int cw_row_weight_for(int d, int m, int c) {
    if (d < 1 || m < 1 || c < 1) throw std::invalid_argument("cw_row_weight_for: bad dimensions");
    double target = static_cast<double>(d) * c / m;
    int r0 = std::max(1, static_cast<int>(std::lround(target)));
    int best = -1;
    for (int dr = 0; dr <= 2; ++dr) {
        for (int sign : {1, -1}) {
            int r = r0 + sign * dr;
            if (r < 1 || (sign < 0 && dr == 0)) continue;
            long long per = (d + r - 1) / r;
            if (per * c == m) {
                best = r;
                break;
            }
        }
        if (best > 0) break;
    }
    if (best < 0) {
        throw std::invalid_argument("no row weight near " + std::to_string(target) +
                                    " yields exactly " + std::to_string(m) + " groups");
    }
    return best;
}

GroupTestingMatrix build_saffron(int d, int m1, int c, std::uint64_t seed) {
    if (d < 2) throw std::invalid_argument("build_saffron: need at least 2 labels");
    if (m1 < 1 || c < 1) throw std::invalid_argument("build_saffron: bad parameters");
    if (c > m1) throw std::invalid_argument("build_saffron: left degree exceeds bin count");
    SignatureMatrix sig = signature_matrix(d);

    long long total = static_cast<long long>(d) * c;
    if (total < m1) throw std::invalid_argument("build_saffron: more bins than edges");
    // slot_bins lists every bin once per unit of its quota
    std::vector<int> bin_of(total);
    {
        long long base = total / m1;
        long long rem = total % m1;
        long long pos = 0;
        for (int i = 0; i < m1; ++i) {
            long long quota = base + (i < rem ? 1 : 0);
            for (long long t = 0; t < quota; ++t) bin_of[pos++] = i;
        }
    }
    SplitMix64 rng(seed);
    shuffle(bin_of, rng);

    // stub s belongs to label s / c; repair duplicate (label, bin) pairs by
    // swapping stubs between labels, which preserves all degrees
    auto label_has_bin = [&](int label, int bin, long long skip_stub) {
        long long start = static_cast<long long>(label) * c;
        for (long long s = start; s < start + c; ++s) {
            if (s != skip_stub && bin_of[s] == bin) return true;
        }
        return false;
    };
    bool clean = false;
    for (int pass = 0; pass < 200 && !clean; ++pass) {
        clean = true;
        for (long long s = 0; s < total; ++s) {
            int label = static_cast<int>(s / c);
            if (!label_has_bin(label, bin_of[s], s)) continue;
            clean = false;
            bool fixed = false;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                long long t = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(total)));
                int other = static_cast<int>(t / c);
                if (other == label || bin_of[t] == bin_of[s]) continue;
                if (label_has_bin(label, bin_of[t], s)) continue;
                if (label_has_bin(other, bin_of[s], t)) continue;
                std::swap(bin_of[s], bin_of[t]);
                fixed = true;
                break;
            }
            if (!fixed) break;
        }
    }
    if (!clean) throw std::runtime_error("build_saffron: could not remove duplicate edges");

    GroupTestingMatrix a;
    a.d = d;
    a.kind = GtKind::SAFFRON;
    a.c = c;
    a.seed = seed;
    a.saffron_meta.m1 = m1;
    a.saffron_meta.m2 = sig.m2;
    a.saffron_meta.bin_edges.assign(m1, {});
    for (long long s = 0; s < total; ++s) {
        a.saffron_meta.bin_edges[bin_of[s]].push_back(static_cast<int>(s / c));
    }
    for (auto& edges : a.saffron_meta.bin_edges) std::sort(edges.begin(), edges.end());

    a.m = m1 * sig.m2;
    a.rows.resize(a.m);
    for (int i = 0; i < m1; ++i) {
        for (int j : a.saffron_meta.bin_edges[i]) {
            for (int t = 0; t < sig.m2; ++t) {
                if (sig.bit(t, j)) a.rows[i * sig.m2 + t].push_back(j);
            }
        }
    }
    finalize(a);
    return a;
}

GroupTestingMatrix build_identity(int d) {
    if (d < 1) throw std::invalid_argument("build_identity: d must be positive");
    GroupTestingMatrix a;
    a.m = d;
    a.d = d;
    a.kind = GtKind::IDENTITY;
    a.c = 1;
    a.r = 1;
    a.rows.resize(d);
    for (int i = 0; i < d; ++i) a.rows[i] = {i};
    finalize(a);
    return a;
}

GroupTestingMatrix sample_nmf_gt(const SamplingBasis& basis, std::uint64_t seed,
                                 bool repair_empty) {
    GroupTestingMatrix a;
    a.m = basis.m;
    a.d = basis.d;
    a.kind = GtKind::NMF;
    a.c = basis.target_weight;
    a.seed = seed;
    auto cols = sample_columns(basis, seed);
    if (repair_empty) {
        for (int j = 0; j < basis.d; ++j) {
            if (!cols[j].empty()) continue;
            int best = 0;
            for (int i = 1; i < basis.m; ++i) {
                if (basis.at(i, j) > basis.at(best, j)) best = i;
            }
            cols[j].push_back(best);
        }
    }
    a.cols = std::move(cols);
    a.rows = rows_from_cols(a.cols, a.m);
    check_dual(a);
    return a;
}

GroupTestingMatrix build_nmf_gt(const Dataset& ds, int m, int c,
                                const SymNmfConfig& nmf_cfg, std::uint64_t seed) {
    if (m >= ds.d()) throw std::invalid_argument("build_nmf_gt: group count must be below label count");
    if (c < 1) throw std::invalid_argument("build_nmf_gt: column weight must be positive");
    if (c >= m) throw std::invalid_argument("build_nmf_gt: column weight must be below group count");
    SymNmfConfig cfg = nmf_cfg;
    cfg.seed = derive_seed(seed, 0xF1);
    NmfBasis basis = symnmf_cd(label_cooccurrence(ds), m, cfg);
    SamplingBasis probs = reweight_columns(basis, c);
    GroupTestingMatrix a = sample_nmf_gt(probs, derive_seed(seed, 0xF2));
    a.seed = seed;
    return a;
}

double correlation_metric(const GroupTestingMatrix& a, const Dataset& ds) {
    if (a.d != ds.d()) throw std::invalid_argument("correlation_metric: label count mismatch");
    if (ds.n() < 1) throw std::invalid_argument("correlation_metric: empty dataset");
    std::map<std::pair<int, int>, double> diff;
    double inv_n = 1.0 / static_cast<double>(ds.n());
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    for (const auto& e : cooc.entries) {
        diff[{e.i, e.j}] += inv_n * static_cast<double>(e.count);
    }
    double inv_m = 1.0 / static_cast<double>(a.m);
    for (const auto& row : a.rows) {
        for (std::size_t s = 0; s < row.size(); ++s) {
            for (std::size_t t = s; t < row.size(); ++t) {
                diff[{row[s], row[t]}] -= inv_m;
            }
        }
    }
    double sum = 0.0;
    for (const auto& [key, v] : diff) {
        double w = (key.first == key.second) ? 1.0 : 2.0;
        sum += w * v * v;
    }
    return std::sqrt(sum);
}

void save_gt_matrix(const GroupTestingMatrix& a, const std::string& mtx_path,
                    const std::string& meta_path) {
    std::ofstream out(mtx_path);
    if (!out) throw std::runtime_error("cannot open " + mtx_path);
    out << "%%MatrixMarket matrix coordinate pattern general\n";
    out << a.m << " " << a.d << " " << a.nnz() << "\n";
    for (int i = 0; i < a.m; ++i) {
        for (int j : a.rows[i]) out << (i + 1) << " " << (j + 1) << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + mtx_path);

    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["kind"] = gt_kind_name(a.kind);
    meta["m"] = a.m;
    meta["d"] = a.d;
    meta["c"] = a.c;
    meta["r"] = a.r;
    meta["seed"] = a.seed;
    if (a.kind == GtKind::SAFFRON) {
        meta["m1"] = a.saffron_meta.m1;
        meta["m2"] = a.saffron_meta.m2;
        meta["bin_edges"] = a.saffron_meta.bin_edges;
    }
    std::ofstream mout(meta_path);
    if (!mout) throw std::runtime_error("cannot open " + meta_path);
    mout << meta.dump(2) << "\n";
}

GroupTestingMatrix load_gt_matrix(const std::string& mtx_path, const std::string& meta_path) {
    std::ifstream in(mtx_path);
    if (!in) throw std::runtime_error("cannot open " + mtx_path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) {
        throw std::runtime_error(mtx_path + ": missing MatrixMarket header");
    }
    {
        std::istringstream hs(line);
        std::string tag, object, fmt, field, symmetry;
        hs >> tag >> object >> fmt >> field >> symmetry;
        if (object != "matrix" || fmt != "coordinate" || field != "pattern") {
            throw std::runtime_error(mtx_path + ": expected coordinate pattern matrix");
        }
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    GroupTestingMatrix a;
    std::size_t nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> a.m >> a.d >> nnz)) throw std::runtime_error(mtx_path + ": bad size line");
    }
    if (a.m < 1 || a.d < 1) throw std::runtime_error(mtx_path + ": bad dimensions");
    a.rows.resize(a.m);
    for (std::size_t e = 0; e < nnz; ++e) {
        int i = 0, j = 0;
        if (!(in >> i >> j)) throw std::runtime_error(mtx_path + ": truncated entry list");
        if (i < 1 || i > a.m || j < 1 || j > a.d) {
            throw std::runtime_error(mtx_path + ": entry out of range");
        }
        a.rows[i - 1].push_back(j - 1);
    }

    std::ifstream min(meta_path);
    if (!min) throw std::runtime_error("cannot open " + meta_path);
    nlohmann::json meta = nlohmann::json::parse(min);
    a.kind = gt_kind_from_name(meta.at("kind").get<std::string>());
    a.c = meta.value("c", 0);
    a.r = meta.value("r", 0);
    a.seed = meta.value("seed", std::uint64_t{0});
    if (a.kind == GtKind::SAFFRON) {
        a.saffron_meta.m1 = meta.at("m1").get<int>();
        a.saffron_meta.m2 = meta.at("m2").get<int>();
        a.saffron_meta.bin_edges =
            meta.at("bin_edges").get<std::vector<std::vector<int>>>();
        if (a.saffron_meta.m1 * a.saffron_meta.m2 != a.m) {
            throw std::runtime_error(meta_path + ": bin layout disagrees with matrix shape");
        }
    }
    finalize(a);
    return a;
}

}  // namespace mlgt
