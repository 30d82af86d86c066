#include "mlgt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mlgt/prng.hpp"
#include "mlgt/util.hpp"

namespace fs = std::filesystem;

namespace mlgt {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> default_c_candidates() { return {2, 3, 4, 5, 6, 7, 8}; }

GroupTestingMatrix build_kind(const BuildSpec& spec, const Dataset* ds, int d, int c,
                              std::uint64_t seed) {
    switch (spec.kind) {
        case GtKind::SP:
            return build_sp_gt(spec.m, d, spec.k, seed);
        case GtKind::CW: {
            int r = spec.r > 0 ? spec.r : cw_row_weight_for(d, spec.m, c);
            return build_cw_gt_padded(d, c, r, seed);
        }
        case GtKind::SAFFRON:
            return build_saffron(d, spec.m1, c, seed);
        case GtKind::NMF: {
            if (!ds) throw std::invalid_argument("NMF construction needs a dataset");
            return build_nmf_gt(*ds, spec.m, c, spec.nmf, seed);
        }
        case GtKind::IDENTITY:
            return build_identity(d);
    }
    throw std::logic_error("unknown matrix kind");
}

}  // namespace

GroupTestingMatrix construct_matrix(const BuildSpec& spec, const Dataset* ds, int d,
                                    std::uint64_t seed, int threads, int* chosen_c) {
    if (ds && ds->d() != d) throw std::invalid_argument("construct_matrix: label count mismatch");
    int c = spec.c;
    bool c_matters = spec.kind == GtKind::NMF || spec.kind == GtKind::CW ||
                     spec.kind == GtKind::SAFFRON;
    if (c_matters && c == 0) {
        if (!ds) throw std::invalid_argument("column-weight sweep needs a dataset");
        GtBuilder builder = [&spec, d](const Dataset& data, int m, int cand,
                                       std::uint64_t s) {
            BuildSpec local = spec;
            local.c = cand;
            local.m = m;
            return build_kind(local, &data, d, cand, s);
        };
        int sample = static_cast<int>(std::min<std::int64_t>(ds->n(), 1000));
        ColumnWeightChoice choice = select_column_weight(
            *ds, spec.m, default_c_candidates(), sample, builder, derive_seed(seed, 0xC0), threads);
        c = choice.c;
    }
    if (chosen_c) *chosen_c = c;
    return build_kind(spec, ds, d, c, seed);
}

TrainedModel train_model(const Dataset& ds, const BuildSpec& spec, const TrainConfig& tc,
                         std::uint64_t seed, int threads) {
    TrainedModel model;
    model.spec = spec;
    model.seed = seed;
    auto t0 = std::chrono::steady_clock::now();
    model.a = construct_matrix(spec, &ds, ds.d(), seed, threads, &model.chosen_c);
    model.construct_seconds = seconds_since(t0);
    model.phi = correlation_metric(model.a, ds);
    auto t1 = std::chrono::steady_clock::now();
    TrainConfig cfg = tc;
    cfg.seed = derive_seed(seed, 0x7121);
    model.ens = train_ensemble(ds, model.a, cfg, threads);
    model.train_seconds = seconds_since(t1);
    return model;
}

Dataset restrict_to_labels(const Dataset& ds, const std::vector<int>& labels) {
    std::vector<int> local_of(ds.d(), -1);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        int g = labels[t];
        if (g < 0 || g >= ds.d()) throw std::invalid_argument("restrict_to_labels: label out of range");
        if (local_of[g] >= 0) throw std::invalid_argument("restrict_to_labels: duplicate label");
        local_of[g] = static_cast<int>(t);
    }
    Dataset out(0, ds.p(), static_cast<int>(labels.size()));
    for (std::int64_t i = 0; i < ds.n(); ++i) {
        std::vector<int> row_labels;
        for (int g : ds.labels(i)) {
            if (local_of[g] >= 0) row_labels.push_back(local_of[g]);
        }
        auto idx = ds.feature_indices(i);
        auto val = ds.feature_values(i);
        std::vector<std::pair<int, double>> feats;
        feats.reserve(idx.size());
        for (std::size_t f = 0; f < idx.size(); ++f) feats.emplace_back(idx[f], val[f]);
        out.add_row(std::move(row_labels), std::move(feats));
    }
    return out;
}

PartitionedModel train_partitioned(const Dataset& ds, const PartitionFile& partition,
                                   const BuildSpec& spec, const TrainConfig& tc,
                                   std::uint64_t seed, int threads) {
    PartitionedModel model;
    model.partition = partition;
    model.d = ds.d();
    for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
        const std::vector<int>& labels = partition.blocks[b];
        if (labels.empty()) throw std::invalid_argument("train_partitioned: empty block");
        Dataset block_ds = restrict_to_labels(ds, labels);
        BuildSpec block_spec = spec;
        int db = block_ds.d();
        if (db == 1) {
            block_spec.kind = GtKind::IDENTITY;
        } else if (block_spec.kind == GtKind::NMF) {
            block_spec.m = std::min(block_spec.m, db - 1);
            if (block_spec.c > 0) block_spec.c = std::max(1, std::min(block_spec.c, block_spec.m - 1));
        } else {
            block_spec.m = std::min(block_spec.m, db);
        }
        model.blocks.push_back(train_model(block_ds, block_spec, tc,
                                           derive_seed(seed, static_cast<std::uint64_t>(b)),
                                           threads));
    }
    return model;
}

namespace {

nlohmann::json train_config_json(const TrainConfig& tc) {
    return {{"l2", tc.l2},
            {"epochs", tc.epochs},
            {"learning_rate", tc.learning_rate},
            {"seed", tc.seed}};
}

void save_single(const TrainedModel& model, int p, const fs::path& dir) {
    fs::create_directories(dir);
    save_gt_matrix(model.a, (dir / "A.mtx").string(), (dir / "A.meta.json").string());
    save_weights(model.ens, (dir / "weights.tsv").string());
    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["mode"] = "single";
    meta["kind"] = gt_kind_name(model.a.kind);
    meta["m"] = model.a.m;
    meta["d"] = model.a.d;
    meta["p"] = p;
    meta["c"] = model.chosen_c;
    meta["r"] = model.a.r;
    meta["k"] = model.spec.k;
    meta["m1"] = model.a.saffron_meta.m1;
    meta["seed"] = model.seed;
    meta["phi"] = model.phi;
    meta["train"] = train_config_json(model.ens.config);
    std::ofstream out(dir / "meta.json");
    if (!out) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
    out << meta.dump(2) << "\n";

    nlohmann::json timings;
    timings["construct_seconds"] = model.construct_seconds;
    timings["train_seconds"] = model.train_seconds;
    timings["total_seconds"] = model.construct_seconds + model.train_seconds;
    std::ofstream tout(dir / "timings.json");
    tout << timings.dump(2) << "\n";
}

}  // namespace

void save_model(const TrainedModel& model, int p, const std::string& dir) {
    save_single(model, p, fs::path(dir));
}

void save_partitioned_model(const PartitionedModel& model, int p, const std::string& dir) {
    fs::path root(dir);
    fs::create_directories(root);
    save_partition(model.partition, (root / "partition.txt").string());
    if (!model.permutation.empty()) {
        save_permutation(model.permutation, (root / "permutation.txt").string());
    }
    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["mode"] = "partitioned";
    meta["d"] = model.d;
    meta["p"] = p;
    meta["blocks"] = model.blocks.size();
    std::ofstream out(root / "meta.json");
    if (!out) throw std::runtime_error("cannot open " + (root / "meta.json").string());
    out << meta.dump(2) << "\n";
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        char name[32];
        std::snprintf(name, sizeof(name), "block_%03zu", b);
        save_single(model.blocks[b], p, root / name);
    }
}

Model load_model(const std::string& dir) {
    fs::path root(dir);
    std::ifstream min(root / "meta.json");
    if (!min) throw std::runtime_error("cannot open " + (root / "meta.json").string());
    nlohmann::json meta = nlohmann::json::parse(min);
    Model model;
    model.d = meta.at("d").get<int>();
    model.p = meta.at("p").get<int>();
    model.seed = meta.value("seed", std::uint64_t{0});
    std::string mode = meta.at("mode").get<std::string>();
    if (mode == "single") {
        model.partitioned = false;
        model.a = load_gt_matrix((root / "A.mtx").string(), (root / "A.meta.json").string());
        model.ens = load_weights((root / "weights.tsv").string(), model.p);
        if (model.ens.m != model.a.m) {
            throw std::runtime_error(dir + ": weight rows disagree with group count");
        }
        return model;
    }
    if (mode != "partitioned") throw std::runtime_error(dir + ": unknown model mode " + mode);
    model.partitioned = true;
    model.partition = load_partition((root / "partition.txt").string());
    std::size_t blocks = meta.at("blocks").get<std::size_t>();
    if (blocks != model.partition.blocks.size()) {
        throw std::runtime_error(dir + ": block count disagrees with partition file");
    }
    for (std::size_t b = 0; b < blocks; ++b) {
        char name[32];
        std::snprintf(name, sizeof(name), "block_%03zu", b);
        fs::path bdir = root / name;
        model.block_as.push_back(
            load_gt_matrix((bdir / "A.mtx").string(), (bdir / "A.meta.json").string()));
        model.block_ens.push_back(load_weights((bdir / "weights.tsv").string(), model.p));
    }
    return model;
}

namespace {

struct RowMetrics {
    double p[3];
    double pi[3];
    double hamming;
};

RowMetrics metrics_for(const DecodeResult& res, std::span<const int> y, int d) {
    RowMetrics out{};
    int slots = std::min(5, d);
    std::vector<int> ranked = ordered_predictions(res, slots);
    const int ks[3] = {1, 3, 5};
    int hits5 = 0;
    for (int j : ranked) {
        if (std::binary_search(y.begin(), y.end(), j)) ++hits5;
    }
    for (int t = 0; t < 3; ++t) {
        int k = ks[t];
        int kk = std::min(k, slots);
        int hits = 0;
        for (int s = 0; s < kk; ++s) {
            if (std::binary_search(y.begin(), y.end(), ranked[s])) ++hits;
        }
        out.p[t] = static_cast<double>(hits) / static_cast<double>(k);
        out.pi[t] = static_cast<double>(std::min(k, hits5)) / static_cast<double>(k);
    }
    out.hamming = hamming_loss(res.support, y);
    return out;
}

EvalReport reduce_rows(const std::vector<RowMetrics>& rows) {
    EvalReport report;
    report.n_test = static_cast<std::int64_t>(rows.size());
    for (const auto& row : rows) {
        for (int t = 0; t < 3; ++t) {
            report.p_at[t] += row.p[t];
            report.pi_at[t] += row.pi[t];
        }
        report.hamming += row.hamming;
    }
    if (!rows.empty()) {
        for (int t = 0; t < 3; ++t) {
            report.p_at[t] /= static_cast<double>(rows.size());
            report.pi_at[t] /= static_cast<double>(rows.size());
        }
        report.hamming /= static_cast<double>(rows.size());
    }
    return report;
}

}  // namespace

EvalReport evaluate(const GroupTestingMatrix& a, const ClassifierEnsemble& ens,
                    const Dataset& test, const EvalOptions& opts, EvalTimings* timings) {
    if (a.d != test.d()) throw std::invalid_argument("evaluate: label count mismatch");
    int k = std::min(5, a.d);
    auto t0 = std::chrono::steady_clock::now();
    std::vector<RowMetrics> rows(test.n());
    parallel_for(0, test.n(), opts.threads, [&](std::int64_t i) {
        ReducedLabel z = predict_reduced(ens, test.feature_indices(i), test.feature_values(i));
        DecodeResult res = decode_with(a, z, opts.method, k);
        rows[i] = metrics_for(res, test.labels(i), a.d);
    });
    double total = seconds_since(t0);
    if (timings) {
        timings->total_seconds = total;
        timings->per_instance_seconds = test.n() > 0 ? total / static_cast<double>(test.n()) : 0.0;
    }
    return reduce_rows(rows);
}

DecodeResult predict_combined(const Model& model, std::span<const int> idx,
                              std::span<const double> val, DecodeMethod method, int k) {
    std::vector<BlockPrediction> preds;
    preds.reserve(model.partition.blocks.size());
    for (std::size_t b = 0; b < model.partition.blocks.size(); ++b) {
        const GroupTestingMatrix& a = model.block_as[b];
        ReducedLabel z = predict_reduced(model.block_ens[b], idx, val);
        BlockPrediction bp;
        bp.labels = model.partition.blocks[b];
        bp.result = decode_with(a, z, method, std::min(k, a.d));
        preds.push_back(std::move(bp));
    }
    return combine_predictions(preds, model.d, k);
}

EvalReport evaluate_model(const Model& model, const Dataset& test, const EvalOptions& opts,
                          EvalTimings* timings) {
    if (!model.partitioned) return evaluate(model.a, model.ens, test, opts, timings);
    if (model.d != test.d()) throw std::invalid_argument("evaluate: label count mismatch");
    int k = std::min(5, model.d);
    auto t0 = std::chrono::steady_clock::now();
    std::vector<RowMetrics> rows(test.n());
    parallel_for(0, test.n(), opts.threads, [&](std::int64_t i) {
        DecodeResult res = predict_combined(model, test.feature_indices(i),
                                            test.feature_values(i), opts.method, k);
        rows[i] = metrics_for(res, test.labels(i), model.d);
    });
    double total = seconds_since(t0);
    if (timings) {
        timings->total_seconds = total;
        timings->per_instance_seconds = test.n() > 0 ? total / static_cast<double>(test.n()) : 0.0;
    }
    return reduce_rows(rows);
}

}  // namespace mlgt
