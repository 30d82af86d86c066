#include "mlgt/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlgt/classifier.hpp"
#include "mlgt/dataset.hpp"
#include "mlgt/gt.hpp"
#include "mlgt/metrics.hpp"
#include "mlgt/partition.hpp"
#include "mlgt/pipeline.hpp"
#include "mlgt/prng.hpp"
#include "mlgt/util.hpp"

namespace fs = std::filesystem;

namespace mlgt {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string data;
    std::string test;
    std::string out;
    std::string model;
    std::string kind = "nmf";
    std::string c_str = "0";
    std::string partition;
    std::string decoder = "topk";
    std::string axis;
    std::string values;
    int m = 0;
    int d = 0;
    int k = 5;
    int m1 = 0;
    int r = 0;
    int trials = 1;
    int max_block = 40000;
    int epochs = 20;
    double l2 = 1e-4;
    double lr = 0.5;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    int threads = 0;
    bool labels_one_indexed = false;
    bool features_zero_indexed = false;
};

IndexingConfig indexing(const Options& opt) {
    IndexingConfig cfg;
    cfg.labels_one_indexed = opt.labels_one_indexed;
    cfg.features_one_indexed = !opt.features_zero_indexed;
    return cfg;
}

int resolve_threads(const Options& opt) {
    return opt.threads > 0 ? opt.threads : default_threads();
}

GtKind parse_kind(const std::string& name) {
    if (name == "sp") return GtKind::SP;
    if (name == "cw") return GtKind::CW;
    if (name == "saffron") return GtKind::SAFFRON;
    if (name == "nmf") return GtKind::NMF;
    if (name == "identity") return GtKind::IDENTITY;
    throw UsageError("unknown --kind '" + name + "' (expected sp, cw, saffron, nmf or identity)");
}

int parse_c(const std::string& c_str) {
    if (c_str == "auto") return 0;
    int c = 0;
    auto [ptr, ec] = std::from_chars(c_str.data(), c_str.data() + c_str.size(), c);
    if (ec != std::errc() || ptr != c_str.data() + c_str.size() || c < 0) {
        throw UsageError("--c expects a positive integer or 'auto'");
    }
    return c;
}

DecodeMethod parse_decoder(const std::string& name) {
    if (name == "linear") return DecodeMethod::LINEAR;
    if (name == "topk") return DecodeMethod::TOPK;
    if (name == "peeling") return DecodeMethod::PEELING;
    throw UsageError("unknown --decoder '" + name + "' (expected linear, topk or peeling)");
}

BuildSpec make_spec(const Options& opt) {
    BuildSpec spec;
    spec.kind = parse_kind(opt.kind);
    spec.m = opt.m;
    spec.c = parse_c(opt.c_str);
    spec.k = opt.k;
    spec.m1 = opt.m1;
    spec.r = opt.r;
    bool needs_m = spec.kind == GtKind::SP || spec.kind == GtKind::CW || spec.kind == GtKind::NMF;
    if (needs_m && spec.m < 1) throw UsageError("--m is required for this construction");
    if (spec.kind == GtKind::SAFFRON && spec.m1 < 1) {
        throw UsageError("--m1 is required for the saffron construction");
    }
    if (spec.kind == GtKind::SAFFRON && spec.c == 0) spec.c = 6;
    if (spec.kind == GtKind::SP && spec.k < 1) throw UsageError("--k must be positive");
    return spec;
}

TrainConfig make_train_config(const Options& opt) {
    TrainConfig tc;
    tc.l2 = opt.l2;
    tc.epochs = opt.epochs;
    tc.learning_rate = opt.lr;
    return tc;
}

Dataset load_training_data(const Options& opt, bool required) {
    if (opt.data.empty()) {
        if (required) throw UsageError("--data is required");
        return {};
    }
    Dataset ds = load_repo_file(opt.data, indexing(opt));
    if (opt.fraction < 1.0) {
        ds = subsample_split(ds, opt.fraction, derive_seed(opt.seed, 0xFAC));
    }
    return ds;
}

int cmd_construct(const Options& opt) {
    BuildSpec spec = make_spec(opt);
    Dataset ds;
    const Dataset* ds_ptr = nullptr;
    int d = opt.d;
    if (!opt.data.empty()) {
        ds = load_repo_file(opt.data, indexing(opt));
        ds_ptr = &ds;
        d = ds.d();
    } else if (spec.kind == GtKind::NMF || spec.c == 0) {
        throw UsageError("this construction needs --data");
    }
    if (d < 1) throw UsageError("--d (or --data) is required");

    int chosen_c = 0;
    GroupTestingMatrix a = construct_matrix(spec, ds_ptr, d, opt.seed,
                                            resolve_threads(opt), &chosen_c);
    fs::path out_dir = opt.out.empty() ? fs::path(".") : fs::path(opt.out);
    fs::create_directories(out_dir);
    save_gt_matrix(a, (out_dir / "A.mtx").string(), (out_dir / "A.meta.json").string());
    std::cout << "kind=" << gt_kind_name(a.kind) << " m=" << a.m << " d=" << a.d
              << " nnz=" << a.nnz() << " c=" << chosen_c << "\n";
    if (ds_ptr) {
        std::cout << "phi=" << format_double(correlation_metric(a, *ds_ptr)) << "\n";
    }
    std::cout << "wrote " << (out_dir / "A.mtx").string() << "\n";
    return 0;
}

int cmd_train(const Options& opt) {
    if (opt.out.empty()) throw UsageError("--out model directory is required");
    Dataset ds = load_training_data(opt, true);
    BuildSpec spec = make_spec(opt);
    TrainConfig tc = make_train_config(opt);
    int threads = resolve_threads(opt);

    bool created = !fs::exists(opt.out);
    try {
        if (opt.partition.empty()) {
            TrainedModel model = train_model(ds, spec, tc, opt.seed, threads);
            save_model(model, ds.p(), opt.out);
            std::cout << "model: kind=" << gt_kind_name(model.a.kind) << " m=" << model.a.m
                      << " d=" << model.a.d << " c=" << model.chosen_c << "\n";
            std::cout << "phi=" << format_double(model.phi) << "\n";
            std::cout << "construct_seconds=" << format_double(model.construct_seconds)
                      << " train_seconds=" << format_double(model.train_seconds) << "\n";
        } else {
            PartitionFile part;
            std::vector<int> permutation;
            if (opt.partition == "auto") {
                CooccurrenceMatrix cooc = label_cooccurrence(ds);
                LabelGraph g = build_label_graph(cooc);
                HierPartition hier = hierarchical_partition(g, opt.max_block);
                part.blocks = hier.blocks;
                part.top_separator = hier.top_separator;
                permutation = hier.permutation;
            } else {
                part = load_partition(opt.partition);
            }
            PartitionedModel model = train_partitioned(ds, part, spec, tc, opt.seed, threads);
            model.permutation = std::move(permutation);
            save_partitioned_model(model, ds.p(), opt.out);
            double construct = 0.0, train = 0.0;
            for (const auto& block : model.blocks) {
                construct += block.construct_seconds;
                train += block.train_seconds;
            }
            std::cout << "blocks=" << model.blocks.size() << " d=" << ds.d() << "\n";
            std::cout << "construct_seconds=" << format_double(construct)
                      << " train_seconds=" << format_double(train) << "\n";
        }
    } catch (...) {
        std::error_code ec;
        if (created) fs::remove_all(opt.out, ec);
        throw;
    }
    return 0;
}

int cmd_predict(const Options& opt) {
    if (opt.model.empty()) throw UsageError("--model directory is required");
    if (opt.test.empty()) throw UsageError("--test dataset is required");
    Model model = load_model(opt.model);
    Dataset test = load_repo_file(opt.test, indexing(opt));
    int model_d = model.partitioned ? model.d : model.a.d;
    if (test.d() != model_d) {
        throw std::runtime_error("test label count " + std::to_string(test.d()) +
                                 " does not match model " + std::to_string(model_d));
    }
    if (test.p() != model.p) {
        throw std::runtime_error("test feature count " + std::to_string(test.p()) +
                                 " does not match model " + std::to_string(model.p));
    }
    EvalOptions eval_opts;
    eval_opts.method = parse_decoder(opt.decoder);
    eval_opts.threads = resolve_threads(opt);
    EvalTimings timings;
    EvalReport report = evaluate_model(model, test, eval_opts, &timings);
    std::cout << report.to_csv();
    std::cout << "# predict_total_seconds=" << format_double(timings.total_seconds)
              << " per_instance_seconds=" << format_double(timings.per_instance_seconds)
              << "\n";
    if (!opt.out.empty()) {
        save_report(report, opt.out);
        std::cout << "wrote " << opt.out << "\n";
    }
    return 0;
}

std::vector<double> parse_values(const std::string& values) {
    std::vector<double> out;
    std::stringstream ss(values);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("--values: malformed number '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError("--values must list at least one number");
    return out;
}

int cmd_sweep(const Options& opt) {
    if (opt.axis != "m" && opt.axis != "c" && opt.axis != "fraction") {
        throw UsageError("--axis must be m, c or fraction");
    }
    if (opt.test.empty()) throw UsageError("--test dataset is required");
    if (opt.out.empty()) throw UsageError("--out CSV path is required");
    if (opt.trials < 1) throw UsageError("--trials must be positive");
    std::vector<double> values = parse_values(opt.values);

    Options base = opt;
    base.fraction = 1.0;  // the fraction axis subsamples per trial below
    Dataset full = load_training_data(base, true);
    if (opt.axis != "fraction" && opt.fraction < 1.0) {
        full = subsample_split(full, opt.fraction, derive_seed(opt.seed, 0xFAC));
    }
    Dataset test = load_repo_file(opt.test, indexing(opt));
    TrainConfig tc = make_train_config(opt);
    int threads = resolve_threads(opt);

    std::string csv = "axis_value,trial,pi_at_1,pi_at_3,pi_at_5,train_time,test_time\n";
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        for (int trial = 0; trial < opt.trials; ++trial) {
            std::uint64_t seed =
                derive_seed(opt.seed, vi * 1000003ULL + static_cast<std::uint64_t>(trial));
            Options run = opt;
            Dataset ds = full;
            if (opt.axis == "m") {
                run.m = static_cast<int>(values[vi]);
            } else if (opt.axis == "c") {
                run.c_str = std::to_string(static_cast<int>(values[vi]));
            } else {
                ds = subsample_split(full, values[vi], derive_seed(seed, 0xFAC));
            }
            BuildSpec spec = make_spec(run);
            TrainedModel model = train_model(ds, spec, tc, seed, threads);
            EvalOptions eval_opts;
            eval_opts.method = parse_decoder(opt.decoder);
            eval_opts.threads = threads;
            EvalTimings timings;
            EvalReport report = evaluate(model.a, model.ens, test, eval_opts, &timings);
            csv += format_double(values[vi]) + "," + std::to_string(trial) + "," +
                   format_double(report.pi_at[0]) + "," + format_double(report.pi_at[1]) + "," +
                   format_double(report.pi_at[2]) + "," +
                   format_double(model.construct_seconds + model.train_seconds) + "," +
                   format_double(timings.total_seconds) + "\n";
        }
    }
    std::ofstream out(opt.out);
    if (!out) throw std::runtime_error("cannot open " + opt.out);
    out << csv;
    if (!out) throw std::runtime_error("write failed: " + opt.out);
    std::cout << csv;
    return 0;
}

int cmd_partition(const Options& opt) {
    if (opt.out.empty()) throw UsageError("--out directory is required");
    Options base = opt;
    Dataset ds = load_training_data(base, true);
    CooccurrenceMatrix cooc = label_cooccurrence(ds);
    LabelGraph g = build_label_graph(cooc);
    HierPartition part = hierarchical_partition(g, opt.max_block);
    fs::path out_dir(opt.out);
    fs::create_directories(out_dir);
    save_partition(part, (out_dir / "partition.txt").string());
    save_permutation(part.permutation, (out_dir / "permutation.txt").string());
    write_spy_csv(cooc, part.permutation, (out_dir / "spy.csv").string());
    std::cout << "blocks=" << part.blocks.size() << " top_separator=" << part.top_separator.size()
              << "\n";
    std::cout << "block_sizes=";
    for (std::size_t b = 0; b < part.block_sizes.size(); ++b) {
        std::cout << (b ? "," : "") << part.block_sizes[b];
    }
    std::cout << "\n";
    std::cout << "wrote " << (out_dir / "partition.txt").string() << "\n";
    return 0;
}

void add_data_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--data", opt.data, "training dataset file");
    cmd->add_flag("--labels-one-indexed", opt.labels_one_indexed,
                  "labels in the file are 1-based");
    cmd->add_flag("--features-zero-indexed", opt.features_zero_indexed,
                  "features in the file are 0-based");
}

void add_build_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--kind", opt.kind, "construction: sp, cw, saffron, nmf, identity");
    cmd->add_option("--m", opt.m, "group count");
    cmd->add_option("--c", opt.c_str, "column weight (integer or 'auto')");
    cmd->add_option("--k", opt.k, "sparsity parameter");
    cmd->add_option("--m1", opt.m1, "bin count (saffron)");
    cmd->add_option("--r", opt.r, "row weight (cw; derived from --m when omitted)");
    cmd->add_option("--seed", opt.seed, "base random seed");
    cmd->add_option("--threads", opt.threads, "worker threads (default: all cores)");
}

void add_train_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--l2", opt.l2, "L2 regularization strength");
    cmd->add_option("--epochs", opt.epochs, "SGD epochs");
    cmd->add_option("--lr", opt.lr, "initial learning rate");
    cmd->add_option("--fraction", opt.fraction, "train on this fraction of the data");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    Options opt;
    CLI::App app{"group-testing multilabel classification"};
    app.require_subcommand(1);

    CLI::App* construct = app.add_subcommand("construct", "build a pooling matrix");
    add_data_flags(construct, opt);
    add_build_flags(construct, opt);
    construct->add_option("--d", opt.d, "label count (when no --data)");
    construct->add_option("--out", opt.out, "output directory");

    CLI::App* train = app.add_subcommand("train", "train a model");
    add_data_flags(train, opt);
    add_build_flags(train, opt);
    add_train_flags(train, opt);
    train->add_option("--partition", opt.partition,
                      "'auto' or a partition file: train one model per label block");
    train->add_option("--max-block", opt.max_block, "partition block size limit");
    train->add_option("--out", opt.out, "model directory");

    CLI::App* predict = app.add_subcommand("predict", "evaluate a model on a test set");
    predict->alias("eval");
    predict->add_option("--model", opt.model, "model directory");
    predict->add_option("--test", opt.test, "test dataset file");
    predict->add_option("--decoder", opt.decoder, "linear, topk or peeling");
    predict->add_option("--out", opt.out, "report CSV path");
    predict->add_option("--threads", opt.threads, "worker threads");
    predict->add_flag("--labels-one-indexed", opt.labels_one_indexed,
                      "labels in the file are 1-based");
    predict->add_flag("--features-zero-indexed", opt.features_zero_indexed,
                      "features in the file are 0-based");

    CLI::App* sweep = app.add_subcommand("sweep", "metric curves along m, c or fraction");
    add_data_flags(sweep, opt);
    add_build_flags(sweep, opt);
    add_train_flags(sweep, opt);
    sweep->add_option("--test", opt.test, "test dataset file");
    sweep->add_option("--axis", opt.axis, "m, c or fraction");
    sweep->add_option("--values", opt.values, "comma-separated axis values");
    sweep->add_option("--trials", opt.trials, "trials per value");
    sweep->add_option("--decoder", opt.decoder, "linear, topk or peeling");
    sweep->add_option("--out", opt.out, "output CSV path");

    CLI::App* partition = app.add_subcommand("partition", "label-graph partition and plot data");
    add_data_flags(partition, opt);
    partition->add_option("--max-block", opt.max_block, "block size limit");
    partition->add_option("--seed", opt.seed, "base random seed");
    partition->add_option("--out", opt.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (construct->parsed()) return cmd_construct(opt);
        if (train->parsed()) return cmd_train(opt);
        if (predict->parsed()) return cmd_predict(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (partition->parsed()) return cmd_partition(opt);
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mlgt
