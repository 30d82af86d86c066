#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cctype>
#include <cstdint>
#include <utility>
#include <vector>

#include "mlgt/classifier.hpp"
#include "mlgt/codec.hpp"
#include "mlgt/dataset.hpp"
#include "mlgt/gt.hpp"
#include "mlgt/metrics.hpp"
#include "mlgt/partition.hpp"
#include "mlgt/pipeline.hpp"
#include "mlgt/symnmf.hpp"

namespace py = pybind11;
using namespace mlgt;

namespace {

std::vector<int> to_vec(std::span<const int> s) { return {s.begin(), s.end()}; }

py::dict report_dict(const EvalReport& r) {
    py::dict out;
    py::list ks;
    ks.append(1);
    ks.append(3);
    ks.append(5);
    out["k"] = ks;
    py::list p, pi;
    for (int i = 0; i < 3; ++i) {
        p.append(r.p_at[i]);
        pi.append(r.pi_at[i]);
    }
    out["precision"] = p;
    out["modified_precision"] = pi;
    out["hamming"] = r.hamming;
    out["n_test"] = r.n_test;
    return out;
}

BuildSpec make_spec(const std::string& kind, int m, int c, int k, int m1, int r, int nmf_sweeps,
                    double nmf_tol) {
    std::string upper = kind;
    for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    BuildSpec spec;
    spec.kind = gt_kind_from_name(upper);
    spec.m = m;
    spec.c = c;
    spec.k = k;
    spec.m1 = m1;
    spec.r = r;
    spec.nmf.max_sweeps = nmf_sweeps;
    spec.nmf.tol = nmf_tol;
    return spec;
}

}  // namespace

PYBIND11_MODULE(pymlgt, mod) {
    mod.doc() = "Group-testing multilabel reduction: constructions, codecs, training, metrics";

    py::class_<Dataset>(mod, "Dataset")
        .def(py::init<std::int64_t, int, int>(), py::arg("n"), py::arg("p"), py::arg("d"))
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("p", &Dataset::p)
        .def_property_readonly("d", &Dataset::d)
        .def("add_row",
             [](Dataset& ds, std::vector<int> labels,
                std::vector<std::pair<int, double>> features) {
                 ds.add_row(std::move(labels), std::move(features));
             },
             py::arg("labels"), py::arg("features"))
        .def("labels", [](const Dataset& ds, std::int64_t i) { return to_vec(ds.labels(i)); })
        .def("features",
             [](const Dataset& ds, std::int64_t i) {
                 auto idx = ds.feature_indices(i);
                 auto val = ds.feature_values(i);
                 std::vector<std::pair<int, double>> out;
                 for (std::size_t t = 0; t < idx.size(); ++t) out.emplace_back(idx[t], val[t]);
                 return out;
             })
        .def("mean_labels_per_row", &Dataset::mean_labels_per_row)
        .def("save",
             [](const Dataset& ds, const std::string& path) { save_repo_file(ds, path); })
        .def_static("load",
                    [](const std::string& path, bool labels_one_indexed,
                       bool features_one_indexed) {
                        IndexingConfig cfg;
                        cfg.labels_one_indexed = labels_one_indexed;
                        cfg.features_one_indexed = features_one_indexed;
                        return load_repo_file(path, cfg);
                    },
                    py::arg("path"), py::arg("labels_one_indexed") = false,
                    py::arg("features_one_indexed") = true);

    mod.def("subsample", &subsample_split, py::arg("dataset"), py::arg("fraction"),
            py::arg("seed"));

    py::class_<GroupTestingMatrix>(mod, "GroupMatrix")
        .def_readonly("m", &GroupTestingMatrix::m)
        .def_readonly("d", &GroupTestingMatrix::d)
        .def_readonly("c", &GroupTestingMatrix::c)
        .def_readonly("r", &GroupTestingMatrix::r)
        .def_property_readonly("kind",
                               [](const GroupTestingMatrix& a) {
                                   return std::string(gt_kind_name(a.kind));
                               })
        .def("nnz", &GroupTestingMatrix::nnz)
        .def("row", [](const GroupTestingMatrix& a, int i) { return a.rows.at(i); })
        .def("column", [](const GroupTestingMatrix& a, int j) { return a.cols.at(j); })
        .def("reduce",
             [](const GroupTestingMatrix& a, const std::vector<int>& y) {
                 return boolean_reduce(a, y).bits;
             },
             py::arg("label_support"))
        .def("save", [](const GroupTestingMatrix& a, const std::string& mtx,
                        const std::string& meta) { save_gt_matrix(a, mtx, meta); });

    mod.def("load_group_matrix", &load_gt_matrix, py::arg("mtx_path"), py::arg("meta_path"));
    mod.def("build_sp", &build_sp_gt, py::arg("m"), py::arg("d"), py::arg("k"), py::arg("seed"));
    mod.def("build_cw", &build_cw_gt_padded, py::arg("d"), py::arg("c"), py::arg("r"),
            py::arg("seed"));
    mod.def("build_saffron", &build_saffron, py::arg("d"), py::arg("m1"), py::arg("c"),
            py::arg("seed"));
    mod.def("build_identity", &build_identity, py::arg("d"));
    mod.def("build_nmf",
            [](const Dataset& ds, int m, int c, std::uint64_t seed, int sweeps, double tol) {
                SymNmfConfig cfg;
                cfg.max_sweeps = sweeps;
                cfg.tol = tol;
                return build_nmf_gt(ds, m, c, cfg, seed);
            },
            py::arg("dataset"), py::arg("m"), py::arg("c"), py::arg("seed"),
            py::arg("sweeps") = 100, py::arg("tol") = 1e-4);
    mod.def("correlation_metric", &correlation_metric, py::arg("matrix"), py::arg("dataset"));

    mod.def("symnmf",
            [](int dim, const std::vector<std::tuple<int, int, double>>& entries, int m,
               int sweeps, double tol, std::uint64_t seed) {
                SparseSymMatrix mat;
                mat.dim = dim;
                for (const auto& [i, j, v] : entries) mat.entries.push_back({i, j, v});
                SymNmfConfig cfg;
                cfg.max_sweeps = sweeps;
                cfg.tol = tol;
                cfg.seed = seed;
                NmfBasis basis = symnmf_cd(mat, m, cfg);
                return py::make_tuple(basis.m, basis.d, basis.h, basis.objective_trace);
            },
            py::arg("dim"), py::arg("entries"), py::arg("m"), py::arg("sweeps") = 100,
            py::arg("tol") = 1e-4, py::arg("seed") = 0);

    mod.def("linear_decode",
            [](const GroupTestingMatrix& a, const std::vector<std::uint8_t>& bits) {
                ReducedLabel z;
                z.bits = bits;
                return linear_decode(a, z).support;
            },
            py::arg("matrix"), py::arg("bits"));
    mod.def("topk_decode",
            [](const GroupTestingMatrix& a, const std::vector<std::uint8_t>& bits, int k) {
                ReducedLabel z;
                z.bits = bits;
                return topk_score_decode(a, z, k).support;
            },
            py::arg("matrix"), py::arg("bits"), py::arg("k"));
    mod.def("peel_decode",
            [](const GroupTestingMatrix& a, const std::vector<std::uint8_t>& bits, int k) {
                ReducedLabel z;
                z.bits = bits;
                DecodeResult res = saffron_peel_decode(a, z, k);
                return py::make_tuple(res.support, res.peel_success, res.bin_calls_pass1,
                                      res.bin_calls_peel);
            },
            py::arg("matrix"), py::arg("bits"), py::arg("k"));

    py::class_<TrainedModel>(mod, "TrainedModel")
        .def_property_readonly("m", [](const TrainedModel& t) { return t.a.m; })
        .def_property_readonly("d", [](const TrainedModel& t) { return t.a.d; })
        .def_readonly("chosen_c", &TrainedModel::chosen_c)
        .def_readonly("phi", &TrainedModel::phi)
        .def_property_readonly("matrix", [](const TrainedModel& t) { return t.a; })
        .def("predict_bits",
             [](const TrainedModel& t, const std::vector<std::pair<int, double>>& features) {
                 std::vector<int> idx;
                 std::vector<double> val;
                 for (const auto& [i, v] : features) {
                     idx.push_back(i);
                     val.push_back(v);
                 }
                 return predict_reduced(t.ens, idx, val).bits;
             },
             py::arg("features"))
        .def("predict",
             [](const TrainedModel& t, const std::vector<std::pair<int, double>>& features,
                const std::string& method, int k) {
                 std::vector<int> idx;
                 std::vector<double> val;
                 for (const auto& [i, v] : features) {
                     idx.push_back(i);
                     val.push_back(v);
                 }
                 ReducedLabel z = predict_reduced(t.ens, idx, val);
                 DecodeMethod dm = DecodeMethod::TOPK;
                 if (method == "linear") dm = DecodeMethod::LINEAR;
                 if (method == "peeling") dm = DecodeMethod::PEELING;
                 DecodeResult res = decode_with(t.a, z, dm, k);
                 return ordered_predictions(res, k);
             },
             py::arg("features"), py::arg("method") = "topk", py::arg("k") = 5)
        .def("evaluate",
             [](const TrainedModel& t, const Dataset& test, int threads) {
                 EvalOptions opts;
                 opts.threads = threads;
                 return report_dict(evaluate(t.a, t.ens, test, opts));
             },
             py::arg("test"), py::arg("threads") = 1)
        .def("save", [](const TrainedModel& t, int p, const std::string& dir) {
            save_model(t, p, dir);
        });

    mod.def("train",
            [](const Dataset& ds, const std::string& kind, int m, int c, int k, int m1, int r,
               double l2, int epochs, double learning_rate, std::uint64_t seed, int threads,
               int nmf_sweeps, double nmf_tol) {
                BuildSpec spec = make_spec(kind, m, c, k, m1, r, nmf_sweeps, nmf_tol);
                TrainConfig tc;
                tc.l2 = l2;
                tc.epochs = epochs;
                tc.learning_rate = learning_rate;
                return train_model(ds, spec, tc, seed, threads);
            },
            py::arg("dataset"), py::arg("kind") = "nmf", py::arg("m") = 0, py::arg("c") = 0,
            py::arg("k") = 5, py::arg("m1") = 0, py::arg("r") = 0, py::arg("l2") = 1e-4,
            py::arg("epochs") = 20, py::arg("learning_rate") = 0.5, py::arg("seed") = 0,
            py::arg("threads") = 1, py::arg("nmf_sweeps") = 100, py::arg("nmf_tol") = 1e-4);

    mod.def("label_partition",
            [](const Dataset& ds, int max_block) {
                LabelGraph g = build_label_graph(label_cooccurrence(ds));
                HierPartition part = hierarchical_partition(g, max_block);
                py::dict out;
                out["blocks"] = part.blocks;
                out["permutation"] = part.permutation;
                out["top_separator"] = part.top_separator;
                return out;
            },
            py::arg("dataset"), py::arg("max_block"));
}
