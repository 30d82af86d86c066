#include "mlgt/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mlgt/prng.hpp"
#include "mlgt/util.hpp"

namespace mlgt {

namespace {

constexpr double kConstantBias = 25.0;

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

LinearModel train_binary(const Dataset& ds, const std::vector<std::uint8_t>& targets,
                         const TrainConfig& cfg) {
    const std::int64_t n = ds.n();
    if (targets.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("train_binary: target length mismatch");
    }
    if (cfg.epochs < 1 || cfg.l2 < 0.0 || cfg.learning_rate <= 0.0) {
        throw std::invalid_argument("train_binary: bad training configuration");
    }
    LinearModel model;
    model.weights.assign(ds.p(), 0.0);

    std::int64_t positives = 0;
    for (auto t : targets) positives += t ? 1 : 0;
    if (positives == 0 || positives == n) {
        model.bias = positives == 0 ? -kConstantBias : kConstantBias;
        model.final_loss = 0.0;
        return model;
    }

    const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
    const double w_neg = 1.0;
    const double eta0 = cfg.learning_rate;
    const double l2 = cfg.l2;

    // w = scale * shadow; L2 decay touches only `scale`, gradient steps touch
    // only the instance's nonzero coordinates.
    std::vector<double>& shadow = model.weights;
    double scale = 1.0;
    double bias = 0.0;

    std::vector<std::int64_t> order(n);
    for (std::int64_t i = 0; i < n; ++i) order[i] = i;
    SplitMix64 rng(cfg.seed);

    std::int64_t t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::int64_t s = 0; s < n; ++s) {
            std::int64_t row = order[s];
            auto idx = ds.feature_indices(row);
            auto val = ds.feature_values(row);
            double margin = bias;
            for (std::size_t f = 0; f < idx.size(); ++f) {
                margin += scale * shadow[idx[f]] * val[f];
            }
            double y = targets[row] ? 1.0 : 0.0;
            double cw = targets[row] ? w_pos : w_neg;
            double g = cw * (sigmoid(margin) - y);
            double eta = eta0 / (1.0 + eta0 * l2 * static_cast<double>(t));
            ++t;
            if (l2 > 0.0) {
                scale *= 1.0 - eta * l2;
                if (scale < 1e-9) {
                    for (auto& w : shadow) w *= scale;
                    scale = 1.0;
                }
            }
            if (g != 0.0) {
                double step = eta * g / scale;
                for (std::size_t f = 0; f < idx.size(); ++f) {
                    shadow[idx[f]] -= step * val[f];
                }
                bias -= eta * g;
            }
        }
        ++model.epochs_run;
    }
    for (auto& w : shadow) w *= scale;
    model.bias = bias;

    double loss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        auto idx = ds.feature_indices(i);
        auto val = ds.feature_values(i);
        double margin = bias;
        for (std::size_t f = 0; f < idx.size(); ++f) margin += shadow[idx[f]] * val[f];
        double cw = targets[i] ? w_pos : w_neg;
        // log(1 + exp(-z*margin)) in a form stable for large |margin|
        double z = targets[i] ? margin : -margin;
        loss += cw * (z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)));
    }
    model.final_loss = loss / static_cast<double>(n);
    if (!std::isfinite(model.final_loss) || !std::isfinite(bias)) {
        throw std::runtime_error("train_binary: loss diverged (reduce the learning rate)");
    }
    return model;
}

ClassifierEnsemble train_ensemble(const Dataset& ds, const GroupTestingMatrix& a,
                                  const TrainConfig& cfg, int threads) {
    if (a.d != ds.d()) throw std::invalid_argument("train_ensemble: label count mismatch");
    const std::int64_t n = ds.n();
    std::vector<std::vector<std::uint8_t>> targets(
        a.m, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));
    for (std::int64_t i = 0; i < n; ++i) {
        ReducedLabel z = boolean_reduce(a, ds.labels(i));
        for (int j = 0; j < a.m; ++j) {
            if (z.bits[j]) targets[j][static_cast<std::size_t>(i)] = 1;
        }
    }

    ClassifierEnsemble ens;
    ens.m = a.m;
    ens.p = ds.p();
    ens.config = cfg;
    ens.models.resize(a.m);
    std::vector<std::string> failures(a.m);
    parallel_for(0, a.m, threads, [&](std::int64_t j) {
        TrainConfig local = cfg;
        local.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(j));
        try {
            ens.models[j] = train_binary(ds, targets[j], local);
        } catch (const std::exception& e) {
            failures[j] = e.what();
        }
    });
    for (int j = 0; j < a.m; ++j) {
        if (!failures[j].empty()) {
            throw std::runtime_error("group " + std::to_string(j) + ": " + failures[j]);
        }
    }
    return ens;
}

double model_margin(const LinearModel& model, std::span<const int> idx,
                    std::span<const double> val) {
    double margin = model.bias;
    for (std::size_t f = 0; f < idx.size(); ++f) margin += model.weights[idx[f]] * val[f];
    return margin;
}

ReducedLabel predict_reduced(const ClassifierEnsemble& ens, std::span<const int> idx,
                             std::span<const double> val) {
    std::vector<double> margins(ens.models.size());
    for (std::size_t j = 0; j < ens.models.size(); ++j) {
        margins[j] = model_margin(ens.models[j], idx, val);
    }
    return reduced_from_margins(margins);
}

void save_weights(const ClassifierEnsemble& ens, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    char buf[64];
    for (std::size_t j = 0; j < ens.models.size(); ++j) {
        const LinearModel& model = ens.models[j];
        std::snprintf(buf, sizeof(buf), "%.17g", model.bias);
        out << j << '\t' << buf;
        for (std::size_t f = 0; f < model.weights.size(); ++f) {
            if (model.weights[f] == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", model.weights[f]);
            out << '\t' << f << ':' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ClassifierEnsemble load_weights(const std::string& path, int p) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ClassifierEnsemble ens;
    ens.p = p;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::size_t j = 0;
        double bias = 0.0;
        if (!(ss >> j >> bias)) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed model line");
        }
        if (j != ens.models.size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": model index out of order");
        }
        LinearModel model;
        model.weights.assign(p, 0.0);
        model.bias = bias;
        std::string tok;
        while (ss >> tok) {
            std::size_t colon = tok.find(':');
            if (colon == std::string::npos) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed weight " + tok);
            }
            int f = std::stoi(tok.substr(0, colon));
            double w = std::stod(tok.substr(colon + 1));
            if (f < 0 || f >= p) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": feature index out of range");
            }
            model.weights[f] = w;
        }
        ens.models.push_back(std::move(model));
    }
    ens.m = static_cast<int>(ens.models.size());
    return ens;
}

}  // namespace mlgt
