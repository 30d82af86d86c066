#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlgt/codec.hpp"
#include "mlgt/dataset.hpp"
#include "mlgt/gt.hpp"

namespace mlgt {

struct LinearModel {
    std::vector<double> weights;  // dense length p; persisted sparsely
    double bias = 0.0;
    int epochs_run = 0;
    double final_loss = 0.0;
};

struct TrainConfig {
    double l2 = 1e-4;
    int epochs = 20;
    double learning_rate = 0.5;  // eta_t = eta0 / (1 + eta0 * l2 * t)
    std::uint64_t seed = 0;
};

struct ClassifierEnsemble {
    std::vector<LinearModel> models;
    int m = 0;
    int p = 0;
    TrainConfig config;
};

// L2 logistic regression by SGD with per-epoch shuffling and inverse-scaling
// learning rate; positives are weighted n/(2*positives) to offset group
// imbalance. All-0 / all-1 targets short-circuit to a constant model.
LinearModel train_binary(const Dataset& ds, const std::vector<std::uint8_t>& targets,
                         const TrainConfig& cfg);

// Reduces every label vector through A, then trains one model per group on
// the group's membership bits. Group j draws seed derive_seed(cfg.seed, j),
// so any thread count gives bit-identical models.
ClassifierEnsemble train_ensemble(const Dataset& ds, const GroupTestingMatrix& a,
                                  const TrainConfig& cfg, int threads = 1);

double model_margin(const LinearModel& model, std::span<const int> idx,
                    std::span<const double> val);

// Margins of all m models on one instance; bits = (margin > 0).
ReducedLabel predict_reduced(const ClassifierEnsemble& ens, std::span<const int> idx,
                             std::span<const double> val);

// One line per model: j<TAB>bias<TAB>idx:val ... (0-based, %.17g).
void save_weights(const ClassifierEnsemble& ens, const std::string& path);
ClassifierEnsemble load_weights(const std::string& path, int p);

}  // namespace mlgt
