// Training loop: shuffled mini-batches, Adam with per-epoch exponential
// learning-rate decay, validation-based early stopping, best-epoch snapshot.
// Byte-deterministic given (configs, seed).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aft/dataset.hpp"
#include "aft/model.hpp"

namespace aft {

struct TrainConfig {
    int batch_size = 64;
    double lr = 1e-3;
    double lr_decay = 0.995;  // multiplied in after every epoch
    double beta1 = 0.9;
    double beta2 = 0.999;
    int max_epochs = 100;
    int patience = 20;  // epochs without validation improvement before stopping
    uint64_t seed = 1;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_mse = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    Model best;                      // parameters of the best validation epoch
    std::vector<EpochStats> history; // one row per completed epoch
    int best_epoch = 0;              // 0 means initialization was never beaten
    double init_val_mse = 0.0;
    double best_val_mse = 0.0;
    bool diverged = false;
    std::string divergence_note;
};

// Mean over all grid cells of the squared complex error.
double mse_loss(const ChannelFrame& estimate, const ChannelFrame& truth);

// Gradients are accumulated over fixed 8-sample chunks and reduced in chunk
// order, so the result is byte-identical for any worker count (0 = all cores).
TrainResult train(const ModelConfig& model_cfg, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg, int workers = 1);

void write_history_csv(const std::string& path, const TrainResult& result);

}  // namespace aft
