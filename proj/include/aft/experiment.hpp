// Experiment orchestration: text configs, dataset recipes, and the
// generate/train/eval commands behind the CLI.
#pragma once

#include <cstdint>
#include <string>

#include "aft/dataset.hpp"
#include "aft/model.hpp"
#include "aft/train.hpp"

namespace aft {

// One experiment = one pilot layout + one model + one set of dataset files,
// rooted at out_dir.  Parsed from a key=value text file; every random byte
// downstream derives from `seed`.
struct ExperimentConfig {
    std::string preset = "desk";  // tiny | desk | paper
    ModelVariant variant = ModelVariant::kAdaFortiTran;
    int n_layers = 1;  // size aliases: s=1, m=3, l=6, xl=12
    int n_heads = 4;
    int d_enc = 32;
    GridConfig grid{};
    int64_t pilot_spacing = 3;
    uint64_t seed = 1;
    std::string out_dir = "runs/desk";

    // Dataset sizes (filled by the preset, overridable).
    int64_t n_train = 2000;
    int64_t n_val = 500;
    int64_t n_test = 200;  // records per sweep point

    TrainConfig train{};

    // Parses a key=value config file ('#' comments, blank lines ignored).
    // A `preset` key applies immediately, so later keys override its values.
    static ExperimentConfig from_file(const std::string& path);

    // Applies size/count defaults for "tiny", "desk", or "paper".
    void apply_preset(const std::string& name);

    void validate() const;

    // Model built for this experiment's grid and pilot layout.
    ModelConfig model_config() const;

    // Stable label used in checkpoint/CSV names, e.g. "adafortitran-s".
    std::string model_label() const;
};

// Dataset recipes.  Training/validation draw each record's SNR, Doppler and
// delay spread independently from fixed grids; test sets hold two statistics
// fixed and sweep the third (or fix all three for the pilot experiment).
DatasetRecipe train_recipe(const ExperimentConfig& cfg);
DatasetRecipe val_recipe(const ExperimentConfig& cfg);
// sweep: "snr" | "doppler" | "delay_spread" | "pilot"
DatasetRecipe test_recipe(const ExperimentConfig& cfg, const std::string& sweep);

// Canonical artifact paths inside cfg.out_dir.
std::string dataset_path(const ExperimentConfig& cfg, const std::string& name);
std::string checkpoint_path(const ExperimentConfig& cfg);
std::string history_path(const ExperimentConfig& cfg);
std::string lmmse_path(const ExperimentConfig& cfg);
std::string eval_csv_path(const ExperimentConfig& cfg, const std::string& sweep);

// Commands.  Each returns a process exit code (0 = success) and reports
// progress on stdout; artifact bytes depend only on (config, seed).
int cmd_generate(const ExperimentConfig& cfg, int workers);
int cmd_train(const ExperimentConfig& cfg, int workers);
int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
             const std::string& sweep, int workers);

}  // namespace aft
