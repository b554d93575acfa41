// Experiment orchestration: config parsing, dataset recipes, and the
// generate/train/eval command bodies.
#include "aft/experiment.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "aft/estimators.hpp"
#include "aft/eval.hpp"
#include "aft/rng.hpp"

namespace aft {

namespace {

// Stream tag for per-file dataset seeds ("file").
constexpr uint64_t kStreamFile = 0x66696c65ULL;

// Dataset file indices, fixed so seeds never depend on generation order.
enum FileIndex : uint64_t {
    kFileTrain = 0,
    kFileVal = 1,
    kFileTestSnr = 2,
    kFileTestDoppler = 3,
    kFileTestDelay = 4,
    kFileTestPilot = 5,
};

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

int64_t parse_i64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected unsigned integer, got '" +
                                 value + "'");
    }
}

double parse_f64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected number, got '" + value + "'");
    }
}

int layers_from_size(const std::string& size) {
    if (size == "s") return 1;
    if (size == "m") return 3;
    if (size == "l") return 6;
    if (size == "xl") return 12;
    throw std::runtime_error("unknown model size '" + size + "' (expected s, m, l, or xl)");
}

std::vector<double> seq(double lo, double hi, double step) {
    std::vector<double> out;
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    return out;
}

StatsBlock block(std::vector<double> snr, std::vector<double> doppler, std::vector<double> delay,
                 int64_t count) {
    StatsBlock b;
    b.snr_db = std::move(snr);
    b.doppler_hz = std::move(doppler);
    b.delay_spread_ns = std::move(delay);
    b.count = count;
    return b;
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out = "{";
    char buf[32];
    for (size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%g", xs[i]);
        if (i) out += ", ";
        out += buf;
    }
    out += "}";
    return out;
}

void print_recipe(const std::string& path, const DatasetRecipe& recipe) {
    std::printf("wrote %s (%" PRId64 " records, grid %" PRId64 "x%" PRId64
                ", pilot spacing %" PRId64 ")\n",
                path.c_str(), recipe.total(), recipe.grid.n_subcarriers, recipe.grid.n_symbols,
                recipe.pilot_spacing);
    for (const StatsBlock& b : recipe.blocks) {
        std::printf("  %" PRId64 " x snr_db %s, doppler_hz %s, delay_spread_ns %s\n", b.count,
                    fmt_list(b.snr_db).c_str(), fmt_list(b.doppler_hz).c_str(),
                    fmt_list(b.delay_spread_ns).c_str());
    }
}

void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path)) {
        throw std::runtime_error(std::string(what) + " not found: " + path +
                                 " (run `aftlab generate` first?)");
    }
}

// Loads the frozen second-order statistics for the LMMSE baseline, fitting
// them from the training set on first use. Evaluation always consumes the
// serialized file so reruns see identical bytes whether or not the fit ran.
LmmseStatistics load_or_fit_lmmse(const ExperimentConfig& cfg) {
    const std::string side = lmmse_path(cfg);
    if (!std::filesystem::exists(side)) {
        const std::string train_path = dataset_path(cfg, "train");
        require_file(train_path, "training set (needed to fit LMMSE statistics)");
        std::printf("fitting LMMSE statistics from %s ...\n", train_path.c_str());
        const Dataset train_set = read_dataset(train_path);
        LmmseFitter fitter(train_set.grid, train_set.pilots);
        for (const DataRecord& rec : train_set.records) fitter.add(rec);
        LmmseStatistics stats = fitter.finish();
        stats.save(side);
        std::printf("wrote %s (%" PRId64 " records)\n", side.c_str(), fitter.count());
    }
    return LmmseStatistics::load(side);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected key = value, got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": empty key or value in '" + line + "'");
        }
        try {
            if (key == "preset") {
                cfg.apply_preset(value);
            } else if (key == "variant") {
                cfg.variant = variant_from_string(value);
            } else if (key == "size") {
                cfg.n_layers = layers_from_size(value);
            } else if (key == "layers") {
                cfg.n_layers = static_cast<int>(parse_i64(key, value));
            } else if (key == "heads") {
                cfg.n_heads = static_cast<int>(parse_i64(key, value));
            } else if (key == "d_enc") {
                cfg.d_enc = static_cast<int>(parse_i64(key, value));
            } else if (key == "n_subcarriers") {
                cfg.grid.n_subcarriers = parse_i64(key, value);
            } else if (key == "n_symbols") {
                cfg.grid.n_symbols = parse_i64(key, value);
            } else if (key == "subcarrier_spacing_hz") {
                cfg.grid.subcarrier_spacing_hz = parse_f64(key, value);
            } else if (key == "pilot_spacing") {
                cfg.pilot_spacing = parse_i64(key, value);
            } else if (key == "seed") {
                cfg.seed = parse_u64(key, value);
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else if (key == "n_train") {
                cfg.n_train = parse_i64(key, value);
            } else if (key == "n_val") {
                cfg.n_val = parse_i64(key, value);
            } else if (key == "n_test") {
                cfg.n_test = parse_i64(key, value);
            } else if (key == "batch_size") {
                cfg.train.batch_size = static_cast<int>(parse_i64(key, value));
            } else if (key == "lr") {
                cfg.train.lr = parse_f64(key, value);
            } else if (key == "lr_decay") {
                cfg.train.lr_decay = parse_f64(key, value);
            } else if (key == "max_epochs") {
                cfg.train.max_epochs = static_cast<int>(parse_i64(key, value));
            } else if (key == "patience") {
                cfg.train.patience = static_cast<int>(parse_i64(key, value));
            } else {
                throw std::runtime_error("unknown config key '" + key + "'");
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

void ExperimentConfig::apply_preset(const std::string& name) {
    if (name == "tiny") {
        // Smoke-test scale: minutes, not hours.
        n_train = 200;
        n_val = 50;
        n_test = 50;
        train.batch_size = 32;
        train.max_epochs = 20;
        train.patience = 10;
    } else if (name == "desk") {
        n_train = 2000;
        n_val = 500;
        n_test = 200;
        train.batch_size = 64;
        train.max_epochs = 100;
        train.patience = 20;
    } else if (name == "paper") {
        n_train = 100000;
        n_val = 10000;
        n_test = 2000;
        train.batch_size = 512;
        train.max_epochs = 1000;
        train.patience = 20;
    } else {
        throw std::runtime_error("unknown preset '" + name + "' (expected tiny, desk, or paper)");
    }
    preset = name;
}

void ExperimentConfig::validate() const {
    grid.validate();
    if (pilot_spacing != 3 && pilot_spacing != 4 && pilot_spacing != 5 && pilot_spacing != 6 &&
        pilot_spacing != 8) {
        throw std::runtime_error("pilot_spacing must be one of {3, 4, 5, 6, 8}, got " +
                                 std::to_string(pilot_spacing));
    }
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw std::runtime_error("dataset sizes must be positive");
    }
    if (out_dir.empty()) throw std::runtime_error("out_dir must not be empty");
    train.validate();
    model_config().validate();
}

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig mc;
    mc.variant = variant;
    mc.n_layers = n_layers;
    mc.n_heads = n_heads;
    mc.d_enc = d_enc;
    return with_pilot_layout(mc, grid, pilot_spacing);
}

std::string ExperimentConfig::model_label() const {
    std::string label = to_string(variant);
    if (variant == ModelVariant::kLinear) return label;
    switch (n_layers) {
        case 1: return label + "-s";
        case 3: return label + "-m";
        case 6: return label + "-l";
        case 12: return label + "-xl";
        default: return label + "-l" + std::to_string(n_layers);
    }
}

DatasetRecipe train_recipe(const ExperimentConfig& cfg) {
    DatasetRecipe r;
    r.grid = cfg.grid;
    r.pilot_spacing = cfg.pilot_spacing;
    r.blocks.push_back(
        block(seq(0, 25, 5), seq(50, 1000, 50), seq(25, 300, 25), cfg.n_train));
    return r;
}

DatasetRecipe val_recipe(const ExperimentConfig& cfg) {
    DatasetRecipe r = train_recipe(cfg);
    r.blocks[0].count = cfg.n_val;
    return r;
}

DatasetRecipe test_recipe(const ExperimentConfig& cfg, const std::string& sweep) {
    DatasetRecipe r;
    r.grid = cfg.grid;
    r.pilot_spacing = cfg.pilot_spacing;
    if (sweep == "snr") {
        for (double s : seq(0, 25, 5)) r.blocks.push_back(block({s}, {500}, {200}, cfg.n_test));
    } else if (sweep == "doppler") {
        for (double f : seq(200, 1000, 200)) r.blocks.push_back(block({20}, {f}, {200}, cfg.n_test));
    } else if (sweep == "delay_spread") {
        for (double d : seq(50, 300, 50)) r.blocks.push_back(block({20}, {500}, {d}, cfg.n_test));
    } else if (sweep == "pilot") {
        r.blocks.push_back(block({5}, {500}, {200}, cfg.n_test));
    } else {
        throw std::runtime_error("unknown sweep '" + sweep +
                                 "' (expected snr, doppler, delay_spread, or pilot)");
    }
    return r;
}

std::string dataset_path(const ExperimentConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/" + name + ".aftd";
}

std::string checkpoint_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/" + cfg.model_label() + ".aftc";
}

std::string history_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/" + cfg.model_label() + "_history.csv";
}

std::string lmmse_path(const ExperimentConfig& cfg) { return cfg.out_dir + "/lmmse.aftl"; }

std::string eval_csv_path(const ExperimentConfig& cfg, const std::string& sweep) {
    return cfg.out_dir + "/eval_" + sweep + ".csv";
}

int cmd_generate(const ExperimentConfig& cfg, int workers) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    struct Job {
        const char* name;
        uint64_t index;
        DatasetRecipe recipe;
    };
    const Job jobs[] = {
        {"train", kFileTrain, train_recipe(cfg)},
        {"val", kFileVal, val_recipe(cfg)},
        {"test_snr", kFileTestSnr, test_recipe(cfg, "snr")},
        {"test_doppler", kFileTestDoppler, test_recipe(cfg, "doppler")},
        {"test_delay_spread", kFileTestDelay, test_recipe(cfg, "delay_spread")},
        {"test_pilot", kFileTestPilot, test_recipe(cfg, "pilot")},
    };
    for (const Job& job : jobs) {
        const std::string path = dataset_path(cfg, job.name);
        const uint64_t file_seed = derive_seed(cfg.seed, job.index, kStreamFile);
        build_dataset(job.recipe, path, file_seed, workers);
        print_recipe(path, job.recipe);
    }
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, int workers) {
    cfg.validate();
    const std::string train_file = dataset_path(cfg, "train");
    const std::string val_file = dataset_path(cfg, "val");
    require_file(train_file, "training set");
    require_file(val_file, "validation set");

    const Dataset train_set = read_dataset(train_file);
    const Dataset val_set = read_dataset(val_file);
    std::printf("training %s on %" PRId64 " frames (val %" PRId64 "), batch %d, lr %g\n",
                cfg.model_label().c_str(), train_set.count(), val_set.count(),
                cfg.train.batch_size, cfg.train.lr);

    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const TrainResult result = train(cfg.model_config(), train_set, val_set, tc, workers);

    std::filesystem::create_directories(cfg.out_dir);
    result.best.save(checkpoint_path(cfg));
    write_history_csv(history_path(cfg), result);
    std::printf("wrote %s and %s\n", checkpoint_path(cfg).c_str(), history_path(cfg).c_str());
    std::printf("epochs run: %zu, best epoch: %d, val MSE %.6e -> %.6e\n", result.history.size(),
                result.best_epoch, result.init_val_mse, result.best_val_mse);
    if (result.diverged) {
        std::fprintf(stderr, "training aborted: %s (checkpoint holds the best epoch so far)\n",
                     result.divergence_note.c_str());
        return 1;
    }
    return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint, const std::string& sweep,
             int workers) {
    cfg.validate();
    const std::string sweep_key = (sweep == "pilot") ? "pilot_spacing" : sweep;
    const std::string test_file = dataset_path(cfg, "test_" + sweep);
    require_file(test_file, "test set");
    const std::string ckpt = checkpoint.empty() ? checkpoint_path(cfg) : checkpoint;
    require_file(ckpt, "checkpoint");

    const Dataset test_set = read_dataset(test_file);
    const Model model = Model::load_expected(ckpt, cfg.model_config());
    const LmmseStatistics stats = load_or_fit_lmmse(cfg);

    std::vector<EvalReport> reports;
    reports.push_back(evaluate(interp_ls_scorer(test_set.grid, test_set.pilots), test_set,
                               sweep_key, "interp_ls", workers, test_file));
    reports.push_back(evaluate(lmmse_scorer(stats, test_set.grid), test_set, sweep_key, "lmmse",
                               workers, test_file));
    reports.push_back(
        evaluate(model_scorer(model), test_set, sweep_key, cfg.model_label(), workers, test_file));

    const std::string csv = eval_csv_path(cfg, sweep);
    write_eval_csv(csv, reports);
    std::printf("wrote %s\n", csv.c_str());
    for (const EvalReport& rep : reports) {
        for (const EvalRow& row : rep.rows) {
            std::printf("  %-14s %s=%-6g mse %.6e (%.2f dB, n=%" PRId64 ")\n", row.model.c_str(),
                        sweep_key.c_str(), row.sweep_value, row.mse_linear, row.mse_db, row.n);
        }
    }
    return 0;
}

}  // namespace aft
