// aftlab: OFDM channel-estimation laboratory.
// Subcommands: generate (dataset files), train (checkpoint + history CSV),
// eval (sweep CSV with baseline rows).
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "aft/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string preset;
    std::string out_dir;
    uint64_t seed = 0;
    int workers = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App& cmd, CommonArgs& args) {
    cmd.add_option("--config", args.config, "Experiment config file (key = value text)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--preset", args.preset,
                   "Apply a size preset after the config file: tiny, desk, or paper")
        ->check(CLI::IsMember({"tiny", "desk", "paper"}));
    cmd.add_option("--out", args.out_dir, "Output directory (overrides the config's out_dir)");
    args.seed_opt =
        cmd.add_option("--seed", args.seed, "Master seed (overrides the config's seed)");
    args.workers_opt = cmd.add_option(
        "--workers", args.workers,
        "Worker threads; 0 = all cores. Affects wall clock only, never output bytes");
}

aft::ExperimentConfig resolve(const CommonArgs& args) {
    aft::ExperimentConfig cfg;
    if (!args.config.empty()) cfg = aft::ExperimentConfig::from_file(args.config);
    if (!args.preset.empty()) cfg.apply_preset(args.preset);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed_opt->count() > 0) cfg.seed = args.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aftlab: OFDM channel-estimation laboratory (simulate, train, evaluate)"};
    app.require_subcommand(1);

    CommonArgs gen_args;
    CLI::App* gen = app.add_subcommand(
        "generate", "Simulate channels and write train/val/test dataset files (.aftd)");
    add_common(*gen, gen_args);

    CommonArgs train_args;
    CLI::App* train = app.add_subcommand(
        "train", "Train the configured model; writes a checkpoint (.aftc) and a history CSV");
    add_common(*train, train_args);

    CommonArgs eval_args;
    std::string checkpoint;
    std::string sweep = "snr";
    CLI::App* eval = app.add_subcommand(
        "eval", "Evaluate a checkpoint plus LS/LMMSE baselines on a test sweep; writes a CSV");
    add_common(*eval, eval_args);
    eval->add_option("--checkpoint", checkpoint,
                     "Checkpoint file (default: <out_dir>/<model label>.aftc)");
    eval->add_option("--sweep", sweep, "Which swept test set to score")
        ->check(CLI::IsMember({"snr", "doppler", "delay_spread", "pilot"}));

    CLI11_PARSE(app, argc, argv)

    try {
        if (gen->parsed()) return aft::cmd_generate(resolve(gen_args), gen_args.workers);
        if (train->parsed()) return aft::cmd_train(resolve(train_args), train_args.workers);
        if (eval->parsed())
            return aft::cmd_eval(resolve(eval_args), checkpoint, sweep, eval_args.workers);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
