// vitalcast command-line tool: simulate synthetic vital-sign datasets,
// train forecasting models with utility-aware losses, and evaluate models
// against event annotations.

#include <CLI11.hpp>

#include "vitalcast/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"clinical-utility metrics, losses, and baselines for vital-sign forecasting"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    std::vector<std::string> model_paths;
    std::string annotations_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "threads for patient-parallel stages")
            ->check(CLI::PositiveNumber);
    };

    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    add_common(sim);

    auto* train = app.add_subcommand("train", "fit or train a model on a series CSV");
    add_common(train);
    train->add_option("data", data_path, "series CSV")->required();
    train->add_option("--model", model_paths, "serialized model to resume from");

    auto* eval = app.add_subcommand("evaluate", "evaluate serialized models on a series CSV");
    add_common(eval);
    eval->add_option("data", data_path, "series CSV")->required();
    eval->add_option("--model", model_paths, "serialized model file (repeatable)")->required();
    eval->add_option("--annotations", annotations_path, "event annotations CSV");

    CLI11_PARSE(app, argc, argv);

    std::optional<std::uint64_t> seed_override;
    if (seed_set) seed_override = seed;

    if (sim->parsed()) {
        vitalcast::cli::CommonArgs args{config_path, out_dir, seed_override, threads};
        return vitalcast::cli::cmd_simulate(args);
    }
    if (train->parsed()) {
        vitalcast::cli::TrainArgs args;
        args.config_path = config_path;
        args.out_dir = out_dir;
        args.seed = seed_override;
        args.threads = threads;
        args.data_path = data_path;
        if (!model_paths.empty()) args.resume_model = model_paths.front();
        return vitalcast::cli::cmd_train(args);
    }
    vitalcast::cli::EvaluateArgs args;
    args.config_path = config_path;
    args.out_dir = out_dir;
    args.seed = seed_override;
    args.threads = threads;
    args.data_path = data_path;
    args.model_paths = model_paths;
    if (!annotations_path.empty()) args.annotations_path = annotations_path;
    return vitalcast::cli::cmd_evaluate(args);
}
