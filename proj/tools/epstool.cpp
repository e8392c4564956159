// Command-line front end: simulate datasets, extract features, evaluate
// classifiers across domains, run the warm-up drift experiment and merge
// reports.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eps/eval.hpp"
#include "eps/scenario.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* cfg = cmd->add_option("--config", args.config_path, "scenario JSON file");
    if (config_required) cfg->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the scenario seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
}

eps::Scenario load(const CommonArgs& args) {
    eps::Scenario s = eps::load_scenario(args.config_path);
    if (args.seed_set) s.seed = args.seed;
    return s;
}

int verbosity() {
    const char* v = std::getenv("EPSTOOL_VERBOSE");
    return v ? std::atoi(v) : 0;
}

void log_paths(const std::string& what, const std::vector<std::filesystem::path>& paths) {
    if (verbosity() <= 0) return;
    for (const auto& p : paths) std::cerr << what << ": " << p.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"envelope power spectrum fingerprinting toolkit"};
    app.require_subcommand(1);
    bool error_json = false;
    app.add_flag("--error-json", error_json, "emit errors as JSON on stderr");

    CommonArgs sim_args, ext_args, eval_args, warm_args, rep_args;

    auto* sim = app.add_subcommand("simulate", "generate IQ recordings for a scenario");
    add_common(sim, sim_args);

    auto* ext = app.add_subcommand("extract", "featurize a simulated dataset");
    add_common(ext, ext_args);
    std::string dataset_dir, representation = "eps";
    ext->add_option("--dataset", dataset_dir, "dataset directory from 'simulate'")
        ->required()
        ->check(CLI::ExistingDirectory);
    ext->add_option("--representation", representation, "eps or raw-iq")
        ->check(CLI::IsMember({"eps", "raw-iq"}));

    auto* eval = app.add_subcommand("evaluate", "train/test classification over feature files");
    add_common(eval, eval_args);
    std::string train_path;
    std::vector<std::string> test_paths;
    eval->add_option("--train", train_path, "training feature file")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--test", test_paths, "test feature files (same file => k-fold CV)")
        ->required()
        ->check(CLI::ExistingFile);

    auto* warm = app.add_subcommand("warmup", "accuracy vs capture time after power-on");
    add_common(warm, warm_args);
    std::vector<double> capture_times{60.0, 240.0, 480.0, 720.0};
    warm->add_option("--times", capture_times, "capture times in seconds, increasing");

    auto* rep = app.add_subcommand("report", "merge evaluation reports into a summary");
    add_common(rep, rep_args, /*config_required=*/false);
    std::vector<std::string> report_paths, feature_paths;
    rep->add_option("--reports", report_paths, "evaluation report JSON files")
        ->required()
        ->check(CLI::ExistingFile);
    rep->add_option("--features", feature_paths, "feature files for per-device mean rows")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const auto manifest = eps::cmd_simulate(load(sim_args), sim_args.out_dir, sim_args.threads);
            std::cout << manifest.string() << "\n";
        } else if (*ext) {
            const auto outputs =
                eps::cmd_extract(dataset_dir, load(ext_args), eps::parse_representation(representation),
                                 ext_args.out_dir, ext_args.threads);
            log_paths("features", outputs);
            for (const auto& p : outputs) std::cout << p.string() << "\n";
        } else if (*eval) {
            const eps::Scenario s = load(eval_args);
            std::vector<std::filesystem::path> tests(test_paths.begin(), test_paths.end());
            const auto outputs =
                eps::cmd_evaluate(train_path, tests, eps::classifier_options(s), s.k_folds,
                                  eval_args.out_dir, eps::RngStream(s.seed, 4));
            log_paths("reports", outputs);
            for (const auto& p : outputs) std::cout << p.string() << "\n";
        } else if (*warm) {
            const auto path =
                eps::cmd_warmup(load(warm_args), capture_times, warm_args.out_dir, warm_args.threads);
            std::cout << path.string() << "\n";
        } else if (*rep) {
            std::vector<std::filesystem::path> reports(report_paths.begin(), report_paths.end());
            std::vector<std::filesystem::path> features(feature_paths.begin(), feature_paths.end());
            const auto outputs = eps::cmd_report(reports, features, rep_args.out_dir);
            for (const auto& p : outputs) std::cout << p.string() << "\n";
        }
    } catch (const std::exception& e) {
        if (error_json)
            std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
