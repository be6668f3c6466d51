#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "atm/config.hpp"
#include "atm/experiment.hpp"
#include "atm/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::vector<double> parse_policy_literal(const std::string& text) {
    std::vector<double> values;
    std::istringstream is(text);
    std::string cell;
    while (std::getline(is, cell, ',')) {
        try {
            values.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw atm::ConfigError("eval-policy: cannot parse threshold '" + cell + "'");
        }
    }
    return values;
}

atm::MergePolicy policy_from_options(const std::string& literal, const std::string& file,
                                     int layers) {
    std::vector<double> values;
    if (!literal.empty()) {
        values = parse_policy_literal(literal);
    } else {
        const nlohmann::json j = nlohmann::json::parse(atm::read_text_file(file));
        values = j.get<std::vector<double>>();
    }
    if (static_cast<int>(values.size()) != layers) {
        throw atm::ConfigError("policy length does not match encoder layers");
    }
    try {
        return atm::MergePolicy(values);
    } catch (const std::invalid_argument& e) {
        throw atm::ConfigError(e.what());
    }
}

void print_record(const atm::EvalRecord& rec, bool as_json) {
    if (as_json) {
        nlohmann::json j;
        j["policy"] = rec.policy;
        j["A"] = -rec.objectives.neg_accuracy;
        j["F_gflops"] = rec.objectives.flops / 1e9;
        j["C"] = rec.objectives.comm_cost;
        j["snr_db"] = rec.snr_db;
        j["n_samples"] = rec.n_samples;
        j["wall_time"] = rec.wall_time;
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::printf("A (accuracy) : %s\n", atm::fmt_double(-rec.objectives.neg_accuracy).c_str());
    std::printf("F (GFLOPs)   : %s\n", atm::fmt_double(rec.objectives.flops / 1e9).c_str());
    std::printf("C (tokens)   : %s\n", atm::fmt_double(rec.objectives.comm_cost).c_str());
    std::printf("snr_db       : %s\n", atm::fmt_double(rec.snr_db).c_str());
    std::printf("n_samples    : %d\n", rec.n_samples);
    std::printf("wall_time (s): %s\n", atm::fmt_double(rec.wall_time).c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive token merging over a noisy channel: experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();

    CLI::App* run_bo = app.add_subcommand("run-bo", "multi-objective BO search");

    CLI::App* run_baseline = app.add_subcommand("run-baseline", "search baselines");
    std::string method = "random";
    run_baseline->add_option("--method", method, "random | sobol | constant_threshold | fixed_ratio")
        ->required();

    CLI::App* eval_policy = app.add_subcommand("eval-policy", "evaluate one policy end to end");
    std::string policy_literal, policy_file;
    bool as_json = false;
    eval_policy->add_option("--policy", policy_literal, "comma-separated thresholds");
    eval_policy->add_option("--policy-file", policy_file, "JSON array of thresholds");
    eval_policy->add_flag("--json", as_json, "print the record as JSON");

    CLI::App* snr_sweep = app.add_subcommand("snr-sweep", "accuracy across the SNR grid");
    std::string sweep_run_dir, sweep_policy;
    double budget_tokens = -1.0;
    snr_sweep->add_option("--run-dir", sweep_run_dir, "completed run directory (pareto.csv)");
    snr_sweep->add_option("--policy", sweep_policy, "explicit comma-separated thresholds");
    snr_sweep->add_option("--budget-tokens", budget_tokens,
                          "select the Pareto policy nearest this token budget");

    CLI::App* privacy_eval = app.add_subcommand("privacy-eval", "model-inversion leakage probe");
    std::string privacy_run_dir;
    privacy_eval->add_option("--run-dir", privacy_run_dir, "completed run directory")->required();

    CLI::App* emit_plots = app.add_subcommand("emit-plots", "tidy plot-ready CSVs");
    std::string plots_run_dir;
    emit_plots->add_option("--run-dir", plots_run_dir, "completed run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const atm::ExperimentConfig cfg = atm::load_config(config_path);
        const atm::ExperimentContext ctx = atm::build_context(cfg);

        if (run_bo->parsed()) {
            atm::cmd_run_bo(ctx);
            std::cout << "run-bo: artifacts written to " << cfg.output_dir << "\n";
        } else if (run_baseline->parsed()) {
            atm::BaselineMethod m;
            try {
                m = atm::baseline_method_from_string(method);
            } catch (const std::invalid_argument& e) {
                throw atm::ConfigError(e.what());
            }
            atm::cmd_run_baseline(ctx, m);
            std::cout << "run-baseline: artifacts written to " << cfg.output_dir << "\n";
        } else if (eval_policy->parsed()) {
            if (policy_literal.empty() && policy_file.empty()) {
                throw atm::ConfigError("eval-policy: need --policy or --policy-file");
            }
            const atm::MergePolicy policy =
                policy_from_options(policy_literal, policy_file, cfg.encoder.layers);
            print_record(atm::cmd_eval_policy(ctx, policy), as_json);
        } else if (snr_sweep->parsed()) {
            atm::SnrSweepOptions options;
            options.run_dir = sweep_run_dir;
            if (!sweep_policy.empty()) {
                options.explicit_policy =
                    policy_from_options(sweep_policy, "", cfg.encoder.layers);
            }
            if (budget_tokens >= 0.0) options.budget_tokens = budget_tokens;
            atm::cmd_snr_sweep(ctx, options);
            std::cout << "snr-sweep: wrote " << cfg.output_dir << "/snr_sweep.csv\n";
        } else if (privacy_eval->parsed()) {
            const double rho = atm::cmd_privacy_eval(ctx, privacy_run_dir);
            std::cout << "privacy-eval: wrote " << cfg.output_dir << "/leakage.csv\n";
            std::cout << "spearman(C, SSIM) = " << atm::fmt_double(rho) << "\n";
        } else if (emit_plots->parsed()) {
            atm::cmd_emit_plots(ctx, plots_run_dir);
            std::cout << "emit-plots: wrote plot CSVs to " << cfg.output_dir << "\n";
        }
    } catch (const atm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}
