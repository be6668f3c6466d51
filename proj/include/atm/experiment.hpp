#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atm/config.hpp"
#include "atm/objectives.hpp"
#include "atm/optimizer.hpp"
#include "atm/privacy.hpp"

namespace atm {

inline constexpr const char* kVersionString = "atm-semcom 0.1.0";

// Everything reproducibly derived from one config: data, splits, frozen
// weights, calibrated head.
struct ExperimentContext {
    ExperimentConfig cfg;
    EncoderWeights weights;
    std::vector<ToyImage> images;
    SplitManifest splits;
    PrototypeHead head;

    std::span<const ToyImage> calibration() const;
    std::span<const ToyImage> evaluation() const;
    std::span<const ToyImage> bo_subset() const;
    std::span<const ToyImage> adversary_fit() const;
    std::span<const ToyImage> adversary_holdout() const;
};

ExperimentContext build_context(const ExperimentConfig& cfg);

Codec make_codec(const ExperimentContext& ctx);
ChannelConfig make_channel(const ExperimentContext& ctx, double snr_db);
Evaluator make_evaluator(const ExperimentContext& ctx, std::span<const ToyImage> images,
                         double snr_db);

// run-bo: BO on the subset, Pareto policies re-evaluated on the full
// evaluation set; writes manifest.json, records.jsonl, pareto.csv,
// hv_curve.csv into cfg.output_dir.
SearchTrace cmd_run_bo(const ExperimentContext& ctx);

// run-baseline: same artifact trio prefixed with the method name.
SearchTrace cmd_run_baseline(const ExperimentContext& ctx, BaselineMethod method);

// eval-policy: evaluates on the full evaluation set, appends the record to
// eval_records.jsonl and returns it (the CLI prints it).
EvalRecord cmd_eval_policy(const ExperimentContext& ctx, const MergePolicy& policy);

struct SnrSweepOptions {
    std::optional<MergePolicy> explicit_policy;
    std::optional<double> budget_tokens;  // nearest-C Pareto policy selection
    std::string run_dir;                  // where pareto.csv lives, if used
};

// snr-sweep: accuracy of each method at every SNR in the config list; rows
// (snr_db, method, accuracy) in snr_sweep.csv.
void cmd_snr_sweep(const ExperimentContext& ctx, const SnrSweepOptions& options);

// privacy-eval: fits a fresh inversion oracle per Pareto policy and writes
// leakage.csv; returns the Spearman correlation between C and SSIM.
double cmd_privacy_eval(const ExperimentContext& ctx, const std::string& run_dir);

// emit-plots: tidy CSVs (pareto_points, hv_curves, policy_profiles,
// token_trace) derived from a completed run directory.
void cmd_emit_plots(const ExperimentContext& ctx, const std::string& run_dir);

// Policies of the pareto.csv written by cmd_run_bo, in row order.
std::vector<MergePolicy> load_pareto_policies(const std::string& run_dir, int layers);

}  // namespace atm
