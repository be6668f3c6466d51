#include "atm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "atm/io.hpp"
#include "atm/pareto.hpp"
#include "atm/stats.hpp"

namespace atm {

namespace {

namespace fs = std::filesystem;

std::span<const ToyImage> view(const std::vector<ToyImage>& images, const std::vector<int>& idx) {
    // splits are consecutive ranges by construction
    if (idx.empty()) return {};
    return {images.data() + idx.front(), static_cast<std::size_t>(idx.size())};
}

std::string policy_csv_header(int layers) {
    std::vector<std::string> cells = {"A", "F_gflops", "C_tokens"};
    for (int l = 1; l <= layers; ++l) cells.push_back("tau_" + std::to_string(l));
    return csv_line(cells);
}

std::string records_path(const std::string& dir, const std::string& prefix) {
    return dir + "/" + prefix + "records.jsonl";
}

nlohmann::json kernel_params_json(const KernelParams& p) {
    std::vector<double> ls(p.length_scales.data(), p.length_scales.data() + p.length_scales.size());
    return nlohmann::json{{"sigma_f2", p.sigma_f2}, {"length_scales", ls}, {"noise", p.noise}};
}

void write_manifest(const std::string& dir, const std::string& prefix, const ExperimentConfig& cfg,
                    const SearchTrace& trace) {
    nlohmann::json j;
    j["version"] = kVersionString;
    j["method"] = trace.method_tag;
    const nlohmann::json cfg_json = config_to_json(cfg);
    j["config"] = cfg_json;
    j["config_hash"] = hex64(fnv1a64(cfg_json.dump()));
    j["seeds"] = {{"root", cfg.root_seed},
                  {"encoder", cfg.seed_for("encoder")},
                  {"data", cfg.seed_for("data")},
                  {"channel", cfg.seed_for("channel")},
                  {"bo", cfg.seed_for("bo")},
                  {"privacy", cfg.seed_for("privacy")}};
    j["n_records"] = trace.records.size();
    j["normalization"] = {{"lo", {trace.box.lo(0), trace.box.lo(1), trace.box.lo(2)}},
                          {"reference", {trace.box.ref(0), trace.box.ref(1), trace.box.ref(2)}}};
    nlohmann::json gp = nlohmann::json::array();
    for (const GpIterationLog& log : trace.gp_log) {
        gp.push_back({{"iteration", log.iteration},
                      {"neg_accuracy", kernel_params_json(log.params[0])},
                      {"flops", kernel_params_json(log.params[1])},
                      {"comm_cost", kernel_params_json(log.params[2])}});
    }
    j["gp_hyperparameters"] = gp;
    write_text_file(dir + "/" + prefix + "manifest.json", j.dump(2) + "\n");
}

void write_hv_curve(const std::string& path, const SearchTrace& trace) {
    std::string out = "iter,hv\n";
    for (std::size_t i = 0; i < trace.hv_curve.size(); ++i) {
        out += std::to_string(i + 1) + "," + fmt_double(trace.hv_curve[i]) + "\n";
    }
    write_text_file(path, out);
}

std::vector<int> pareto_record_indices(const std::vector<EvalRecord>& records) {
    std::vector<Vector3> pts;
    pts.reserve(records.size());
    for (const EvalRecord& r : records) pts.push_back(r.objectives.to_vector());
    return non_dominated_indices(pts);
}

}  // namespace

std::span<const ToyImage> ExperimentContext::calibration() const {
    return view(images, splits.calibration);
}
std::span<const ToyImage> ExperimentContext::evaluation() const {
    return view(images, splits.evaluation);
}
std::span<const ToyImage> ExperimentContext::bo_subset() const {
    return evaluation().subspan(0, static_cast<std::size_t>(cfg.data.bo_subset));
}
std::span<const ToyImage> ExperimentContext::adversary_fit() const {
    return view(images, splits.adversary_fit);
}
std::span<const ToyImage> ExperimentContext::adversary_holdout() const {
    return view(images, splits.adversary_holdout);
}

ExperimentContext build_context(const ExperimentConfig& cfg) {
    ExperimentContext ctx;
    ctx.cfg = cfg;
    const int n_total = cfg.data.calibration + cfg.data.evaluation + cfg.data.adversary_fit +
                        cfg.data.adversary_holdout;
    ctx.images = generate_dataset(cfg.seed_for("data"), n_total, cfg.data.n_classes,
                                  cfg.data.redundancy, cfg.encoder.image, cfg.encoder.image,
                                  cfg.encoder.patch);
    ctx.splits = make_splits(cfg.data.calibration, cfg.data.evaluation, cfg.data.adversary_fit,
                             cfg.data.adversary_holdout);
    ctx.weights = make_encoder_weights(cfg.encoder);
    ctx.head = calibrate_head(ctx.calibration(), ctx.weights);
    return ctx;
}

Codec make_codec(const ExperimentContext& ctx) {
    CodecSpec spec;
    spec.kind = ctx.cfg.channel.codec == "linear" ? CodecKind::linear : CodecKind::identity;
    spec.seed = ctx.cfg.seed_for("codec");
    spec.compression_ratio = ctx.cfg.channel.compression_ratio;
    return Codec(spec, ctx.cfg.encoder.dim);
}

ChannelConfig make_channel(const ExperimentContext& ctx, double snr_db) {
    return ChannelConfig{snr_db, ctx.cfg.seed_for("channel")};
}

Evaluator make_evaluator(const ExperimentContext& ctx, std::span<const ToyImage> images,
                         double snr_db) {
    return Evaluator(ctx.weights, ctx.head, images, make_codec(ctx), make_channel(ctx, snr_db),
                     ctx.cfg.root_seed);
}

SearchTrace cmd_run_bo(const ExperimentContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    fs::create_directories(cfg.output_dir);
    const std::string jsonl = records_path(cfg.output_dir, "");
    write_text_file(jsonl, "");

    const Evaluator subset_eval = make_evaluator(ctx, ctx.bo_subset(), cfg.channel.snr_db);
    BoConfig bo;
    bo.n_init = cfg.bo.n_init;
    bo.budget = cfg.bo.budget;
    bo.candidate_pool = cfg.bo.candidate_pool;
    bo.mc_samples = cfg.bo.mc_samples;
    bo.perturbations_per_incumbent = cfg.bo.perturbations_per_incumbent;
    bo.perturbation_sigma = cfg.bo.perturbation_sigma;
    bo.layers = cfg.encoder.layers;
    bo.snr_db = cfg.channel.snr_db;
    bo.seed = cfg.seed_for("bo");

    SearchTrace trace = run_bo(
        bo, [&subset_eval](const MergePolicy& p) { return subset_eval.evaluate(p); },
        [&jsonl](const EvalRecord& rec) { append_line(jsonl, record_to_json(rec).dump()); });

    // re-evaluate the Pareto policies on the full evaluation set
    const Evaluator full_eval = make_evaluator(ctx, ctx.evaluation(), cfg.channel.snr_db);
    std::string pareto_csv = policy_csv_header(cfg.encoder.layers) + "\n";
    for (int idx : pareto_record_indices(trace.records)) {
        const EvalRecord& rec = trace.records[static_cast<std::size_t>(idx)];
        const EvalRecord full = full_eval.evaluate(MergePolicy(rec.policy));
        std::vector<std::string> cells = {fmt_double(-full.objectives.neg_accuracy),
                                          fmt_double(full.objectives.flops / 1e9),
                                          fmt_double(full.objectives.comm_cost)};
        for (double t : rec.policy) cells.push_back(fmt_double(t));
        pareto_csv += csv_line(cells) + "\n";
    }
    write_text_file(cfg.output_dir + "/pareto.csv", pareto_csv);
    write_hv_curve(cfg.output_dir + "/hv_curve.csv", trace);
    write_manifest(cfg.output_dir, "", cfg, trace);
    return trace;
}

SearchTrace cmd_run_baseline(const ExperimentContext& ctx, BaselineMethod method) {
    const ExperimentConfig& cfg = ctx.cfg;
    fs::create_directories(cfg.output_dir);
    const std::string prefix = to_string(method) + "_";
    const std::string jsonl = records_path(cfg.output_dir, prefix);
    write_text_file(jsonl, "");

    const Evaluator subset_eval = make_evaluator(ctx, ctx.bo_subset(), cfg.channel.snr_db);
    SearchTrace trace = run_baseline(
        method, cfg.bo.budget, subset_eval, cfg.seed_for("bo"), std::nullopt,
        [&jsonl](const EvalRecord& rec) { append_line(jsonl, record_to_json(rec).dump()); });

    write_hv_curve(cfg.output_dir + "/" + prefix + "hv_curve.csv", trace);
    write_manifest(cfg.output_dir, prefix, cfg, trace);
    return trace;
}

EvalRecord cmd_eval_policy(const ExperimentContext& ctx, const MergePolicy& policy) {
    fs::create_directories(ctx.cfg.output_dir);
    const Evaluator full_eval = make_evaluator(ctx, ctx.evaluation(), ctx.cfg.channel.snr_db);
    const EvalRecord rec = full_eval.evaluate(policy);
    append_line(records_path(ctx.cfg.output_dir, "eval_"), record_to_json(rec).dump());
    return rec;
}

std::vector<MergePolicy> load_pareto_policies(const std::string& run_dir, int layers) {
    const std::string path = run_dir + "/pareto.csv";
    if (!fs::exists(path)) throw std::runtime_error("missing run artifact: " + path);
    std::istringstream is(read_text_file(path));
    std::string line;
    std::getline(is, line);  // header
    std::vector<MergePolicy> policies;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
        if (static_cast<int>(cells.size()) != 3 + layers) {
            throw std::runtime_error("pareto.csv: unexpected column count");
        }
        policies.push_back(MergePolicy(std::vector<double>(cells.begin() + 3, cells.end())));
    }
    return policies;
}

namespace {

// Pareto C values aligned with load_pareto_policies order.
std::vector<double> load_pareto_column(const std::string& run_dir, int column) {
    std::istringstream is(read_text_file(run_dir + "/pareto.csv"));
    std::string line;
    std::getline(is, line);
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        for (int i = 0; i <= column; ++i) std::getline(ls, cell, ',');
        values.push_back(std::stod(cell));
    }
    return values;
}

}  // namespace

void cmd_snr_sweep(const ExperimentContext& ctx, const SnrSweepOptions& options) {
    std::vector<std::pair<std::string, MergePolicy>> methods;
    methods.emplace_back("identity", constant_threshold_policy(1.0, ctx.cfg.encoder.layers));
    if (options.explicit_policy.has_value()) {
        methods.emplace_back("policy", *options.explicit_policy);
    } else if (!options.run_dir.empty()) {
        const std::vector<MergePolicy> pareto =
            load_pareto_policies(options.run_dir, ctx.cfg.encoder.layers);
        if (pareto.empty()) throw std::runtime_error("snr-sweep: empty Pareto set");
        const std::vector<double> comm = load_pareto_column(options.run_dir, 2);
        std::vector<double> sorted_comm = comm;
        std::sort(sorted_comm.begin(), sorted_comm.end());
        const double budget = options.budget_tokens.value_or(sorted_comm[sorted_comm.size() / 2]);
        std::size_t best = 0;
        for (std::size_t i = 1; i < comm.size(); ++i) {
            if (std::abs(comm[i] - budget) < std::abs(comm[best] - budget)) best = i;
        }
        methods.emplace_back("pareto", pareto[best]);
    } else {
        throw std::runtime_error("snr-sweep: no policy source (need a run dir or a policy)");
    }

    fs::create_directories(ctx.cfg.output_dir);
    std::string csv = "snr_db,method,accuracy\n";
    for (double snr : ctx.cfg.channel.snr_sweep) {
        const Evaluator eval = make_evaluator(ctx, ctx.evaluation(), snr);
        for (const auto& [name, policy] : methods) {
            const EvalRecord rec = eval.evaluate(policy);
            csv += fmt_double(snr) + "," + name + "," + fmt_double(-rec.objectives.neg_accuracy) + "\n";
        }
    }
    write_text_file(ctx.cfg.output_dir + "/snr_sweep.csv", csv);
}

double cmd_privacy_eval(const ExperimentContext& ctx, const std::string& run_dir) {
    const std::vector<MergePolicy> policies =
        load_pareto_policies(run_dir, ctx.cfg.encoder.layers);
    if (policies.empty()) throw std::runtime_error("privacy-eval: empty Pareto set");
    const std::vector<double> accuracy = load_pareto_column(run_dir, 0);

    const Pipeline pipeline(ctx.weights, make_codec(ctx), make_channel(ctx, ctx.cfg.channel.snr_db));
    const std::uint64_t seed = ctx.cfg.seed_for("privacy");

    std::vector<std::string> lines;
    std::vector<double> comm, leak;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        const SurrogateSet surrogate =
            build_surrogate(policies[i], ctx.adversary_fit(), pipeline, seed);
        const InversionOracle oracle = fit_inversion(surrogate, 1e-2);
        const LeakageReport report =
            leakage_eval(policies[i], oracle, ctx.adversary_holdout(), pipeline, seed);
        comm.push_back(report.mean_comm_cost);
        leak.push_back(report.mean_ssim);

        nlohmann::json pj = nlohmann::json(policies[i].thresholds());
        std::vector<std::string> cells = {hex64(fnv1a64(pj.dump())), fmt_double(accuracy[i]),
                                          fmt_double(report.mean_comm_cost),
                                          fmt_double(report.mean_ssim)};
        for (double t : policies[i].thresholds()) cells.push_back(fmt_double(t));
        lines.push_back(csv_line(cells));
    }

    fs::create_directories(ctx.cfg.output_dir);
    std::vector<std::string> header = {"policy_hash", "A", "C", "mean_ssim"};
    for (int l = 1; l <= ctx.cfg.encoder.layers; ++l) header.push_back("tau_" + std::to_string(l));
    std::string csv = csv_line(header) + "\n";
    for (const std::string& line : lines) csv += line + "\n";
    write_text_file(ctx.cfg.output_dir + "/leakage.csv", csv);

    return comm.size() >= 2 ? spearman(comm, leak) : 0.0;
}

void cmd_emit_plots(const ExperimentContext& ctx, const std::string& run_dir) {
    const std::string jsonl_path = records_path(run_dir, "");
    if (!fs::exists(jsonl_path)) throw std::runtime_error("missing run artifact: " + jsonl_path);
    std::vector<EvalRecord> records;
    {
        std::istringstream is(read_text_file(jsonl_path));
        std::string line;
        while (std::getline(is, line)) {
            if (!line.empty()) records.push_back(record_from_json(nlohmann::json::parse(line)));
        }
    }
    if (records.empty()) throw std::runtime_error("emit-plots: no records in " + jsonl_path);

    std::string method = "bo";
    {
        const std::string manifest_path = run_dir + "/manifest.json";
        if (fs::exists(manifest_path)) {
            method = nlohmann::json::parse(read_text_file(manifest_path)).at("method").get<std::string>();
        }
    }

    fs::create_directories(ctx.cfg.output_dir);

    // pareto_points.csv: every evaluated point plus a dominated flag
    {
        std::vector<Vector3> pts;
        for (const EvalRecord& r : records) pts.push_back(r.objectives.to_vector());
        const std::vector<int> nd = non_dominated_indices(pts);
        std::vector<char> is_nd(records.size(), 0);
        for (int i : nd) is_nd[static_cast<std::size_t>(i)] = 1;
        std::string csv = "A,F_gflops,C_tokens,dominated\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            csv += fmt_double(-records[i].objectives.neg_accuracy) + "," +
                   fmt_double(records[i].objectives.flops / 1e9) + "," +
                   fmt_double(records[i].objectives.comm_cost) + "," +
                   (is_nd[i] ? std::string("0") : std::string("1")) + "\n";
        }
        write_text_file(ctx.cfg.output_dir + "/pareto_points.csv", csv);
    }

    // hv_curves.csv: method, iter, hv
    {
        const std::string hv_path = run_dir + "/hv_curve.csv";
        if (!fs::exists(hv_path)) throw std::runtime_error("missing run artifact: " + hv_path);
        std::istringstream is(read_text_file(hv_path));
        std::string line;
        std::getline(is, line);
        std::string csv = "method,iter,hv\n";
        while (std::getline(is, line)) {
            if (!line.empty()) csv += method + "," + line + "\n";
        }
        write_text_file(ctx.cfg.output_dir + "/hv_curves.csv", csv);
    }

    // policy_profiles.csv: per-layer thresholds of the Pareto policies
    const std::vector<MergePolicy> pareto = load_pareto_policies(run_dir, ctx.cfg.encoder.layers);
    {
        std::string csv = "policy_id,layer,tau\n";
        for (std::size_t i = 0; i < pareto.size(); ++i) {
            for (int l = 0; l < pareto[i].size(); ++l) {
                csv += std::to_string(i) + "," + std::to_string(l + 1) + "," +
                       fmt_double(pareto[i][l]) + "\n";
            }
        }
        write_text_file(ctx.cfg.output_dir + "/policy_profiles.csv", csv);
    }

    // token_trace.csv: per-layer counts of the median-C Pareto policy over the
    // first evaluation images (data-dependent merging, sample by sample)
    {
        const std::vector<double> comm = load_pareto_column(run_dir, 2);
        std::vector<std::size_t> order(comm.size());
        for (std::size_t i = 0; i < comm.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&comm](std::size_t a, std::size_t b) { return comm[a] < comm[b]; });
        const MergePolicy& chosen = pareto[order[order.size() / 2]];
        const MergeSchedule schedule = MergeSchedule::from_policy(chosen);

        const std::span<const ToyImage> eval_images = ctx.evaluation();
        const std::size_t n_show = std::min<std::size_t>(16, eval_images.size());
        std::string csv = "sample_id,layer,N_l\n";
        const MergeHook hook = Pipeline(ctx.weights, make_codec(ctx), make_channel(ctx, ctx.cfg.channel.snr_db))
                                   .make_hook(schedule);
        for (std::size_t i = 0; i < n_show; ++i) {
            const ForwardResult fwd = forward(eval_images[i], ctx.weights, hook);
            csv += std::to_string(i) + ",0," + std::to_string(ctx.weights.cfg.n_tokens()) + "\n";
            for (std::size_t l = 0; l < fwd.token_counts.size(); ++l) {
                csv += std::to_string(i) + "," + std::to_string(l + 1) + "," +
                       std::to_string(fwd.token_counts[l]) + "\n";
            }
        }
        write_text_file(ctx.cfg.output_dir + "/token_trace.csv", csv);
    }
}

}  // namespace atm
