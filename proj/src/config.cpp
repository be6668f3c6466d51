#include "atm/config.hpp"

#include <fstream>
#include <set>

#include "atm/rng.hpp"

namespace atm {

namespace {

// Fail-closed accessor: every field must exist, every present key must be
// consumed.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config: " + path_ + " must be an object");
    }

    template <typename T>
    T get(const std::string& key) {
        if (!j_.contains(key)) {
            throw ConfigError("config: missing required field " + path_ + "." + key);
        }
        seen_.insert(key);
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config: field " + path_ + "." + key + " has the wrong type");
        }
    }

    const nlohmann::json& child(const std::string& key) {
        if (!j_.contains(key)) {
            throw ConfigError("config: missing required field " + path_ + "." + key);
        }
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) {
                throw ConfigError("config: unknown key " + path_ + "." + item.key());
            }
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void check(bool ok, const std::string& message) {
    if (!ok) throw ConfigError("config: " + message);
}

}  // namespace

std::uint64_t ExperimentConfig::seed_for(const std::string& component) const {
    return derive_seed(root_seed, component);
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    StrictObject root(j, "$");
    ExperimentConfig cfg;
    cfg.schema_version = root.get<int>("schema_version");
    check(cfg.schema_version == 1, "unsupported schema_version (expected 1)");
    cfg.root_seed = root.get<std::uint64_t>("root_seed");
    cfg.output_dir = root.get<std::string>("output_dir");
    check(!cfg.output_dir.empty(), "output_dir must not be empty");

    StrictObject enc(root.child("encoder"), "$.encoder");
    cfg.encoder.layers = enc.get<int>("layers");
    cfg.encoder.dim = enc.get<int>("dim");
    cfg.encoder.patch = enc.get<int>("patch");
    cfg.encoder.image = enc.get<int>("image");
    cfg.encoder.channels = enc.get<int>("channels");
    cfg.encoder.mlp_ratio = enc.get<int>("mlp_ratio");
    cfg.encoder.pos_emb_scale = enc.get<double>("pos_emb_scale");
    enc.finish();
    check(cfg.encoder.layers >= 1, "encoder.layers must be >= 1");
    check(cfg.encoder.dim >= 2, "encoder.dim must be >= 2");
    check(cfg.encoder.patch >= 1 && cfg.encoder.image % cfg.encoder.patch == 0,
          "encoder.image must be divisible by encoder.patch");
    check(cfg.encoder.channels == 3, "encoder.channels must be 3");
    check(cfg.encoder.mlp_ratio >= 1, "encoder.mlp_ratio must be >= 1");
    cfg.encoder.seed = cfg.seed_for("encoder");

    StrictObject data(root.child("data"), "$.data");
    cfg.data.n_classes = data.get<int>("n_classes");
    cfg.data.redundancy = data.get<double>("redundancy");
    cfg.data.calibration = data.get<int>("calibration");
    cfg.data.evaluation = data.get<int>("evaluation");
    cfg.data.bo_subset = data.get<int>("bo_subset");
    cfg.data.adversary_fit = data.get<int>("adversary_fit");
    cfg.data.adversary_holdout = data.get<int>("adversary_holdout");
    data.finish();
    check(cfg.data.n_classes >= 2, "data.n_classes must be >= 2");
    check(cfg.data.redundancy >= 0.0 && cfg.data.redundancy <= 1.0,
          "data.redundancy must lie in [0,1]");
    check(cfg.data.calibration > 0 && cfg.data.evaluation > 0 && cfg.data.adversary_fit > 0 &&
              cfg.data.adversary_holdout > 0,
          "data split sizes must be positive");
    check(cfg.data.bo_subset > 0 && cfg.data.bo_subset <= cfg.data.evaluation,
          "data.bo_subset must lie in [1, data.evaluation]");

    StrictObject chan(root.child("channel"), "$.channel");
    cfg.channel.snr_db = chan.get<double>("snr_db");
    cfg.channel.snr_sweep = chan.get<std::vector<double>>("snr_sweep");
    cfg.channel.codec = chan.get<std::string>("codec");
    cfg.channel.compression_ratio = chan.get<double>("compression_ratio");
    chan.finish();
    check(!cfg.channel.snr_sweep.empty(), "channel.snr_sweep must not be empty");
    check(cfg.channel.codec == "identity" || cfg.channel.codec == "linear",
          "channel.codec must be identity or linear");
    check(cfg.channel.compression_ratio > 0.0 && cfg.channel.compression_ratio <= 1.0,
          "channel.compression_ratio must lie in (0,1]");

    StrictObject bo(root.child("bo"), "$.bo");
    cfg.bo.n_init = bo.get<int>("n_init");
    cfg.bo.budget = bo.get<int>("budget");
    cfg.bo.candidate_pool = bo.get<int>("candidate_pool");
    cfg.bo.mc_samples = bo.get<int>("mc_samples");
    cfg.bo.perturbations_per_incumbent = bo.get<int>("perturbations_per_incumbent");
    cfg.bo.perturbation_sigma = bo.get<double>("perturbation_sigma");
    bo.finish();
    check(cfg.bo.n_init >= 2 * (cfg.encoder.layers + 1), "bo.n_init must be >= 2*(L+1)");
    check(cfg.bo.budget > cfg.bo.n_init, "bo.budget must exceed bo.n_init");
    check(cfg.bo.candidate_pool >= 1 && cfg.bo.mc_samples >= 1,
          "bo.candidate_pool and bo.mc_samples must be >= 1");
    check(cfg.bo.perturbations_per_incumbent >= 0, "bo.perturbations_per_incumbent must be >= 0");
    check(cfg.bo.perturbation_sigma >= 0.0, "bo.perturbation_sigma must be >= 0");

    root.finish();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: parse error in ") + path + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    j["root_seed"] = cfg.root_seed;
    j["output_dir"] = cfg.output_dir;
    j["encoder"] = {{"layers", cfg.encoder.layers},       {"dim", cfg.encoder.dim},
                    {"patch", cfg.encoder.patch},         {"image", cfg.encoder.image},
                    {"channels", cfg.encoder.channels},   {"mlp_ratio", cfg.encoder.mlp_ratio},
                    {"pos_emb_scale", cfg.encoder.pos_emb_scale}};
    j["data"] = {{"n_classes", cfg.data.n_classes},
                 {"redundancy", cfg.data.redundancy},
                 {"calibration", cfg.data.calibration},
                 {"evaluation", cfg.data.evaluation},
                 {"bo_subset", cfg.data.bo_subset},
                 {"adversary_fit", cfg.data.adversary_fit},
                 {"adversary_holdout", cfg.data.adversary_holdout}};
    j["channel"] = {{"snr_db", cfg.channel.snr_db},
                    {"snr_sweep", cfg.channel.snr_sweep},
                    {"codec", cfg.channel.codec},
                    {"compression_ratio", cfg.channel.compression_ratio}};
    j["bo"] = {{"n_init", cfg.bo.n_init},
               {"budget", cfg.bo.budget},
               {"candidate_pool", cfg.bo.candidate_pool},
               {"mc_samples", cfg.bo.mc_samples},
               {"perturbations_per_incumbent", cfg.bo.perturbations_per_incumbent},
               {"perturbation_sigma", cfg.bo.perturbation_sigma}};
    return j;
}

}  // namespace atm
