#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atm/encoder.hpp"

namespace atm {

// Raised for invalid experiment configs; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataBlock {
    int n_classes = 6;
    double redundancy = 0.7;
    int calibration = 150;
    int evaluation = 400;
    int bo_subset = 200;
    int adversary_fit = 500;
    int adversary_holdout = 100;
};

struct ChannelBlock {
    double snr_db = 20.0;
    std::vector<double> snr_sweep;
    std::string codec = "identity";
    double compression_ratio = 0.5;
};

struct BoBlock {
    int n_init = 20;
    int budget = 100;
    int candidate_pool = 512;
    int mc_samples = 128;
    int perturbations_per_incumbent = 10;
    double perturbation_sigma = 0.02;
};

// One experiment: all randomness flows from root_seed through labeled
// sub-streams. The schema is versioned and fail-closed: unknown keys and
// missing fields are errors.
struct ExperimentConfig {
    int schema_version = 1;
    std::uint64_t root_seed = 0;
    std::string output_dir;
    EncoderConfig encoder;  // seed filled from the root seed, not the file
    DataBlock data;
    ChannelBlock channel;
    BoBlock bo;

    std::uint64_t seed_for(const std::string& component) const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace atm
