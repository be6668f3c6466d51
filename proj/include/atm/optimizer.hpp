#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atm/objectives.hpp"
#include "atm/pareto.hpp"
#include "atm/surrogate.hpp"
#include "atm/types.hpp"

namespace atm {

struct BoConfig {
    int n_init = 20;            // Sobol initialization size
    int budget = 100;           // total evaluations T
    int candidate_pool = 512;   // Sobol candidates per acquisition round
    int mc_samples = 128;       // EHVI Monte-Carlo samples during search
    int perturbations_per_incumbent = 10;
    double perturbation_sigma = 0.02;
    int layers = 6;
    double snr_db = 20.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GpIterationLog {
    int iteration = 0;  // record index at which the refit happened
    std::array<KernelParams, 3> params;
};

struct SearchTrace {
    std::vector<EvalRecord> records;
    std::vector<double> hv_curve;  // normalized hypervolume after each evaluation
    std::string method_tag;
    NormalizationBox box;
    std::vector<GpIterationLog> gp_log;
};

// First n points of the Sobol sequence mapped affinely onto [0.5,1]^L.
std::vector<MergePolicy> sobol_policies(int n, int layers, std::uint64_t seed);

// Monte-Carlo EHVI: draws from the product of the three posterior normals and
// averages the exact hypervolume improvement. A fixed seed gives common
// random numbers across candidates within one acquisition round.
double ehvi(const std::array<const GpModel*, 3>& models, const ParetoFront& front, const Vector& x,
            int mc_samples, std::uint64_t seed);

// Argmax of EHVI over the pool; ties resolve to the earlier pool index.
MergePolicy propose_next(const std::array<const GpModel*, 3>& models, const ParetoFront& front,
                         const std::vector<MergePolicy>& pool, int mc_samples, std::uint64_t seed);

// The full BO loop: Sobol-initialize, then fit / filter / propose / evaluate
// until the budget is spent. The normalization box freezes after
// initialization (or is taken from `shared_box` when several methods must be
// compared under one reference). on_record fires after every evaluation so
// callers can persist partial traces.
SearchTrace run_bo(const BoConfig& cfg, const std::function<EvalRecord(const MergePolicy&)>& evaluate,
                   const std::function<void(const EvalRecord&)>& on_record = {},
                   const std::optional<NormalizationBox>& shared_box = std::nullopt);

enum class BaselineMethod { random, sobol, constant_threshold, fixed_ratio };

BaselineMethod baseline_method_from_string(const std::string& name);
std::string to_string(BaselineMethod m);

// Search baselines sharing the evaluator and seed discipline: uniform random
// policies, the Sobol sequence, a constant-threshold grid sweep
// {0.50, 0.51, ..., 1.00}, and the fixed-ratio sweep r in {0 .. N_0/2}.
SearchTrace run_baseline(BaselineMethod method, int budget, const Evaluator& evaluator,
                         std::uint64_t seed,
                         const std::optional<NormalizationBox>& shared_box = std::nullopt,
                         const std::function<void(const EvalRecord&)>& on_record = {});

}  // namespace atm
