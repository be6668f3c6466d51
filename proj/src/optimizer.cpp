#include "atm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "atm/rng.hpp"
#include "atm/sobol.hpp"

namespace atm {

namespace {

MergePolicy policy_from_unit(const Vector& u) {
    std::vector<double> t(static_cast<std::size_t>(u.size()));
    for (int i = 0; i < u.size(); ++i) {
        t[static_cast<std::size_t>(i)] = MergePolicy::kLow + (MergePolicy::kHigh - MergePolicy::kLow) * u(i);
    }
    return MergePolicy(std::move(t));
}

std::vector<Vector3> normalized_points(const std::vector<EvalRecord>& records,
                                       const NormalizationBox& box) {
    std::vector<Vector3> pts;
    pts.reserve(records.size());
    for (const EvalRecord& r : records) pts.push_back(box.normalize(r.objectives.to_vector()));
    return pts;
}

std::vector<double> hv_curve_for(const std::vector<Vector3>& points, const Vector3& ref) {
    std::vector<double> curve;
    curve.reserve(points.size());
    std::vector<Vector3> prefix;
    for (const Vector3& p : points) {
        prefix.push_back(p);
        curve.push_back(hypervolume_filtered(non_dominated(prefix), ref));
    }
    return curve;
}

struct Posterior {
    Vector3 mean;
    Vector3 sd;
};

double ehvi_from_posterior(const Posterior& post, const std::vector<Vector3>& front_points,
                           const Vector3& ref, const Matrix& draws) {
    double acc = 0.0;
    for (int s = 0; s < draws.rows(); ++s) {
        Vector3 f;
        for (int j = 0; j < 3; ++j) f(j) = post.mean(j) + post.sd(j) * draws(s, j);
        acc += hvi_contribution(front_points, ref, f);
    }
    return acc / static_cast<double>(draws.rows());
}

Matrix normal_draws(int n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix d(n, 3);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) d(i, j) = rng.normal();
    }
    return d;
}

Posterior predict_all(const std::array<const GpModel*, 3>& models, const Vector& x) {
    Posterior p;
    for (int j = 0; j < 3; ++j) {
        const auto [mean, var] = models[static_cast<std::size_t>(j)]->predict(x);
        p.mean(j) = mean;
        p.sd(j) = std::sqrt(std::max(0.0, var));
    }
    return p;
}

Vector policy_vector(const MergePolicy& p) {
    Vector v(p.size());
    for (int i = 0; i < p.size(); ++i) v(i) = p[i];
    return v;
}

}  // namespace

void BoConfig::validate() const {
    if (n_init < 2 * (layers + 1)) {
        throw std::invalid_argument("BoConfig: n_init must be >= 2*(L+1)");
    }
    if (budget <= n_init) throw std::invalid_argument("BoConfig: budget must exceed n_init");
    if (candidate_pool < 1 || mc_samples < 1) {
        throw std::invalid_argument("BoConfig: pool and mc_samples must be >= 1");
    }
}

std::vector<MergePolicy> sobol_policies(int n, int layers, std::uint64_t /*seed*/) {
    if (n < 1) throw std::invalid_argument("sobol_policies: n must be >= 1");
    SobolSequence seq(layers, 1);
    std::vector<MergePolicy> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(policy_from_unit(seq.next()));
    return out;
}

double ehvi(const std::array<const GpModel*, 3>& models, const ParetoFront& front, const Vector& x,
            int mc_samples, std::uint64_t seed) {
    const Matrix draws = normal_draws(mc_samples, seed);
    return ehvi_from_posterior(predict_all(models, x), front.points, front.reference, draws);
}

MergePolicy propose_next(const std::array<const GpModel*, 3>& models, const ParetoFront& front,
                         const std::vector<MergePolicy>& pool, int mc_samples, std::uint64_t seed) {
    if (pool.empty()) throw std::invalid_argument("propose_next: empty candidate pool");
    const Matrix draws = normal_draws(mc_samples, seed);
    int best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const Posterior post = predict_all(models, policy_vector(pool[i]));
        const double score = ehvi_from_posterior(post, front.points, front.reference, draws);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(i);
        }
    }
    return pool[static_cast<std::size_t>(best)];
}

SearchTrace run_bo(const BoConfig& cfg, const std::function<EvalRecord(const MergePolicy&)>& evaluate,
                   const std::function<void(const EvalRecord&)>& on_record,
                   const std::optional<NormalizationBox>& shared_box) {
    cfg.validate();
    SearchTrace trace;
    trace.method_tag = "bo";

    SobolSequence stream(cfg.layers, 1);
    auto emit = [&](const EvalRecord& rec) {
        trace.records.push_back(rec);
        if (on_record) on_record(rec);
    };

    std::vector<MergePolicy> policies;  // aligned with records
    for (int i = 0; i < cfg.n_init; ++i) {
        policies.push_back(policy_from_unit(stream.next()));
        emit(evaluate(policies.back()));
    }

    if (shared_box.has_value()) {
        trace.box = *shared_box;
    } else {
        std::vector<Vector3> raw;
        for (const EvalRecord& r : trace.records) raw.push_back(r.objectives.to_vector());
        trace.box.freeze(raw);
    }
    const Vector3 unit_ref = Vector3::Ones();

    std::array<std::optional<GpModel>, 3> models;
    bool have_models = false;
    std::array<std::optional<KernelParams>, 3> warm;

    while (static_cast<int>(trace.records.size()) < cfg.budget) {
        const int n = static_cast<int>(trace.records.size());
        const int iteration = n - cfg.n_init;
        const std::vector<Vector3> norm_pts = normalized_points(trace.records, trace.box);

        const bool refit = !have_models || n <= 200 || iteration % 5 == 0;
        if (refit) {
            Matrix inputs(n, cfg.layers);
            for (int i = 0; i < n; ++i) inputs.row(i) = policy_vector(policies[static_cast<std::size_t>(i)]).transpose();
            GpIterationLog log;
            log.iteration = n;
            for (int j = 0; j < 3; ++j) {
                Vector targets(n);
                for (int i = 0; i < n; ++i) targets(i) = norm_pts[static_cast<std::size_t>(i)](j);
                models[static_cast<std::size_t>(j)] = GpModel::fit(
                    inputs, targets, derive_seed(cfg.seed, "gp", static_cast<std::uint64_t>(j)),
                    warm[static_cast<std::size_t>(j)]);
                warm[static_cast<std::size_t>(j)] = models[static_cast<std::size_t>(j)]->params();
                log.params[static_cast<std::size_t>(j)] = models[static_cast<std::size_t>(j)]->params();
            }
            trace.gp_log.push_back(log);
            have_models = true;
        }

        // current front inside the frozen reference box
        ParetoFront front;
        front.reference = unit_ref;
        std::vector<int> incumbent_indices;
        for (int idx : non_dominated_indices(norm_pts)) {
            if ((norm_pts[static_cast<std::size_t>(idx)].array() < unit_ref.array()).all()) {
                front.points.push_back(norm_pts[static_cast<std::size_t>(idx)]);
                incumbent_indices.push_back(idx);
            }
        }

        // candidate pool: fresh Sobol batch plus perturbed incumbents
        std::vector<MergePolicy> pool;
        pool.reserve(static_cast<std::size_t>(cfg.candidate_pool) +
                     incumbent_indices.size() * static_cast<std::size_t>(cfg.perturbations_per_incumbent));
        for (int i = 0; i < cfg.candidate_pool; ++i) pool.push_back(policy_from_unit(stream.next()));
        Rng perturb(derive_seed(cfg.seed, "perturb", static_cast<std::uint64_t>(iteration)));
        for (int idx : incumbent_indices) {
            const MergePolicy& base = policies[static_cast<std::size_t>(idx)];
            for (int k = 0; k < cfg.perturbations_per_incumbent; ++k) {
                std::vector<double> t(static_cast<std::size_t>(cfg.layers));
                for (int l = 0; l < cfg.layers; ++l) {
                    t[static_cast<std::size_t>(l)] =
                        std::clamp(base[l] + cfg.perturbation_sigma * perturb.normal(),
                                   MergePolicy::kLow, MergePolicy::kHigh);
                }
                pool.push_back(MergePolicy(std::move(t)));
            }
        }

        const std::array<const GpModel*, 3> model_ptrs = {&*models[0], &*models[1], &*models[2]};
        MergePolicy next = propose_next(model_ptrs, front, pool, cfg.mc_samples,
                                        derive_seed(cfg.seed, "ehvi", static_cast<std::uint64_t>(iteration)));
        policies.push_back(next);
        emit(evaluate(next));
    }

    trace.hv_curve = hv_curve_for(normalized_points(trace.records, trace.box), unit_ref);
    return trace;
}

BaselineMethod baseline_method_from_string(const std::string& name) {
    if (name == "random") return BaselineMethod::random;
    if (name == "sobol") return BaselineMethod::sobol;
    if (name == "constant_threshold") return BaselineMethod::constant_threshold;
    if (name == "fixed_ratio") return BaselineMethod::fixed_ratio;
    throw std::invalid_argument("unknown baseline method: " + name);
}

std::string to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::random: return "random";
        case BaselineMethod::sobol: return "sobol";
        case BaselineMethod::constant_threshold: return "constant_threshold";
        case BaselineMethod::fixed_ratio: return "fixed_ratio";
    }
    return "unknown";
}

SearchTrace run_baseline(BaselineMethod method, int budget, const Evaluator& evaluator,
                         std::uint64_t seed, const std::optional<NormalizationBox>& shared_box,
                         const std::function<void(const EvalRecord&)>& on_record) {
    if (budget < 1) throw std::invalid_argument("run_baseline: budget must be >= 1");
    const int layers = evaluator.layers();
    SearchTrace trace;
    trace.method_tag = to_string(method);

    std::vector<MergeSchedule> schedule;
    switch (method) {
        case BaselineMethod::random: {
            Rng rng(derive_seed(seed, "random-policies"));
            for (int i = 0; i < budget; ++i) {
                std::vector<double> t(static_cast<std::size_t>(layers));
                for (double& v : t) v = rng.uniform(MergePolicy::kLow, MergePolicy::kHigh);
                schedule.push_back(MergeSchedule::from_policy(MergePolicy(std::move(t))));
            }
            break;
        }
        case BaselineMethod::sobol: {
            for (const MergePolicy& p : sobol_policies(budget, layers, seed)) {
                schedule.push_back(MergeSchedule::from_policy(p));
            }
            break;
        }
        case BaselineMethod::constant_threshold: {
            for (int i = 0; i <= 50 && static_cast<int>(schedule.size()) < budget; ++i) {
                schedule.push_back(MergeSchedule::from_policy(
                    constant_threshold_policy(static_cast<double>(50 + i) / 100.0, layers)));
            }
            break;
        }
        case BaselineMethod::fixed_ratio: {
            const int r_max = evaluator.n_tokens() / 2;
            for (int r = 0; r <= r_max && static_cast<int>(schedule.size()) < budget; ++r) {
                schedule.push_back(MergeSchedule::uniform_ratio(r, layers));
            }
            break;
        }
    }

    for (const MergeSchedule& s : schedule) {
        trace.records.push_back(evaluator.evaluate_schedule(s));
        if (on_record) on_record(trace.records.back());
    }

    if (shared_box.has_value()) {
        trace.box = *shared_box;
    } else {
        std::vector<Vector3> raw;
        const int freeze_after = std::min<int>(20, static_cast<int>(trace.records.size()));
        for (int i = 0; i < freeze_after; ++i) raw.push_back(trace.records[static_cast<std::size_t>(i)].objectives.to_vector());
        trace.box.freeze(raw);
    }
    trace.hv_curve = hv_curve_for(normalized_points(trace.records, trace.box), Vector3::Ones());
    return trace;
}

}  // namespace atm
