#pragma once

#include <cstdint>
#include <optional>

#include "atm/types.hpp"

namespace atm {

struct KernelParams {
    double sigma_f2 = 1.0;    // signal variance
    Vector length_scales;     // one ARD length-scale per policy dimension
    double noise = 1e-4;      // observation noise variance
};

// Matern-5/2 with per-dimension length-scales:
// sigma_f2 * (1 + sqrt(5) r + 5/3 r^2) exp(-sqrt(5) r),
// r = sqrt(sum_l (x_l - y_l)^2 / l_l^2).
double matern52_ard(const Vector& x, const Vector& y, const KernelParams& p);

// One GP per objective. Targets are standardized internally; the prior mean
// is the empirical target mean. Hyperparameters are chosen by maximizing the
// log marginal likelihood plus log-priors over log-hyperparameters with
// multi-restart Nelder-Mead from a fixed Sobol grid in log-space, so fitting
// is fully deterministic.
class GpModel {
public:
    // warm: optional extra restart (used by the BO loop to reuse the previous
    // iteration's hyperparameters). The seed is part of the operation
    // contract but unused: the restart grid is fixed.
    static GpModel fit(const Matrix& inputs, const Vector& targets, std::uint64_t seed,
                       const std::optional<KernelParams>& warm = std::nullopt);

    // Skips hyperparameter search; used by tests with hand-picked kernels.
    static GpModel from_params(const Matrix& inputs, const Vector& targets, KernelParams params);

    // De-standardized posterior predictive mean and variance (variance
    // includes observation noise and is clamped at zero).
    std::pair<double, double> predict(const Vector& x) const;

    const KernelParams& params() const { return params_; }
    double target_mean() const { return y_mean_; }
    double target_sd() const { return y_sd_; }
    double log_marginal() const { return log_marginal_; }
    double jitter() const { return jitter_; }

private:
    GpModel() = default;
    void factorize();

    KernelParams params_;
    Matrix inputs_;       // n x L
    Vector y_std_;        // standardized targets
    double y_mean_ = 0.0;
    double y_sd_ = 1.0;
    Eigen::LLT<Matrix> llt_;
    Vector alpha_;
    double log_marginal_ = 0.0;
    double jitter_ = 0.0;
};

// Log marginal likelihood + log prior evaluated in standardized target space;
// exposed for the optimizer-sanity property test.
double gp_fit_objective(const Matrix& inputs, const Vector& targets_standardized,
                        const KernelParams& params);

}  // namespace atm
