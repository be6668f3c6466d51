#include "atm/surrogate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "atm/nelder_mead.hpp"
#include "atm/sobol.hpp"

namespace atm {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kNoiseFloor = 1e-6;
constexpr int kRestarts = 8;
constexpr int kEvalsPerRestart = 160;

// log-space search box: [log sigma_f2, log l_1..l_L, log noise]
struct LogBox {
    Vector lo, hi;
    explicit LogBox(int n_dims) {
        const int m = n_dims + 2;
        lo.resize(m);
        hi.resize(m);
        lo(0) = std::log(1e-3);
        hi(0) = std::log(1e3);
        for (int i = 1; i <= n_dims; ++i) {
            lo(i) = std::log(1e-2);
            hi(i) = std::log(1e1);
        }
        lo(m - 1) = std::log(kNoiseFloor);
        hi(m - 1) = std::log(1.0);
    }
    Vector clamp(const Vector& theta) const {
        return theta.cwiseMax(lo).cwiseMin(hi);
    }
};

KernelParams unpack(const Vector& theta) {
    const int n_dims = static_cast<int>(theta.size()) - 2;
    KernelParams p;
    p.sigma_f2 = std::exp(theta(0));
    p.length_scales = theta.segment(1, n_dims).array().exp().matrix();
    p.noise = std::exp(theta(theta.size() - 1));
    return p;
}

Vector pack(const KernelParams& p) {
    Vector theta(p.length_scales.size() + 2);
    theta(0) = std::log(p.sigma_f2);
    theta.segment(1, p.length_scales.size()) = p.length_scales.array().log().matrix();
    theta(theta.size() - 1) = std::log(std::max(p.noise, kNoiseFloor));
    return theta;
}

Matrix kernel_matrix(const Matrix& x, const KernelParams& p) {
    const int n = static_cast<int>(x.rows());
    Matrix k(n, n);
    for (int i = 0; i < n; ++i) {
        k(i, i) = p.sigma_f2 + p.noise;
        for (int j = 0; j < i; ++j) {
            const double v = matern52_ard(x.row(i).transpose(), x.row(j).transpose(), p);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// Log-normal priors: length-scales centred at a quarter of the policy domain
// width (0.125 for [0.5,1]), signal variance centred at 1.
double log_prior(const KernelParams& p) {
    double lp = 0.0;
    const double l_center = std::log(0.125);
    for (int i = 0; i < p.length_scales.size(); ++i) {
        const double d = std::log(p.length_scales(i)) - l_center;
        lp -= 0.5 * d * d;
    }
    const double ds = std::log(p.sigma_f2);
    lp -= 0.5 * (ds / 1.5) * (ds / 1.5);
    return lp;
}

struct Factorization {
    Eigen::LLT<Matrix> llt;
    double jitter = 0.0;
};

// Jitter ladder 1e-8 -> 1e-4 on factorization failure, then hard failure.
Factorization factorize_spd(const Matrix& k) {
    Factorization f;
    f.llt.compute(k);
    if (f.llt.info() == Eigen::Success) return f;
    for (double jitter = 1e-8; jitter <= 1e-4 * 1.0000001; jitter *= 10.0) {
        Matrix kj = k;
        kj.diagonal().array() += jitter;
        f.llt.compute(kj);
        if (f.llt.info() == Eigen::Success) {
            f.jitter = jitter;
            return f;
        }
    }
    throw std::runtime_error("GpModel: kernel matrix not positive definite after jitter ladder");
}

double log_marginal_likelihood(const Matrix& x, const Vector& y, const KernelParams& p,
                               double* jitter_out = nullptr) {
    const Factorization f = factorize_spd(kernel_matrix(x, p));
    if (jitter_out != nullptr) *jitter_out = f.jitter;
    const Vector alpha = f.llt.solve(y);
    const Matrix& l = f.llt.matrixLLT();
    double log_det_half = 0.0;
    for (int i = 0; i < l.rows(); ++i) log_det_half += std::log(l(i, i));
    return -0.5 * y.dot(alpha) - log_det_half -
           0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double matern52_ard(const Vector& x, const Vector& y, const KernelParams& p) {
    if (x.size() != y.size() || x.size() != p.length_scales.size()) {
        throw std::invalid_argument("matern52_ard: dimension mismatch");
    }
    const double r2 = ((x - y).array() / p.length_scales.array()).square().sum();
    const double r = std::sqrt(r2);
    return p.sigma_f2 * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
}

double gp_fit_objective(const Matrix& inputs, const Vector& targets_standardized,
                        const KernelParams& params) {
    return log_marginal_likelihood(inputs, targets_standardized, params) + log_prior(params);
}

GpModel GpModel::from_params(const Matrix& inputs, const Vector& targets, KernelParams params) {
    if (inputs.rows() != targets.size()) throw std::invalid_argument("GpModel: size mismatch");
    if (!targets.allFinite()) throw std::invalid_argument("GpModel: non-finite targets");
    GpModel m;
    m.inputs_ = inputs;
    m.params_ = std::move(params);
    m.y_mean_ = targets.mean();
    const double var = (targets.array() - m.y_mean_).square().sum() /
                       std::max<double>(1.0, static_cast<double>(targets.size()) - 1.0);
    m.y_sd_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    m.y_std_ = (targets.array() - m.y_mean_).matrix() / m.y_sd_;
    m.factorize();
    return m;
}

void GpModel::factorize() {
    Factorization f = factorize_spd(kernel_matrix(inputs_, params_));
    llt_ = std::move(f.llt);
    jitter_ = f.jitter;
    alpha_ = llt_.solve(y_std_);
    const Matrix& l = llt_.matrixLLT();
    double log_det_half = 0.0;
    for (int i = 0; i < l.rows(); ++i) log_det_half += std::log(l(i, i));
    log_marginal_ = -0.5 * y_std_.dot(alpha_) - log_det_half -
                    0.5 * static_cast<double>(y_std_.size()) * std::log(2.0 * std::numbers::pi);
}

GpModel GpModel::fit(const Matrix& inputs, const Vector& targets, std::uint64_t /*seed*/,
                     const std::optional<KernelParams>& warm) {
    if (inputs.rows() < 2) throw std::invalid_argument("GpModel::fit: need at least 2 points");
    if (inputs.rows() != targets.size()) throw std::invalid_argument("GpModel::fit: size mismatch");
    if (!targets.allFinite()) throw std::invalid_argument("GpModel::fit: non-finite targets");

    const int n_dims = static_cast<int>(inputs.cols());
    const double y_mean = targets.mean();
    const double var = (targets.array() - y_mean).square().sum() /
                       std::max<double>(1.0, static_cast<double>(targets.size()) - 1.0);
    const double y_sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    const Vector y_std = (targets.array() - y_mean).matrix() / y_sd;

    const LogBox box(n_dims);
    auto objective = [&](const Vector& theta) {
        return -(log_marginal_likelihood(inputs, y_std, unpack(box.clamp(theta))) +
                 log_prior(unpack(box.clamp(theta))));
    };

    std::vector<Vector> starts;
    SobolSequence grid(n_dims + 2, 1);
    for (int r = 0; r < kRestarts; ++r) {
        const Vector u = grid.next();
        Vector theta(n_dims + 2);
        for (int j = 0; j < theta.size(); ++j) {
            theta(j) = box.lo(j) + (0.05 + 0.9 * u(j)) * (box.hi(j) - box.lo(j));
        }
        starts.push_back(theta);
    }
    if (warm.has_value()) starts.push_back(box.clamp(pack(*warm)));

    Vector best_theta;
    double best_value = std::numeric_limits<double>::infinity();
    for (const Vector& start : starts) {
        const NelderMeadResult r = nelder_mead(objective, start, 0.4, kEvalsPerRestart, 1e-7);
        if (r.value < best_value) {
            best_value = r.value;
            best_theta = box.clamp(r.x);
        }
    }
    return from_params(inputs, targets, unpack(best_theta));
}

std::pair<double, double> GpModel::predict(const Vector& x) const {
    const int n = static_cast<int>(inputs_.rows());
    Vector ks(n);
    for (int i = 0; i < n; ++i) {
        ks(i) = matern52_ard(x, inputs_.row(i).transpose(), params_);
    }
    const double mean_std = ks.dot(alpha_);
    const Vector v = llt_.matrixL().solve(ks);
    const double kss = params_.sigma_f2 + params_.noise;
    const double var_std = std::max(0.0, kss - v.squaredNorm());
    return {y_mean_ + y_sd_ * mean_std, var_std * y_sd_ * y_sd_};
}

}  // namespace atm
