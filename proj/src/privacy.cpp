#include "atm/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "atm/rng.hpp"

namespace atm {

namespace {

// Pads decoded tokens to pad_length rows and flattens, source counts appended.
Vector feature_row(const TokenMatrix& z, int pad_length, int token_dim) {
    Vector f = Vector::Zero(pad_length * token_dim + pad_length);
    const int n = std::min(z.count(), pad_length);
    for (int i = 0; i < n; ++i) {
        f.segment(i * token_dim, token_dim) = z.tokens.row(i).transpose();
        f(pad_length * token_dim + i) = static_cast<double>(z.source_counts(i));
    }
    return f;
}

}  // namespace

SurrogateSet build_surrogate(const MergePolicy& policy, std::span<const ToyImage> adversary_set,
                             const Pipeline& pipeline, std::uint64_t seed) {
    if (adversary_set.empty()) throw std::invalid_argument("build_surrogate: empty adversary set");
    const MergeSchedule schedule = MergeSchedule::from_policy(policy);

    std::vector<TokenMatrix> received;
    received.reserve(adversary_set.size());
    int pad_length = 0;
    for (std::size_t i = 0; i < adversary_set.size(); ++i) {
        Pipeline::Output out =
            pipeline.run(adversary_set[i], schedule, derive_seed(seed, "adversary", i));
        pad_length = std::max(pad_length, out.received.count());
        received.push_back(std::move(out.received));
    }

    const ToyImage& first = adversary_set.front();
    SurrogateSet s;
    s.pad_length = pad_length;
    s.token_dim = pipeline.weights().cfg.dim;
    s.height = first.height;
    s.width = first.width;
    s.features.resize(static_cast<int>(adversary_set.size()), pad_length * s.token_dim + pad_length);
    s.targets.resize(static_cast<int>(adversary_set.size()),
                     first.height * first.width * static_cast<int>(first.pixels.cols()));
    for (std::size_t i = 0; i < adversary_set.size(); ++i) {
        s.features.row(static_cast<int>(i)) =
            feature_row(received[i], pad_length, s.token_dim).transpose();
        const Matrix& px = adversary_set[i].pixels;
        for (int p = 0; p < px.rows(); ++p) {
            for (int c = 0; c < px.cols(); ++c) {
                s.targets(static_cast<int>(i), p * static_cast<int>(px.cols()) + c) = px(p, c);
            }
        }
    }
    return s;
}

InversionOracle fit_inversion(const SurrogateSet& surrogate, double lambda) {
    const int m = static_cast<int>(surrogate.features.rows());
    const int fdim = static_cast<int>(surrogate.features.cols());
    if (m < (fdim + 1) / 10) {
        std::cerr << "fit_inversion: warning: only " << m << " samples for " << fdim
                  << " features\n";
    }
    Matrix x(m, fdim + 1);
    x.leftCols(fdim) = surrogate.features;
    x.col(fdim).setOnes();

    Matrix normal = x.transpose() * x;
    normal.diagonal().array() += lambda;
    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success) {
        throw std::runtime_error("fit_inversion: singular normal equations");
    }
    InversionOracle oracle;
    oracle.weights = ldlt.solve(x.transpose() * surrogate.targets);
    if (!oracle.weights.allFinite()) {
        throw std::runtime_error("fit_inversion: non-finite solution");
    }
    oracle.lambda = lambda;
    oracle.pad_length = surrogate.pad_length;
    oracle.token_dim = surrogate.token_dim;
    oracle.height = surrogate.height;
    oracle.width = surrogate.width;
    return oracle;
}

ToyImage invert(const InversionOracle& oracle, const Vector& features) {
    if (features.size() + 1 != oracle.weights.rows()) {
        throw std::invalid_argument("invert: feature length does not match oracle");
    }
    Vector aug(features.size() + 1);
    aug.head(features.size()) = features;
    aug(features.size()) = 1.0;
    const Vector flat = oracle.weights.transpose() * aug;

    ToyImage img;
    img.height = oracle.height;
    img.width = oracle.width;
    img.label = -1;
    const int channels = static_cast<int>(flat.size()) / (oracle.height * oracle.width);
    img.pixels.resize(oracle.height * oracle.width, channels);
    for (int p = 0; p < img.pixels.rows(); ++p) {
        for (int c = 0; c < channels; ++c) {
            img.pixels(p, c) = std::clamp(flat(p * channels + c), 0.0, 1.0);
        }
    }
    return img;
}

double ssim(const ToyImage& a, const ToyImage& b) {
    if (a.height != b.height || a.width != b.width || a.pixels.cols() != b.pixels.cols()) {
        throw std::invalid_argument("ssim: dimension mismatch");
    }
    constexpr int kWindow = 8;
    constexpr int kStride = 4;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    const int channels = static_cast<int>(a.pixels.cols());
    const double inv_n = 1.0 / (kWindow * kWindow);

    double acc = 0.0;
    int count = 0;
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y + kWindow <= a.height; y += kStride) {
            for (int x = 0; x + kWindow <= a.width; x += kStride) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (int dy = 0; dy < kWindow; ++dy) {
                    for (int dx = 0; dx < kWindow; ++dx) {
                        const double va = a.at(y + dy, x + dx, c);
                        const double vb = b.at(y + dy, x + dx, c);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                }
                const double ma = sa * inv_n;
                const double mb = sb * inv_n;
                const double var_a = saa * inv_n - ma * ma;
                const double var_b = sbb * inv_n - mb * mb;
                const double cov = sab * inv_n - ma * mb;
                acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                       ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
                ++count;
            }
        }
    }
    return acc / static_cast<double>(count);
}

LeakageReport leakage_eval(const MergePolicy& policy, const InversionOracle& oracle,
                           std::span<const ToyImage> holdout, const Pipeline& pipeline,
                           std::uint64_t seed) {
    if (holdout.empty()) throw std::invalid_argument("leakage_eval: empty holdout set");
    const MergeSchedule schedule = MergeSchedule::from_policy(policy);
    double ssim_sum = 0.0;
    double tokens_sum = 0.0;
    for (std::size_t i = 0; i < holdout.size(); ++i) {
        const Pipeline::Output out =
            pipeline.run(holdout[i], schedule, derive_seed(seed, "holdout", i));
        const ToyImage rec =
            invert(oracle, feature_row(out.received, oracle.pad_length, oracle.token_dim));
        ssim_sum += ssim(holdout[i], rec);
        tokens_sum += static_cast<double>(out.received.count());
    }
    LeakageReport report;
    report.policy = policy.thresholds();
    report.mean_ssim = ssim_sum / static_cast<double>(holdout.size());
    report.mean_comm_cost = tokens_sum / static_cast<double>(holdout.size());
    report.n_eval = static_cast<int>(holdout.size());
    return report;
}

}  // namespace atm
