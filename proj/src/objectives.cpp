#include "atm/objectives.hpp"

#include <chrono>
#include <stdexcept>

namespace atm {

namespace {

const std::vector<int> kProtectedClassToken = {0};

}  // namespace

MergePolicy::MergePolicy(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
    if (thresholds_.empty()) throw std::invalid_argument("MergePolicy: empty threshold vector");
    for (double t : thresholds_) {
        if (!(t >= kLow && t <= kHigh)) {
            throw std::invalid_argument("MergePolicy: threshold outside [0.5, 1]");
        }
    }
}

MergePolicy constant_threshold_policy(double tau0, int layers) {
    return MergePolicy(std::vector<double>(static_cast<std::size_t>(layers), tau0));
}

MergeSchedule MergeSchedule::from_policy(const MergePolicy& p) {
    MergeSchedule s;
    s.kind = Kind::threshold;
    s.thresholds = p.thresholds();
    return s;
}

MergeSchedule MergeSchedule::uniform_ratio(int r, int layers) {
    if (r < 0) throw std::invalid_argument("MergeSchedule: ratio must be >= 0");
    MergeSchedule s;
    s.kind = Kind::fixed_ratio;
    s.thresholds.assign(static_cast<std::size_t>(layers), 1.0);
    s.ratio = r;
    return s;
}

double flops_forward(const std::vector<int>& token_counts, int dim, int mlp_ratio) {
    if (token_counts.size() < 2) throw std::invalid_argument("flops_forward: need [N_0 .. N_L]");
    const double d = static_cast<double>(dim);
    double total = 0.0;
    for (std::size_t l = 1; l < token_counts.size(); ++l) {
        const double n_in = static_cast<double>(token_counts[l - 1]);
        const double n_out = static_cast<double>(token_counts[l]);
        total += 4.0 * n_in * d * d;                       // Q,K,V,O projections
        total += 2.0 * n_in * n_in * d;                    // QK^T and attn*V
        total += 2.0 * mlp_ratio * n_out * d * d * 2.0;    // two MLP matmuls, 2 ops per MAC
    }
    return total;
}

Pipeline::Pipeline(const EncoderWeights& weights, Codec codec, ChannelConfig channel)
    : weights_(weights), codec_(std::move(codec)), channel_(channel) {}

MergeHook Pipeline::make_hook(const MergeSchedule& schedule) const {
    if (schedule.kind == MergeSchedule::Kind::threshold) {
        if (static_cast<int>(schedule.thresholds.size()) != weights_.cfg.layers) {
            throw std::invalid_argument("Pipeline: policy length does not match encoder depth");
        }
        auto thresholds = schedule.thresholds;
        return [thresholds](const TokenMatrix& hidden, const Matrix& values, int layer) {
            return merge_layer(hidden, values, thresholds[static_cast<std::size_t>(layer - 1)],
                               kProtectedClassToken);
        };
    }
    const int r = schedule.ratio;
    return [r](const TokenMatrix& hidden, const Matrix& values, int) {
        return merge_layer_fixed_ratio(hidden, values, r, kProtectedClassToken);
    };
}

Pipeline::Output Pipeline::run_tokens(const TokenMatrix& z0, const MergeSchedule& schedule,
                                      std::uint64_t message_counter) const {
    ForwardResult fwd = forward_tokens(z0, weights_, make_hook(schedule));
    SymbolVector sent = normalize_power(encode(fwd.tokens.tokens, codec_));
    SymbolVector received = transmit(sent, channel_, message_counter);
    Pipeline::Output out;
    out.received.tokens = decode(received, codec_, fwd.tokens.count());
    out.received.layer_index = fwd.tokens.layer_index;
    out.received.source_counts = fwd.tokens.source_counts;
    out.token_counts = std::move(fwd.token_counts);
    return out;
}

Pipeline::Output Pipeline::run(const ToyImage& img, const MergeSchedule& schedule,
                               std::uint64_t message_counter) const {
    return run_tokens(patch_embed(img, weights_), schedule, message_counter);
}

Evaluator::Evaluator(const EncoderWeights& weights, const PrototypeHead& head,
                     std::span<const ToyImage> images, Codec codec, ChannelConfig channel,
                     std::uint64_t seed)
    : weights_(weights),
      head_(head),
      images_(images),
      pipeline_(weights, std::move(codec), channel),
      seed_(seed) {
    if (images_.empty()) throw std::invalid_argument("Evaluator: empty evaluation set");
    embedded_.reserve(images_.size());
    for (const ToyImage& img : images_) embedded_.push_back(patch_embed(img, weights_));
}

EvalRecord Evaluator::evaluate_schedule(const MergeSchedule& schedule) const {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<int> counts;
    counts.reserve(static_cast<std::size_t>(weights_.cfg.layers) + 1);
    double correct = 0.0;
    double flops_sum = 0.0;
    double tokens_sum = 0.0;
    for (std::size_t i = 0; i < images_.size(); ++i) {
        const Pipeline::Output out =
            pipeline_.run_tokens(embedded_[i], schedule, static_cast<std::uint64_t>(i));
        counts.assign(1, weights_.cfg.n_tokens());
        counts.insert(counts.end(), out.token_counts.begin(), out.token_counts.end());
        flops_sum += flops_forward(counts, weights_.cfg.dim, weights_.cfg.mlp_ratio);
        tokens_sum += static_cast<double>(out.received.count());
        if (classify(out.received, head_) == images_[i].label) correct += 1.0;
    }

    const double n = static_cast<double>(images_.size());
    EvalRecord rec;
    if (schedule.kind == MergeSchedule::Kind::threshold) {
        rec.policy = schedule.thresholds;
    } else {
        rec.fixed_ratio = schedule.ratio;
    }
    rec.objectives.neg_accuracy = -(correct / n);
    rec.objectives.flops = flops_sum / n;
    rec.objectives.comm_cost = tokens_sum / n;
    rec.snr_db = pipeline_.channel().snr_db;
    rec.n_samples = static_cast<int>(images_.size());
    rec.seed = seed_;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

EvalRecord Evaluator::evaluate(const MergePolicy& policy) const {
    return evaluate_schedule(MergeSchedule::from_policy(policy));
}

}  // namespace atm
