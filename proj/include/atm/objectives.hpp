#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "atm/channel.hpp"
#include "atm/encoder.hpp"
#include "atm/types.hpp"

namespace atm {

// Per-layer similarity thresholds, the decision variable of the whole system.
// Bounds are enforced on construction; out-of-range values are an error, not
// a clamp.
class MergePolicy {
public:
    explicit MergePolicy(std::vector<double> thresholds);

    int size() const { return static_cast<int>(thresholds_.size()); }
    double operator[](int i) const { return thresholds_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& thresholds() const { return thresholds_; }

    static constexpr double kLow = 0.5;
    static constexpr double kHigh = 1.0;

private:
    std::vector<double> thresholds_;
};

MergePolicy constant_threshold_policy(double tau0, int layers);

// The minimized triple (-A, F, C). FLOPs are raw operation counts; reporting
// surfaces convert to GFLOPs.
struct ObjectiveVector {
    double neg_accuracy = 0.0;
    double flops = 0.0;
    double comm_cost = 0.0;

    Vector3 to_vector() const { return Vector3(neg_accuracy, flops, comm_cost); }
};

// One observation of the expensive black box. `policy` is empty (and
// fixed_ratio >= 0) for fixed-ratio baseline rows. wall_time is measured
// in-process; persisted rows zero it so reruns stay byte-identical.
struct EvalRecord {
    std::vector<double> policy;
    int fixed_ratio = -1;
    ObjectiveVector objectives;
    double snr_db = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
};

// Either a threshold policy applied per layer, or the fixed-ratio ToMe-style
// baseline merging exactly r pairs at every layer.
struct MergeSchedule {
    enum class Kind { threshold, fixed_ratio };
    Kind kind = Kind::threshold;
    std::vector<double> thresholds;
    int ratio = 0;

    static MergeSchedule from_policy(const MergePolicy& p);
    static MergeSchedule uniform_ratio(int r, int layers);
};

// Closed-form operation count for one forward pass. token_counts holds
// [N_0 .. N_L]: layer l's attention runs on N_{l-1} tokens, its MLP on N_l
// (merging sits between them). Attention projections and score/value matmuls
// count m*k*n each; MLP matmuls count multiply-accumulates as 2 ops:
//   sum_l [ 4 N_{l-1} d^2 + 2 N_{l-1}^2 d + 2 * mlp_ratio * N_l * d^2 * 2 ].
double flops_forward(const std::vector<int>& token_counts, int dim, int mlp_ratio);

// forward -> encode -> normalize -> transmit -> decode for one image; the
// shared transmitter/receiver context of the evaluator and the privacy probe.
class Pipeline {
public:
    Pipeline(const EncoderWeights& weights, Codec codec, ChannelConfig channel);

    struct Output {
        TokenMatrix received;           // decoded tokens, source counts re-attached
        std::vector<int> token_counts;  // [N_1 .. N_L]
    };

    Output run(const ToyImage& img, const MergeSchedule& schedule, std::uint64_t message_counter) const;
    Output run_tokens(const TokenMatrix& z0, const MergeSchedule& schedule,
                      std::uint64_t message_counter) const;

    const EncoderWeights& weights() const { return weights_; }
    const Codec& codec() const { return codec_; }
    const ChannelConfig& channel() const { return channel_; }
    MergeHook make_hook(const MergeSchedule& schedule) const;

private:
    const EncoderWeights& weights_;
    Codec codec_;
    ChannelConfig channel_;
};

// evaluate_policy closed over a fixed evaluation subset. Per-image channel
// noise uses the image's subset position as message counter, so the result is
// independent of evaluation order.
class Evaluator {
public:
    Evaluator(const EncoderWeights& weights, const PrototypeHead& head,
              std::span<const ToyImage> images, Codec codec, ChannelConfig channel,
              std::uint64_t seed);

    EvalRecord evaluate(const MergePolicy& policy) const;
    EvalRecord evaluate_schedule(const MergeSchedule& schedule) const;

    int n_tokens() const { return weights_.cfg.n_tokens(); }
    int n_images() const { return static_cast<int>(images_.size()); }
    int layers() const { return weights_.cfg.layers; }
    const Pipeline& pipeline() const { return pipeline_; }
    const PrototypeHead& head() const { return head_; }

private:
    const EncoderWeights& weights_;
    const PrototypeHead& head_;
    std::span<const ToyImage> images_;
    Pipeline pipeline_;
    std::vector<TokenMatrix> embedded_;  // cached Z_0 per image
    std::uint64_t seed_;
};

}  // namespace atm
