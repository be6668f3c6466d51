#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "atm/dataset.hpp"
#include "atm/merging.hpp"
#include "atm/types.hpp"

namespace atm {

struct EncoderConfig {
    int layers = 6;
    int dim = 32;
    int patch = 8;
    int image = 32;     // square H = W
    int channels = 3;
    int mlp_ratio = 4;
    double pos_emb_scale = 0.0;  // kept at 0 so duplicate patches embed to duplicate tokens
    std::uint64_t seed = 0;

    int n_patches() const { return (image / patch) * (image / patch); }
    int n_tokens() const { return n_patches() + 1; }  // +1 class token at row 0
};

struct LayerWeights {
    Matrix wq, wk, wv, wo;          // d x d
    Matrix w1, w2;                  // d x 4d, 4d x d
    Vector b1, b2;
    Vector ln1_scale, ln1_offset;   // pre-attention layer norm
    Vector ln2_scale, ln2_offset;   // pre-MLP layer norm
};

// Frozen encoder weights, reproducible from the config seed. Nothing here is
// ever trained or mutated.
struct EncoderWeights {
    EncoderConfig cfg;
    std::vector<LayerWeights> layers;
    Matrix patch_projection;  // (P*P*C) x d
    Matrix pos_emb;           // n_tokens x d
    Vector class_token;       // d
};

EncoderWeights make_encoder_weights(const EncoderConfig& cfg);

void save_encoder_weights(const std::string& path, const EncoderWeights& w);
EncoderWeights load_encoder_weights(const std::string& path);

// Z_0: class token at row 0, then one embedded patch per grid cell, plus the
// positional table.
TokenMatrix patch_embed(const ToyImage& img, const EncoderWeights& w);

// Per-layer merge hook. `hidden` is the post-attention residual stream,
// `values` the layer's value projection of the layer input (rows aligned with
// `hidden`). Identity behaviour = return the input unchanged.
using MergeHook =
    std::function<LayerMergeResult(const TokenMatrix& hidden, const Matrix& values, int layer)>;

MergeHook identity_merge_hook();

struct ForwardResult {
    TokenMatrix tokens;             // Z_L
    std::vector<int> token_counts;  // [N_1 .. N_L]
};

// Pre-LN block per layer: LN -> self-attention -> residual -> merge hook ->
// LN -> MLP -> residual. The hook sits after the attention output projection
// and before the feed-forward, and is the only place token counts change.
ForwardResult forward(const ToyImage& img, const EncoderWeights& w, const MergeHook& merge);
ForwardResult forward_tokens(TokenMatrix z, const EncoderWeights& w, const MergeHook& merge);

// Source-count-weighted mean over patch tokens (class token excluded), so a
// merged token contributes proportionally to how many originals it absorbed.
Vector pooled_feature(const TokenMatrix& z);

// Nearest-class-mean head calibrated on a clean split: identity policy, no
// channel. Stands in for a trained task head without any training loop.
struct PrototypeHead {
    Matrix class_prototypes;  // K x d
    int calibration_size = 0;
};

PrototypeHead calibrate_head(std::span<const ToyImage> calibration, const EncoderWeights& w);

// Nearest prototype by cosine similarity; ties resolve to the lowest class.
int classify(const TokenMatrix& z, const PrototypeHead& head);

}  // namespace atm
