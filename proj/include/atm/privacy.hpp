#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "atm/dataset.hpp"
#include "atm/objectives.hpp"
#include "atm/types.hpp"

namespace atm {

// Token->image pairs collected by an adversary with query access to the
// transmitter. Decoded token sequences are zero-padded to the adversary-set
// maximum length and flattened; a source-count channel is appended, with zero
// counts flagging padding rows.
struct SurrogateSet {
    Matrix features;  // M x (pad_length * d + pad_length)
    Matrix targets;   // M x (H * W * C)
    int pad_length = 0;
    int token_dim = 0;
    int height = 0;
    int width = 0;
};

SurrogateSet build_surrogate(const MergePolicy& policy, std::span<const ToyImage> adversary_set,
                             const Pipeline& pipeline, std::uint64_t seed);

// Ridge-regularized linear inversion map fitted on the surrogate set; the
// deterministic stand-in for a trained reconstruction network (a strictly
// weaker adversary, so leakage readings are lower bounds).
struct InversionOracle {
    Matrix weights;  // (feature_dim + 1) x pixel_dim, last row is the bias
    double lambda = 0.0;
    int pad_length = 0;
    int token_dim = 0;
    int height = 0;
    int width = 0;
};

InversionOracle fit_inversion(const SurrogateSet& surrogate, double lambda);

// Reconstruction for one feature row, clamped into [0,1].
ToyImage invert(const InversionOracle& oracle, const Vector& features);

// Mean local SSIM over 8x8 uniform windows with stride 4, C1 = 0.01^2,
// C2 = 0.03^2 on unit dynamic range, averaged over channels.
double ssim(const ToyImage& a, const ToyImage& b);

struct LeakageReport {
    std::vector<double> policy;
    double mean_ssim = 0.0;
    double mean_comm_cost = 0.0;
    int n_eval = 0;
};

// Reconstructs each held-out image through the oracle and reports mean SSIM
// against the originals plus the mean transmitted token count.
LeakageReport leakage_eval(const MergePolicy& policy, const InversionOracle& oracle,
                           std::span<const ToyImage> holdout, const Pipeline& pipeline,
                           std::uint64_t seed);

}  // namespace atm
