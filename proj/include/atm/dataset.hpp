#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atm/types.hpp"

namespace atm {

// Synthetic labelled image. Pixels are stored row-major by pixel index
// (y * width + x) with one column per colour channel, values in [0, 1].
struct ToyImage {
    Matrix pixels;  // (H*W) x C
    int height = 0;
    int width = 0;
    int label = 0;

    double at(int y, int x, int c) const { return pixels(y * width + x, c); }
};

// Class-balanced synthetic dataset. Each image is a class-specific smooth
// texture with `redundancy` of its patch grid painted as constant class-colour
// blocks; high redundancy yields many exactly-duplicate patch tokens.
// Classes share base colours in pairs and differ by texture, so aggressive
// token merging genuinely costs accuracy.
std::vector<ToyImage> generate_dataset(std::uint64_t seed, int n_samples, int n_classes,
                                       double redundancy, int height = 32, int width = 32,
                                       int patch = 8);

// Flattened patch pixels in (py, px, channel) order; shared by the patch
// embedding and by tests that compare raw patches.
Vector patch_vector(const ToyImage& img, int patch_index, int patch);

// Index lists for the four data roles. Built as consecutive ranges, so the
// sets are disjoint by construction; serialization keeps the adversary
// fit/holdout separation auditable.
struct SplitManifest {
    std::vector<int> calibration;
    std::vector<int> evaluation;
    std::vector<int> adversary_fit;
    std::vector<int> adversary_holdout;
};

SplitManifest make_splits(int n_calibration, int n_evaluation, int n_adversary_fit,
                          int n_adversary_holdout);

std::string split_manifest_to_json(const SplitManifest& splits);
SplitManifest split_manifest_from_json(const std::string& text);

// Versioned little-endian binary container for datasets (format documented in
// docs/formats.md).
void save_dataset(const std::string& path, const std::vector<ToyImage>& images);
std::vector<ToyImage> load_dataset(const std::string& path);

}  // namespace atm
