#include "atm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "atm/rng.hpp"

namespace atm {

namespace {

constexpr int kChannels = 3;
constexpr double kTextureAmplitude = 0.35;
constexpr double kPixelNoise = 0.04;

// Fixed palette on a colour ring. Classes share a hue in pairs (class 2j and
// 2j+1) so that colour alone cannot separate them; texture carries the rest.
Eigen::Vector3d class_colour(int label, int n_classes) {
    const int n_hues = std::max(2, (n_classes + 1) / 2);
    const int hue = (label / 2) % n_hues;
    const double theta = 2.0 * std::numbers::pi * hue / n_hues + 0.7;
    Eigen::Vector3d c;
    c << 0.5 + 0.30 * std::cos(theta), 0.5 + 0.30 * std::cos(theta - 2.1),
        0.5 + 0.30 * std::cos(theta + 2.1);
    return c;
}

// Smooth per-class texture field: random 4x4 control grid, bilinear upsample.
Matrix class_texture(std::uint64_t seed, int label, const Eigen::Vector3d& base, int height,
                     int width) {
    constexpr int kGrid = 4;
    Rng rng(derive_seed(seed, "texture", static_cast<std::uint64_t>(label)));
    Matrix control(kGrid * kGrid, kChannels);
    for (int i = 0; i < control.rows(); ++i) {
        for (int c = 0; c < kChannels; ++c) {
            control(i, c) = kTextureAmplitude * (2.0 * rng.uniform() - 1.0);
        }
    }
    Matrix tex(height * width, kChannels);
    for (int y = 0; y < height; ++y) {
        const double gy = static_cast<double>(y) / height * (kGrid - 1);
        const int y0 = std::min(static_cast<int>(gy), kGrid - 2);
        const double fy = gy - y0;
        for (int x = 0; x < width; ++x) {
            const double gx = static_cast<double>(x) / width * (kGrid - 1);
            const int x0 = std::min(static_cast<int>(gx), kGrid - 2);
            const double fx = gx - x0;
            for (int c = 0; c < kChannels; ++c) {
                const double v00 = control(y0 * kGrid + x0, c);
                const double v01 = control(y0 * kGrid + x0 + 1, c);
                const double v10 = control((y0 + 1) * kGrid + x0, c);
                const double v11 = control((y0 + 1) * kGrid + x0 + 1, c);
                const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11);
                tex(y * width + x, c) = std::clamp(base(c) + v, 0.0, 1.0);
            }
        }
    }
    return tex;
}

}  // namespace

std::vector<ToyImage> generate_dataset(std::uint64_t seed, int n_samples, int n_classes,
                                       double redundancy, int height, int width, int patch) {
    if (n_classes <= 1) throw std::invalid_argument("generate_dataset: n_classes must be > 1");
    if (redundancy < 0.0 || redundancy > 1.0) {
        throw std::invalid_argument("generate_dataset: redundancy must lie in [0,1]");
    }
    if (n_samples < n_classes) {
        throw std::invalid_argument("generate_dataset: n_samples must be >= n_classes");
    }
    if (height % patch != 0 || width % patch != 0) {
        throw std::invalid_argument("generate_dataset: image dims must be divisible by patch");
    }

    const int py = height / patch;
    const int px = width / patch;
    const int n_patches = py * px;
    const int n_constant = static_cast<int>(std::lround(redundancy * n_patches));

    std::vector<Matrix> textures;
    std::vector<Eigen::Vector3d> colours;
    textures.reserve(static_cast<std::size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) {
        colours.push_back(class_colour(k, n_classes));
        textures.push_back(class_texture(seed, k, colours.back(), height, width));
    }

    std::vector<ToyImage> images;
    images.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const int label = i % n_classes;  // round-robin keeps classes balanced to +-1
        Rng rng(derive_seed(seed, "image", static_cast<std::uint64_t>(i)));

        ToyImage img;
        img.height = height;
        img.width = width;
        img.label = label;
        img.pixels = textures[static_cast<std::size_t>(label)];
        if (redundancy < 1.0) {
            for (int p = 0; p < img.pixels.rows(); ++p) {
                for (int c = 0; c < kChannels; ++c) {
                    img.pixels(p, c) =
                        std::clamp(img.pixels(p, c) + kPixelNoise * rng.normal(), 0.0, 1.0);
                }
            }
        }

        // paint `n_constant` patch-aligned blocks with the exact class colour
        std::vector<int> order(static_cast<std::size_t>(n_patches));
        for (int p = 0; p < n_patches; ++p) order[static_cast<std::size_t>(p)] = p;
        for (int p = 0; p < n_constant; ++p) {
            const int j = p + rng.uniform_int(n_patches - p);
            std::swap(order[static_cast<std::size_t>(p)], order[static_cast<std::size_t>(j)]);
        }
        const Eigen::Vector3d& colour = colours[static_cast<std::size_t>(label)];
        for (int p = 0; p < n_constant; ++p) {
            const int block = order[static_cast<std::size_t>(p)];
            const int by = (block / px) * patch;
            const int bx = (block % px) * patch;
            for (int y = by; y < by + patch; ++y) {
                for (int x = bx; x < bx + patch; ++x) {
                    for (int c = 0; c < kChannels; ++c) img.pixels(y * width + x, c) = colour(c);
                }
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

Vector patch_vector(const ToyImage& img, int patch_index, int patch) {
    const int px = img.width / patch;
    const int by = (patch_index / px) * patch;
    const int bx = (patch_index % px) * patch;
    Vector out(patch * patch * kChannels);
    int idx = 0;
    for (int y = by; y < by + patch; ++y) {
        for (int x = bx; x < bx + patch; ++x) {
            for (int c = 0; c < kChannels; ++c) out(idx++) = img.at(y, x, c);
        }
    }
    return out;
}

SplitManifest make_splits(int n_calibration, int n_evaluation, int n_adversary_fit,
                          int n_adversary_holdout) {
    if (n_calibration <= 0 || n_evaluation <= 0 || n_adversary_fit <= 0 || n_adversary_holdout <= 0) {
        throw std::invalid_argument("make_splits: all split sizes must be positive");
    }
    SplitManifest m;
    int next = 0;
    auto range = [&next](std::vector<int>& out, int n) {
        out.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = next++;
    };
    range(m.calibration, n_calibration);
    range(m.evaluation, n_evaluation);
    range(m.adversary_fit, n_adversary_fit);
    range(m.adversary_holdout, n_adversary_holdout);
    return m;
}

std::string split_manifest_to_json(const SplitManifest& splits) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["calibration"] = splits.calibration;
    j["evaluation"] = splits.evaluation;
    j["adversary_fit"] = splits.adversary_fit;
    j["adversary_holdout"] = splits.adversary_holdout;
    return j.dump(2);
}

SplitManifest split_manifest_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != 1) {
        throw std::runtime_error("split manifest: unsupported schema_version");
    }
    SplitManifest m;
    j.at("calibration").get_to(m.calibration);
    j.at("evaluation").get_to(m.evaluation);
    j.at("adversary_fit").get_to(m.adversary_fit);
    j.at("adversary_holdout").get_to(m.adversary_holdout);
    return m;
}

namespace {

constexpr char kDatasetMagic[8] = {'A', 'T', 'M', 'D', 'S', 'E', 'T', '1'};

void write_i32(std::ofstream& os, std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::int32_t read_i32(std::ifstream& is) {
    std::int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

void save_dataset(const std::string& path, const std::vector<ToyImage>& images) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
    os.write(kDatasetMagic, 8);
    write_i32(os, static_cast<std::int32_t>(images.size()));
    for (const ToyImage& img : images) {
        write_i32(os, img.height);
        write_i32(os, img.width);
        write_i32(os, img.label);
        os.write(reinterpret_cast<const char*>(img.pixels.data()),
                 static_cast<std::streamsize>(sizeof(double) * img.pixels.size()));
    }
    if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

std::vector<ToyImage> load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kDatasetMagic, 8) != 0) {
        throw std::runtime_error("load_dataset: bad magic in " + path);
    }
    const int n = read_i32(is);
    std::vector<ToyImage> images(static_cast<std::size_t>(n));
    for (ToyImage& img : images) {
        img.height = read_i32(is);
        img.width = read_i32(is);
        img.label = read_i32(is);
        img.pixels.resize(img.height * img.width, kChannels);
        is.read(reinterpret_cast<char*>(img.pixels.data()),
                static_cast<std::streamsize>(sizeof(double) * img.pixels.size()));
    }
    if (!is) throw std::runtime_error("load_dataset: truncated file " + path);
    return images;
}

}  // namespace atm
