#include "atm/encoder.hpp"

#include <cmath>
#include <numbers>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "atm/rng.hpp"

namespace atm {

namespace {

constexpr double kLayerNormEps = 1e-5;

Matrix gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    }
    return m;
}

Matrix layer_norm(const Matrix& x, const Vector& scale, const Vector& offset) {
    Matrix out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        out.row(i) =
            (((x.row(i).array() - mean) / std::sqrt(var + kLayerNormEps)) * scale.transpose().array() +
             offset.transpose().array())
                .matrix();
    }
    return out;
}

Matrix softmax_rows(Matrix scores) {
    for (int i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - m).exp().matrix();
        scores.row(i) /= scores.row(i).sum();
    }
    return scores;
}

Matrix gelu(const Matrix& x) {
    return x.unaryExpr(
        [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); });
}

}  // namespace

EncoderWeights make_encoder_weights(const EncoderConfig& cfg) {
    if (cfg.image % cfg.patch != 0) {
        throw std::invalid_argument("make_encoder_weights: image must be divisible by patch");
    }
    EncoderWeights w;
    w.cfg = cfg;
    const int d = cfg.dim;
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const int patch_dim = cfg.patch * cfg.patch * cfg.channels;

    Rng rng(derive_seed(cfg.seed, "encoder-weights"));
    w.patch_projection = gaussian_matrix(rng, patch_dim, d, 1.0 / std::sqrt(static_cast<double>(patch_dim)));
    w.class_token = gaussian_matrix(rng, d, 1, 0.5).col(0);
    w.pos_emb = gaussian_matrix(rng, cfg.n_tokens(), d, 1.0);
    w.pos_emb *= cfg.pos_emb_scale;

    w.layers.resize(static_cast<std::size_t>(cfg.layers));
    for (LayerWeights& lw : w.layers) {
        lw.wq = gaussian_matrix(rng, d, d, proj_scale);
        lw.wk = gaussian_matrix(rng, d, d, proj_scale);
        lw.wv = gaussian_matrix(rng, d, d, proj_scale);
        lw.wo = gaussian_matrix(rng, d, d, proj_scale);
        lw.w1 = gaussian_matrix(rng, d, cfg.mlp_ratio * d, proj_scale);
        lw.w2 = gaussian_matrix(rng, cfg.mlp_ratio * d, d,
                                1.0 / std::sqrt(static_cast<double>(cfg.mlp_ratio * d)));
        lw.b1 = Vector::Zero(cfg.mlp_ratio * d);
        lw.b2 = Vector::Zero(d);
        lw.ln1_scale = Vector::Ones(d);
        lw.ln1_offset = Vector::Zero(d);
        lw.ln2_scale = Vector::Ones(d);
        lw.ln2_offset = Vector::Zero(d);
    }
    return w;
}

TokenMatrix patch_embed(const ToyImage& img, const EncoderWeights& w) {
    const EncoderConfig& cfg = w.cfg;
    if (img.height != cfg.image || img.width != cfg.image) {
        throw std::invalid_argument("patch_embed: image dims do not match encoder config");
    }
    TokenMatrix z;
    z.layer_index = 0;
    z.tokens.resize(cfg.n_tokens(), cfg.dim);
    z.source_counts = IntVector::Ones(cfg.n_tokens());
    z.tokens.row(0) = w.class_token.transpose();
    for (int p = 0; p < cfg.n_patches(); ++p) {
        z.tokens.row(p + 1) = (patch_vector(img, p, cfg.patch).transpose() * w.patch_projection);
    }
    z.tokens += w.pos_emb;
    return z;
}

MergeHook identity_merge_hook() {
    return [](const TokenMatrix& hidden, const Matrix&, int) {
        LayerMergeResult r;
        r.tokens = hidden;
        return r;
    };
}

ForwardResult forward_tokens(TokenMatrix z, const EncoderWeights& w, const MergeHook& merge) {
    const EncoderConfig& cfg = w.cfg;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    ForwardResult result;
    result.token_counts.reserve(static_cast<std::size_t>(cfg.layers));

    for (int layer = 1; layer <= cfg.layers; ++layer) {
        const LayerWeights& lw = w.layers[static_cast<std::size_t>(layer - 1)];

        // values for the merge decision come from the raw layer input
        const Matrix values = z.tokens * lw.wv;

        const Matrix xn = layer_norm(z.tokens, lw.ln1_scale, lw.ln1_offset);
        const Matrix q = xn * lw.wq;
        const Matrix k = xn * lw.wk;
        const Matrix v = xn * lw.wv;
        const Matrix attn = softmax_rows(q * k.transpose() * attn_scale);
        TokenMatrix hidden;
        hidden.tokens = z.tokens + (attn * v) * lw.wo;
        hidden.source_counts = z.source_counts;
        hidden.layer_index = z.layer_index;

        LayerMergeResult merged = merge(hidden, values, layer);
        merged.tokens.layer_index = layer;

        const Matrix hn = layer_norm(merged.tokens.tokens, lw.ln2_scale, lw.ln2_offset);
        merged.tokens.tokens +=
            (gelu((hn * lw.w1).rowwise() + lw.b1.transpose()) * lw.w2).rowwise() + lw.b2.transpose();

        z = std::move(merged.tokens);
        result.token_counts.push_back(z.count());
    }
    result.tokens = std::move(z);
    return result;
}

ForwardResult forward(const ToyImage& img, const EncoderWeights& w, const MergeHook& merge) {
    return forward_tokens(patch_embed(img, w), w, merge);
}

Vector pooled_feature(const TokenMatrix& z) {
    const int n = z.count();
    if (n < 2) throw std::invalid_argument("pooled_feature: need at least one patch token");
    Vector acc = Vector::Zero(z.dim());
    double total = 0.0;
    for (int i = 1; i < n; ++i) {
        const double wgt = static_cast<double>(z.source_counts(i));
        acc += wgt * z.tokens.row(i).transpose();
        total += wgt;
    }
    return acc / total;
}

PrototypeHead calibrate_head(std::span<const ToyImage> calibration, const EncoderWeights& w) {
    if (calibration.empty()) throw std::invalid_argument("calibrate_head: empty calibration split");
    int n_classes = 0;
    for (const ToyImage& img : calibration) n_classes = std::max(n_classes, img.label + 1);

    PrototypeHead head;
    head.calibration_size = static_cast<int>(calibration.size());
    head.class_prototypes = Matrix::Zero(n_classes, w.cfg.dim);
    Vector counts = Vector::Zero(n_classes);
    const MergeHook identity = identity_merge_hook();
    for (const ToyImage& img : calibration) {
        const ForwardResult r = forward(img, w, identity);
        head.class_prototypes.row(img.label) += pooled_feature(r.tokens).transpose();
        counts(img.label) += 1.0;
    }
    for (int k = 0; k < n_classes; ++k) {
        if (counts(k) == 0.0) throw std::invalid_argument("calibrate_head: class without samples");
        head.class_prototypes.row(k) /= counts(k);
    }
    return head;
}

int classify(const TokenMatrix& z, const PrototypeHead& head) {
    const Vector feat = pooled_feature(z);
    int best = 0;
    double best_sim = -2.0;
    for (int k = 0; k < head.class_prototypes.rows(); ++k) {
        const double s = cosine_similarity(feat, head.class_prototypes.row(k).transpose());
        if (s > best_sim) {  // strict: ties keep the lowest class index
            best = k;
            best_sim = s;
        }
    }
    return best;
}

namespace {

constexpr char kWeightsMagic[8] = {'A', 'T', 'M', 'E', 'N', 'C', 'W', '1'};

void write_matrix(std::ofstream& os, const Matrix& m) {
    const std::int32_t rows = static_cast<std::int32_t>(m.rows());
    const std::int32_t cols = static_cast<std::int32_t>(m.cols());
    os.write(reinterpret_cast<const char*>(&rows), 4);
    os.write(reinterpret_cast<const char*>(&cols), 4);
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::ifstream& is) {
    std::int32_t rows = 0, cols = 0;
    is.read(reinterpret_cast<char*>(&rows), 4);
    is.read(reinterpret_cast<char*>(&cols), 4);
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    return m;
}

}  // namespace

void save_encoder_weights(const std::string& path, const EncoderWeights& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_encoder_weights: cannot open " + path);
    os.write(kWeightsMagic, 8);
    const std::int32_t fields[6] = {w.cfg.layers, w.cfg.dim, w.cfg.patch,
                                    w.cfg.image,  w.cfg.channels, w.cfg.mlp_ratio};
    os.write(reinterpret_cast<const char*>(fields), sizeof(fields));
    os.write(reinterpret_cast<const char*>(&w.cfg.pos_emb_scale), sizeof(double));
    os.write(reinterpret_cast<const char*>(&w.cfg.seed), sizeof(std::uint64_t));
    write_matrix(os, w.patch_projection);
    write_matrix(os, w.pos_emb);
    write_matrix(os, w.class_token);
    for (const LayerWeights& lw : w.layers) {
        write_matrix(os, lw.wq);
        write_matrix(os, lw.wk);
        write_matrix(os, lw.wv);
        write_matrix(os, lw.wo);
        write_matrix(os, lw.w1);
        write_matrix(os, lw.w2);
        write_matrix(os, lw.b1);
        write_matrix(os, lw.b2);
        write_matrix(os, lw.ln1_scale);
        write_matrix(os, lw.ln1_offset);
        write_matrix(os, lw.ln2_scale);
        write_matrix(os, lw.ln2_offset);
    }
    if (!os) throw std::runtime_error("save_encoder_weights: write failed for " + path);
}

EncoderWeights load_encoder_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_encoder_weights: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kWeightsMagic, 8) != 0) {
        throw std::runtime_error("load_encoder_weights: bad magic in " + path);
    }
    EncoderWeights w;
    std::int32_t fields[6];
    is.read(reinterpret_cast<char*>(fields), sizeof(fields));
    w.cfg.layers = fields[0];
    w.cfg.dim = fields[1];
    w.cfg.patch = fields[2];
    w.cfg.image = fields[3];
    w.cfg.channels = fields[4];
    w.cfg.mlp_ratio = fields[5];
    is.read(reinterpret_cast<char*>(&w.cfg.pos_emb_scale), sizeof(double));
    is.read(reinterpret_cast<char*>(&w.cfg.seed), sizeof(std::uint64_t));
    w.patch_projection = read_matrix(is);
    w.pos_emb = read_matrix(is);
    w.class_token = read_matrix(is).col(0);
    w.layers.resize(static_cast<std::size_t>(w.cfg.layers));
    for (LayerWeights& lw : w.layers) {
        lw.wq = read_matrix(is);
        lw.wk = read_matrix(is);
        lw.wv = read_matrix(is);
        lw.wo = read_matrix(is);
        lw.w1 = read_matrix(is);
        lw.w2 = read_matrix(is);
        lw.b1 = read_matrix(is).col(0);
        lw.b2 = read_matrix(is).col(0);
        lw.ln1_scale = read_matrix(is).col(0);
        lw.ln1_offset = read_matrix(is).col(0);
        lw.ln2_scale = read_matrix(is).col(0);
        lw.ln2_offset = read_matrix(is).col(0);
    }
    if (!is) throw std::runtime_error("load_encoder_weights: truncated file " + path);
    return w;
}

}  // namespace atm
