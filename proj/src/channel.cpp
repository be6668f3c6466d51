#include "atm/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "atm/rng.hpp"

namespace atm {

Codec::Codec(const CodecSpec& spec, int token_dim) : spec_(spec), token_dim_(token_dim) {
    if (token_dim < 1) throw std::invalid_argument("Codec: token_dim must be >= 1");
    if (spec.kind == CodecKind::identity) {
        packed_dim_ = token_dim;
        return;
    }
    if (spec.compression_ratio <= 0.0 || spec.compression_ratio > 1.0) {
        throw std::invalid_argument("Codec: compression_ratio must lie in (0,1]");
    }
    packed_dim_ = static_cast<int>(std::ceil(token_dim * spec.compression_ratio));
    Rng rng(derive_seed(spec.seed, "codec"));
    Matrix g(token_dim, packed_dim_);
    for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
    }
    // thin QR: orthonormal columns, Q^T Q = I
    Eigen::HouseholderQR<Matrix> qr(g);
    projection_ = qr.householderQ() * Matrix::Identity(token_dim, packed_dim_);
}

int Codec::symbol_count(int n_tokens) const {
    return (n_tokens * packed_dim_ + 1) / 2;
}

double noise_variance(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

SymbolVector encode(const Matrix& tokens, const Codec& codec) {
    const int n = static_cast<int>(tokens.rows());
    if (static_cast<int>(tokens.cols()) != codec.token_dim()) {
        throw std::invalid_argument("encode: token dim does not match codec");
    }
    Matrix packed;
    if (codec.spec().kind == CodecKind::identity) {
        packed = tokens;
    } else {
        packed = tokens * codec.projection();
    }
    // pair consecutive reals (row-major) into complex symbols
    const int n_reals = n * codec.packed_dim();
    const int q = codec.symbol_count(n);
    SymbolVector s;
    s.symbols = Matrix::Zero(q, 2);
    for (int i = 0; i < n_reals; ++i) {
        const double v = packed(i / codec.packed_dim(), i % codec.packed_dim());
        s.symbols(i / 2, i % 2) = v;
    }
    return s;
}

SymbolVector normalize_power(const SymbolVector& s) {
    const double mean_power = s.symbols.array().square().rowwise().sum().mean();
    if (mean_power <= 0.0) throw std::invalid_argument("normalize_power: all-zero symbol vector");
    SymbolVector out;
    const double scale = std::sqrt(mean_power);
    out.symbols = s.symbols / scale;
    out.scale = s.scale * scale;
    return out;
}

SymbolVector transmit(const SymbolVector& s, const ChannelConfig& cfg, std::uint64_t message_counter) {
    const double sigma2 = noise_variance(cfg.snr_db);
    if (sigma2 == 0.0) return s;
    SymbolVector out = s;
    Rng rng(derive_seed(cfg.seed, "awgn", message_counter));
    const double comp_std = std::sqrt(sigma2 / 2.0);
    for (int i = 0; i < out.symbols.rows(); ++i) {
        out.symbols(i, 0) += comp_std * rng.normal();
        out.symbols(i, 1) += comp_std * rng.normal();
    }
    return out;
}

Matrix decode(const SymbolVector& s, const Codec& codec, int expected_tokens) {
    if (expected_tokens < 1) throw std::invalid_argument("decode: expected_tokens must be >= 1");
    if (s.symbols.rows() != codec.symbol_count(expected_tokens)) {
        throw std::invalid_argument("decode: symbol count inconsistent with expected token count");
    }
    const int n_reals = expected_tokens * codec.packed_dim();
    Matrix packed(expected_tokens, codec.packed_dim());
    for (int i = 0; i < n_reals; ++i) {
        packed(i / codec.packed_dim(), i % codec.packed_dim()) = s.symbols(i / 2, i % 2) * s.scale;
    }
    if (codec.spec().kind == CodecKind::identity) return packed;
    return packed * codec.projection().transpose();
}

}  // namespace atm
