#pragma once

#include <cstdint>
#include <limits>

#include "atm/types.hpp"

namespace atm {

enum class CodecKind { identity, linear };

struct CodecSpec {
    CodecKind kind = CodecKind::identity;
    std::uint64_t seed = 0;
    double compression_ratio = 1.0;  // linear codec only, in (0, 1]
};

// Token codec: identity flattens tokens straight into complex symbols; the
// linear codec first projects each token through a fixed random orthonormal
// basis d -> d' = ceil(d * ratio). Stands in for a learned JSCC codec behind
// the same sealed interface.
class Codec {
public:
    Codec(const CodecSpec& spec, int token_dim);

    const CodecSpec& spec() const { return spec_; }
    int token_dim() const { return token_dim_; }
    int packed_dim() const { return packed_dim_; }  // reals per token entering the channel
    const Matrix& projection() const { return projection_; }  // d x d', orthonormal columns

    int symbol_count(int n_tokens) const;  // q = ceil(n_tokens * packed_dim / 2)

private:
    CodecSpec spec_;
    int token_dim_;
    int packed_dim_;
    Matrix projection_;
};

struct ChannelConfig {
    double snr_db = std::numeric_limits<double>::infinity();  // +inf = noiseless
    std::uint64_t seed = 0;
};

// sigma^2 = 10^(-snr_db / 10); the +inf sentinel maps to 0.
double noise_variance(double snr_db);

// q complex symbols stored as (re, im) pairs; `scale` is recorded by power
// normalization so the decoder can undo it.
struct SymbolVector {
    Matrix symbols;     // q x 2
    double scale = 1.0;
};

SymbolVector encode(const Matrix& tokens, const Codec& codec);

// Rescales so mean |s_i|^2 = 1; errors out on all-zero input.
SymbolVector normalize_power(const SymbolVector& s);

// Adds circularly-symmetric complex Gaussian noise, variance sigma^2 per
// symbol (sigma^2/2 per real component). The noise stream is derived from
// (seed, message_counter), so parallel transmissions with distinct counters
// are reproducible regardless of scheduling.
SymbolVector transmit(const SymbolVector& s, const ChannelConfig& cfg, std::uint64_t message_counter);

// Undoes normalization and unpacks back to n_tokens x d (linear codec
// back-projects through the transpose of its orthonormal basis). The token
// count arrives out-of-band, as framing metadata.
Matrix decode(const SymbolVector& s, const Codec& codec, int expected_tokens);

}  // namespace atm
