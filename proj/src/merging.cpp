#include "atm/merging.hpp"

#include <algorithm>
#include <stdexcept>

#include "atm/rng.hpp"

namespace atm {

namespace {

constexpr double kMergeEps = 1e-6;   // stabilizer in the norm-weighted denominator
constexpr double kCosineEps = 1e-12; // guards the cosine denominator for zero vectors

std::vector<char> protected_mask(int n, const std::vector<int>& protected_indices) {
    std::vector<char> mask(static_cast<std::size_t>(n), 0);
    for (int p : protected_indices) {
        if (p >= 0 && p < n) mask[static_cast<std::size_t>(p)] = 1;
    }
    return mask;
}

struct CandidatePair {
    int source;
    int dest;
    double similarity;
};

// Best destination per source under the alternating split. Ties in the argmax
// go to the lowest destination index.
std::vector<CandidatePair> match_sources(const Matrix& values, const IndexSplit& split) {
    std::vector<CandidatePair> pairs;
    pairs.reserve(split.sources.size());
    for (int a : split.sources) {
        int best = -1;
        double best_sim = 0.0;
        for (int b : split.destinations) {
            const double s = cosine_similarity(values.row(a).transpose(), values.row(b).transpose());
            if (best < 0 || s > best_sim) {
                best = b;
                best_sim = s;
            }
        }
        if (best >= 0) pairs.push_back({a, best, best_sim});
    }
    return pairs;
}

// Applies an accepted set of source->destination merges to the token matrix.
LayerMergeResult apply_merges(const TokenMatrix& z, std::vector<CandidatePair> accepted) {
    const int n = z.count();
    LayerMergeResult result;
    result.n_merged = static_cast<int>(accepted.size());

    std::vector<std::vector<int>> merge_sets(static_cast<std::size_t>(n));
    std::vector<char> is_source(static_cast<std::size_t>(n), 0);
    std::sort(accepted.begin(), accepted.end(),
              [](const CandidatePair& a, const CandidatePair& b) { return a.source < b.source; });
    for (const CandidatePair& p : accepted) {
        merge_sets[static_cast<std::size_t>(p.dest)].push_back(p.source);
        is_source[static_cast<std::size_t>(p.source)] = 1;
        result.assignments.push_back({p.source, p.dest, p.similarity});
    }

    const int n_out = n - result.n_merged;
    result.tokens.tokens.resize(n_out, z.dim());
    result.tokens.source_counts.resize(n_out);
    result.tokens.layer_index = z.layer_index;

    int row = 0;
    for (int i = 0; i < n; ++i) {
        if (is_source[static_cast<std::size_t>(i)]) continue;
        const std::vector<int>& sources = merge_sets[static_cast<std::size_t>(i)];
        if (sources.empty()) {
            result.tokens.tokens.row(row) = z.tokens.row(i);
            result.tokens.source_counts(row) = z.source_counts(i);
        } else {
            double w = z.tokens.row(i).norm();
            Vector acc = w * z.tokens.row(i).transpose();
            int count = z.source_counts(i);
            for (int s : sources) {
                const double ws = z.tokens.row(s).norm();
                acc += ws * z.tokens.row(s).transpose();
                w += ws;
                count += z.source_counts(s);
            }
            result.tokens.tokens.row(row) = acc.transpose() / (w + kMergeEps);
            result.tokens.source_counts(row) = count;
        }
        ++row;
    }
    return result;
}

}  // namespace

IndexSplit split_indices(int n_tokens, const std::vector<int>& protected_indices) {
    if (n_tokens < 1) throw std::invalid_argument("split_indices: n_tokens must be >= 1");
    IndexSplit split;
    const std::vector<char> mask = protected_mask(n_tokens, protected_indices);
    bool to_source = true;
    for (int i = 0; i < n_tokens; ++i) {
        if (mask[static_cast<std::size_t>(i)]) continue;
        (to_source ? split.sources : split.destinations).push_back(i);
        to_source = !to_source;
    }
    return split;
}

double cosine_similarity(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
    if (u.size() == v.size() && (u.array() == v.array()).all()) {
        return u.isZero(0.0) ? 0.0 : 1.0;
    }
    const double denom = u.norm() * v.norm() + kCosineEps;
    return std::clamp(u.dot(v) / denom, -1.0, 1.0);
}

LayerMergeResult merge_layer(const TokenMatrix& z, const Matrix& value_matrix, double tau,
                             const std::vector<int>& protected_indices) {
    if (value_matrix.rows() != z.tokens.rows()) {
        throw std::invalid_argument("merge_layer: value matrix row count mismatch");
    }
    const IndexSplit split = split_indices(z.count(), protected_indices);
    LayerMergeResult result;
    if (split.sources.empty() || split.destinations.empty()) {
        result.tokens = z;
        return result;
    }
    std::vector<CandidatePair> accepted;
    for (const CandidatePair& p : match_sources(value_matrix, split)) {
        if (p.similarity >= tau) accepted.push_back(p);
    }
    return apply_merges(z, std::move(accepted));
}

LayerMergeResult merge_layer_fixed_ratio(const TokenMatrix& z, const Matrix& value_matrix, int r,
                                          const std::vector<int>& protected_indices) {
    if (value_matrix.rows() != z.tokens.rows()) {
        throw std::invalid_argument("merge_layer_fixed_ratio: value matrix row count mismatch");
    }
    if (r < 0) throw std::invalid_argument("merge_layer_fixed_ratio: r must be >= 0");
    const IndexSplit split = split_indices(z.count(), protected_indices);
    LayerMergeResult result;
    if (split.sources.empty() || split.destinations.empty() || r == 0) {
        result.tokens = z;
        return result;
    }
    std::vector<CandidatePair> pairs = match_sources(value_matrix, split);
    std::stable_sort(pairs.begin(), pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.source < b.source;
    });
    const int take = std::min<int>(r, static_cast<int>(pairs.size()));
    pairs.resize(static_cast<std::size_t>(take));
    return apply_merges(z, std::move(pairs));
}

TokenMatrix random_drop(const TokenMatrix& z, int keep, std::uint64_t seed,
                        const std::vector<int>& protected_indices) {
    const int n = z.count();
    if (keep < 1 || keep > n) throw std::invalid_argument("random_drop: keep out of range");
    const std::vector<char> mask = protected_mask(n, protected_indices);
    std::vector<int> free_indices;
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) free_indices.push_back(i);
    }
    const int n_protected = n - static_cast<int>(free_indices.size());
    const int n_sample = std::max(0, keep - n_protected);

    // partial Fisher-Yates, then restore positional order
    Rng rng(seed);
    for (int i = 0; i < n_sample; ++i) {
        const int j = i + rng.uniform_int(static_cast<int>(free_indices.size()) - i);
        std::swap(free_indices[static_cast<std::size_t>(i)], free_indices[static_cast<std::size_t>(j)]);
    }
    std::vector<char> kept = mask;
    for (int i = 0; i < n_sample; ++i) kept[static_cast<std::size_t>(free_indices[static_cast<std::size_t>(i)])] = 1;

    int n_out = 0;
    for (char k : kept) n_out += k;
    TokenMatrix out;
    out.tokens.resize(n_out, z.dim());
    out.source_counts.resize(n_out);
    out.layer_index = z.layer_index;
    int row = 0;
    for (int i = 0; i < n; ++i) {
        if (!kept[static_cast<std::size_t>(i)]) continue;
        out.tokens.row(row) = z.tokens.row(i);
        out.source_counts(row) = z.source_counts(i);
        ++row;
    }
    return out;
}

}  // namespace atm
