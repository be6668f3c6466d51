#pragma once

#include <cstdint>
#include <vector>

#include "atm/types.hpp"

namespace atm {

// One accepted merge: source row folds into destination row. Similarity is
// the cosine similarity of the two value vectors that triggered the merge.
struct MergeAssignment {
    int source_index = -1;
    int dest_index = -1;
    double similarity = 0.0;
};

struct LayerMergeResult {
    TokenMatrix tokens;
    int n_merged = 0;
    std::vector<MergeAssignment> assignments;
};

struct IndexSplit {
    std::vector<int> sources;       // candidate sources A
    std::vector<int> destinations;  // candidate destinations B
};

// Alternating source/destination split over the non-protected indices in
// positional order: 1st -> A, 2nd -> B, 3rd -> A, ... Protected indices
// (the class token) land in neither set.
IndexSplit split_indices(int n_tokens, const std::vector<int>& protected_indices);

// <u,v> / (|u||v| + eps). Bitwise-equal vectors compare as exactly 1 so that
// duplicate tokens still merge at tau = 1; a pair of zero vectors yields 0.
double cosine_similarity(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v);

// Threshold merge: each source a finds its best destination b* by value-vector
// cosine similarity (ties -> lowest destination index) and merges iff
// s_{ab*} >= tau. Receiving destinations are replaced by the norm-weighted
// average of themselves and their sources; everything else passes through in
// its original slot, merged sources removed.
LayerMergeResult merge_layer(const TokenMatrix& z, const Matrix& value_matrix, double tau,
                             const std::vector<int>& protected_indices);

// Baseline variant: same matching, but merges exactly the r candidate pairs
// with highest similarity regardless of threshold (ties -> lower source
// index). r is clamped to the number of sources.
LayerMergeResult merge_layer_fixed_ratio(const TokenMatrix& z, const Matrix& value_matrix, int r,
                                         const std::vector<int>& protected_indices);

// Random-drop baseline: keeps `keep` rows in total, protected rows always
// among them, the rest sampled uniformly without replacement. Original row
// order preserved.
TokenMatrix random_drop(const TokenMatrix& z, int keep, std::uint64_t seed,
                        const std::vector<int>& protected_indices);

}  // namespace atm
