#pragma once

#include <Eigen/Dense>

namespace atm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector3 = Eigen::Vector3d;
using IntVector = Eigen::VectorXi;

// Token set flowing through the encoder: one row per token. source_counts[i]
// records how many original tokens row i aggregates; merging preserves the
// total, so sum(source_counts) stays equal to the layer-0 token count.
struct TokenMatrix {
    Matrix tokens;            // N x d
    int layer_index = 0;      // 0 = fresh patch embedding
    IntVector source_counts;  // length N, all >= 1 (0 only marks padding rows
                              // in adversary feature vectors)

    int count() const { return static_cast<int>(tokens.rows()); }
    int dim() const { return static_cast<int>(tokens.cols()); }
};

}  // namespace atm
