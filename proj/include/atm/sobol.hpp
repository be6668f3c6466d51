#pragma once

#include <cstdint>
#include <vector>

#include "atm/types.hpp"

namespace atm {

// Gray-code Sobol sequence, direction numbers from the Joe-Kuo table
// (supports up to 16 dimensions; dimension 1 is the van der Corput base-2
// sequence). Index 0 is the all-zeros point; callers normally start at 1.
class SobolSequence {
public:
    explicit SobolSequence(int dim, std::uint64_t start_index = 1);

    int dim() const { return dim_; }

    // next point in [0,1)^dim
    Vector next();
    void skip(std::uint64_t n);

private:
    void advance();

    int dim_;
    std::uint64_t index_ = 0;
    std::vector<std::uint64_t> state_;
    std::vector<std::vector<std::uint64_t>> direction_;  // [dim][bit]
};

// First n points (starting at index 1) as rows of an n x dim matrix.
Matrix sobol_points(int n, int dim);

}  // namespace atm
