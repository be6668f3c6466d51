#pragma once

#include <functional>

#include "atm/types.hpp"

namespace atm {

struct NelderMeadResult {
    Vector x;
    double value = 0.0;
    int evals = 0;
};

// Derivative-free simplex minimization with the classic reflection /
// expansion / contraction / shrink coefficients. Fully deterministic for a
// given start point and budget.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& fn, const Vector& x0,
                             double step, int max_evals, double tol = 1e-9);

}  // namespace atm
