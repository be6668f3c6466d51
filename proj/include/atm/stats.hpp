#pragma once

#include <vector>

namespace atm {

// Ranks with ties averaged (fractional ranks).
std::vector<double> fractional_ranks(const std::vector<double>& values);

// Spearman rank correlation; returns 0 when either input is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

}  // namespace atm
