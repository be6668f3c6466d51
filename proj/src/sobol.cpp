#include "atm/sobol.hpp"

#include <bit>
#include <stdexcept>

namespace atm {

namespace {

constexpr int kMaxDim = 16;
constexpr int kBits = 52;  // enough resolution for doubles in [0,1)

struct JoeKuoEntry {
    int s;
    std::uint64_t a;
    std::uint64_t m[6];
};

// new-joe-kuo-6 direction numbers for dimensions 2..16
constexpr JoeKuoEntry kJoeKuo[] = {
    {1, 0, {1, 0, 0, 0, 0, 0}},          // dim 2
    {2, 1, {1, 3, 0, 0, 0, 0}},          // dim 3
    {3, 1, {1, 3, 1, 0, 0, 0}},          // dim 4
    {3, 2, {1, 1, 1, 0, 0, 0}},          // dim 5
    {4, 1, {1, 1, 3, 3, 0, 0}},          // dim 6
    {4, 4, {1, 3, 5, 13, 0, 0}},         // dim 7
    {5, 2, {1, 1, 5, 5, 17, 0}},         // dim 8
    {5, 4, {1, 1, 5, 5, 5, 0}},          // dim 9
    {5, 7, {1, 1, 7, 11, 19, 0}},        // dim 10
    {5, 11, {1, 1, 5, 1, 1, 0}},         // dim 11
    {5, 13, {1, 1, 1, 3, 11, 0}},        // dim 12
    {5, 14, {1, 3, 5, 5, 31, 0}},        // dim 13
    {6, 1, {1, 3, 3, 9, 7, 49}},         // dim 14
    {6, 13, {1, 1, 1, 15, 21, 21}},      // dim 15
    {6, 16, {1, 3, 1, 13, 27, 49}},      // dim 16
};

std::vector<std::uint64_t> direction_numbers(int dim_index) {
    std::vector<std::uint64_t> v(kBits);
    if (dim_index == 0) {
        for (int i = 0; i < kBits; ++i) v[static_cast<std::size_t>(i)] = 1ull << (kBits - 1 - i);
        return v;
    }
    const JoeKuoEntry& e = kJoeKuo[dim_index - 1];
    std::vector<std::uint64_t> m(static_cast<std::size_t>(kBits));
    for (int i = 0; i < e.s; ++i) m[static_cast<std::size_t>(i)] = e.m[i];
    for (int i = e.s; i < kBits; ++i) {
        std::uint64_t mi = m[static_cast<std::size_t>(i - e.s)] ^
                           (m[static_cast<std::size_t>(i - e.s)] << e.s);
        for (int k = 1; k < e.s; ++k) {
            if ((e.a >> (e.s - 1 - k)) & 1ull) mi ^= m[static_cast<std::size_t>(i - k)] << k;
        }
        m[static_cast<std::size_t>(i)] = mi;
    }
    for (int i = 0; i < kBits; ++i) {
        v[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] << (kBits - 1 - i);
    }
    return v;
}

}  // namespace

SobolSequence::SobolSequence(int dim, std::uint64_t start_index) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("SobolSequence: dim out of range");
    state_.assign(static_cast<std::size_t>(dim), 0);
    direction_.reserve(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) direction_.push_back(direction_numbers(d));
    skip(start_index);
}

void SobolSequence::advance() {
    // Gray-code update: flip the direction number of the lowest zero bit
    const int c = std::countr_one(index_);
    for (int d = 0; d < dim_; ++d) {
        state_[static_cast<std::size_t>(d)] ^= direction_[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)];
    }
    ++index_;
}

Vector SobolSequence::next() {
    Vector x(dim_);
    for (int d = 0; d < dim_; ++d) {
        x(d) = static_cast<double>(state_[static_cast<std::size_t>(d)]) /
               static_cast<double>(1ull << kBits);
    }
    advance();
    return x;
}

void SobolSequence::skip(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) advance();
}

Matrix sobol_points(int n, int dim) {
    SobolSequence seq(dim, 1);
    Matrix out(n, dim);
    for (int i = 0; i < n; ++i) out.row(i) = seq.next().transpose();
    return out;
}

}  // namespace atm
