#pragma once

#include <vector>

#include "atm/types.hpp"

namespace atm {

// Minimization convention throughout: a dominates b iff a <= b componentwise
// and a != b.
bool dominates(const Vector3& a, const Vector3& b);

// Maximal mutually non-dominated subset; exact duplicates collapse to the
// first occurrence. Input order of survivors is preserved.
std::vector<Vector3> non_dominated(const std::vector<Vector3>& points);
std::vector<int> non_dominated_indices(const std::vector<Vector3>& points);

struct ParetoFront {
    std::vector<Vector3> points;  // mutually non-dominated, strictly below reference
    Vector3 reference;
};

// Exact 3-D hypervolume of the region dominated by `points` within the
// reference box, by dimension sweep: sort by the third coordinate and
// integrate the area of a 2-D staircase between slabs. Points need not be
// mutually non-dominated, but every point must be strictly below the
// reference in all coordinates.
double hypervolume(const std::vector<Vector3>& points, const Vector3& reference);

// Same, but silently drops points at or beyond the reference (used for
// hypervolume curves over raw evaluation sets).
double hypervolume_filtered(const std::vector<Vector3>& points, const Vector3& reference);

double area2d(const std::vector<Eigen::Vector2d>& points, const Eigen::Vector2d& reference);

// max{HV(P u {candidate}) - HV(P), 0}; zero for dominated candidates and for
// candidates outside the reference box.
double hvi(const ParetoFront& front, const Vector3& candidate);

// Fast equivalent of hvi() used inside Monte-Carlo acquisition loops:
// vol[candidate, ref] minus the volume of the front clipped into that box.
double hvi_contribution(const std::vector<Vector3>& front_points, const Vector3& reference,
                        const Vector3& candidate);

// Frozen min-max view mapping raw objectives into [0,1] so accuracy, FLOPs
// and token counts contribute comparably to hypervolume and EHVI. The
// reference sits at the componentwise max of the freezing batch plus a 10%
// margin and maps to (1,1,1).
struct NormalizationBox {
    Vector3 lo = Vector3::Zero();
    Vector3 ref = Vector3::Ones();
    bool frozen = false;

    void freeze(const std::vector<Vector3>& batch);
    Vector3 normalize(const Vector3& v) const;
};

}  // namespace atm
