#include "atm/pareto.hpp"

#include <algorithm>
#include <stdexcept>

namespace atm {

bool dominates(const Vector3& a, const Vector3& b) {
    return (a.array() <= b.array()).all() && (a.array() < b.array()).any();
}

std::vector<int> non_dominated_indices(const std::vector<Vector3>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<int> keep;
    for (int i = 0; i < n; ++i) {
        bool alive = true;
        for (int j = 0; j < n && alive; ++j) {
            if (j == i) continue;
            if (dominates(points[static_cast<std::size_t>(j)], points[static_cast<std::size_t>(i)])) {
                alive = false;
            }
            // duplicates collapse onto the first occurrence
            if (j < i && (points[static_cast<std::size_t>(j)].array() ==
                          points[static_cast<std::size_t>(i)].array())
                             .all()) {
                alive = false;
            }
        }
        if (alive) keep.push_back(i);
    }
    return keep;
}

std::vector<Vector3> non_dominated(const std::vector<Vector3>& points) {
    std::vector<Vector3> out;
    for (int i : non_dominated_indices(points)) out.push_back(points[static_cast<std::size_t>(i)]);
    return out;
}

namespace {

// 2-D staircase of mutually non-dominated points kept sorted by x ascending
// (y then strictly descending).
class Staircase {
public:
    void insert(const Eigen::Vector2d& p) {
        for (const Eigen::Vector2d& q : pts_) {
            if (q.x() <= p.x() && q.y() <= p.y()) return;  // dominated or duplicate
        }
        std::erase_if(pts_, [&p](const Eigen::Vector2d& q) {
            return p.x() <= q.x() && p.y() <= q.y();
        });
        const auto it = std::lower_bound(
            pts_.begin(), pts_.end(), p,
            [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() < b.x(); });
        pts_.insert(it, p);
    }

    double area(const Eigen::Vector2d& ref) const {
        double a = 0.0;
        for (std::size_t k = 0; k < pts_.size(); ++k) {
            const double next_x = (k + 1 < pts_.size()) ? pts_[k + 1].x() : ref.x();
            a += (next_x - pts_[k].x()) * (ref.y() - pts_[k].y());
        }
        return a;
    }

private:
    std::vector<Eigen::Vector2d> pts_;
};

double sweep_hypervolume(std::vector<Vector3> pts, const Vector3& ref) {
    if (pts.empty()) return 0.0;
    std::stable_sort(pts.begin(), pts.end(),
                     [](const Vector3& a, const Vector3& b) { return a.z() < b.z(); });
    Staircase stairs;
    double volume = 0.0;
    std::size_t i = 0;
    while (i < pts.size()) {
        const double z = pts[i].z();
        while (i < pts.size() && pts[i].z() == z) {
            stairs.insert(pts[i].head<2>());
            ++i;
        }
        const double z_next = (i < pts.size()) ? pts[i].z() : ref.z();
        volume += stairs.area(ref.head<2>()) * (z_next - z);
    }
    return volume;
}

}  // namespace

double area2d(const std::vector<Eigen::Vector2d>& points, const Eigen::Vector2d& reference) {
    Staircase stairs;
    for (const Eigen::Vector2d& p : points) stairs.insert(p);
    return stairs.area(reference);
}

double hypervolume(const std::vector<Vector3>& points, const Vector3& reference) {
    for (const Vector3& p : points) {
        if ((p.array() >= reference.array()).any()) {
            throw std::invalid_argument("hypervolume: point at or beyond the reference");
        }
    }
    return sweep_hypervolume(points, reference);
}

double hypervolume_filtered(const std::vector<Vector3>& points, const Vector3& reference) {
    std::vector<Vector3> inside;
    for (const Vector3& p : points) {
        if ((p.array() < reference.array()).all()) inside.push_back(p);
    }
    return sweep_hypervolume(std::move(inside), reference);
}

double hvi(const ParetoFront& front, const Vector3& candidate) {
    if (!candidate.allFinite()) throw std::invalid_argument("hvi: candidate must be finite");
    if ((candidate.array() >= front.reference.array()).any()) return 0.0;
    std::vector<Vector3> with = front.points;
    with.push_back(candidate);
    const double delta = hypervolume(with, front.reference) - hypervolume(front.points, front.reference);
    return std::max(delta, 0.0);
}

double hvi_contribution(const std::vector<Vector3>& front_points, const Vector3& reference,
                        const Vector3& candidate) {
    if ((candidate.array() >= reference.array()).any()) return 0.0;
    const double box = (reference - candidate).prod();
    std::vector<Vector3> clipped;
    clipped.reserve(front_points.size());
    for (const Vector3& p : front_points) {
        clipped.push_back(p.cwiseMax(candidate));
    }
    return box - sweep_hypervolume(std::move(clipped), reference);
}

void NormalizationBox::freeze(const std::vector<Vector3>& batch) {
    if (batch.empty()) throw std::invalid_argument("NormalizationBox: empty freezing batch");
    Vector3 hi = batch.front();
    lo = batch.front();
    for (const Vector3& v : batch) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    for (int j = 0; j < 3; ++j) {
        const double width = std::max(hi(j) - lo(j), 1e-9 * std::max(1.0, std::abs(hi(j))));
        ref(j) = hi(j) + 0.1 * width;
    }
    frozen = true;
}

Vector3 NormalizationBox::normalize(const Vector3& v) const {
    if (!frozen) throw std::logic_error("NormalizationBox: normalize before freeze");
    return (v - lo).cwiseQuotient(ref - lo);
}

}  // namespace atm
