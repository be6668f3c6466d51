#include "atm/nelder_mead.hpp"

#include <algorithm>
#include <vector>

namespace atm {

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& fn, const Vector& x0,
                             double step, int max_evals, double tol) {
    const int n = static_cast<int>(x0.size());
    int evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        return fn(x);
    };

    std::vector<Vector> xs;
    std::vector<double> fs;
    xs.push_back(x0);
    fs.push_back(eval(x0));
    for (int i = 0; i < n; ++i) {
        Vector xi = x0;
        xi(i) += step;
        xs.push_back(xi);
        fs.push_back(eval(xi));
    }

    std::vector<int> order(static_cast<std::size_t>(n + 1));
    auto sort_simplex = [&] {
        for (int i = 0; i <= n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&fs](int a, int b) { return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)]; });
    };

    while (evals < max_evals) {
        sort_simplex();
        const int best = order.front();
        const int worst = order.back();
        const int second_worst = order[static_cast<std::size_t>(n - 1)];
        if (fs[static_cast<std::size_t>(worst)] - fs[static_cast<std::size_t>(best)] < tol) break;

        Vector centroid = Vector::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) centroid += xs[static_cast<std::size_t>(i)];
        }
        centroid /= n;

        const Vector xr = centroid + (centroid - xs[static_cast<std::size_t>(worst)]);
        const double fr = eval(xr);
        if (fr < fs[static_cast<std::size_t>(best)]) {
            const Vector xe = centroid + 2.0 * (centroid - xs[static_cast<std::size_t>(worst)]);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[static_cast<std::size_t>(worst)] = xe;
                fs[static_cast<std::size_t>(worst)] = fe;
            } else {
                xs[static_cast<std::size_t>(worst)] = xr;
                fs[static_cast<std::size_t>(worst)] = fr;
            }
        } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
            xs[static_cast<std::size_t>(worst)] = xr;
            fs[static_cast<std::size_t>(worst)] = fr;
        } else {
            const bool outside = fr < fs[static_cast<std::size_t>(worst)];
            const Vector base = outside ? xr : xs[static_cast<std::size_t>(worst)];
            const Vector xc = centroid + 0.5 * (base - centroid);
            const double fc = eval(xc);
            if (fc < std::min(fr, fs[static_cast<std::size_t>(worst)])) {
                xs[static_cast<std::size_t>(worst)] = xc;
                fs[static_cast<std::size_t>(worst)] = fc;
            } else {
                // shrink toward the best vertex
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    xs[static_cast<std::size_t>(i)] =
                        xs[static_cast<std::size_t>(best)] +
                        0.5 * (xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(best)]);
                    fs[static_cast<std::size_t>(i)] = eval(xs[static_cast<std::size_t>(i)]);
                }
            }
        }
    }

    sort_simplex();
    NelderMeadResult result;
    result.x = xs[static_cast<std::size_t>(order.front())];
    result.value = fs[static_cast<std::size_t>(order.front())];
    result.evals = evals;
    return result;
}

}  // namespace atm
