#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "freeknot/errors.hpp"

namespace freeknot {

/// Gauss-Legendre rule on (-1, 1). m points integrate polynomials of
/// degree <= 2m-1 exactly.
struct quadrature_rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline quadrature_rule compute_gauss(int m) {
    quadrature_rule r;
    r.nodes.resize(m);
    r.weights.resize(m);
    for (int i = 0; i < m; ++i) {
        // Chebyshev initial guess, refined by Newton on P_m.
        double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            if (m == 1) { p1 = x; }
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pm = (m == 1) ? x : p1;
            const double pm1 = (m == 1) ? 1.0 : p0;
            dp = m * (x * pm - pm1) / (x * x - 1.0);
            const double dx = pm / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[m - 1 - i] = x;
        r.weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

} // namespace detail

/// Cached Gauss-Legendre rule with m in [1, 32].
inline const quadrature_rule& gauss_rule(int m) {
    if (m < 1 || m > 32) throw range_error("gauss rule size must lie in [1, 32]");
    static const std::array<quadrature_rule, 33> table = [] {
        std::array<quadrature_rule, 33> t;
        for (int k = 1; k <= 32; ++k) t[k] = detail::compute_gauss(k);
        return t;
    }();
    return table[m];
}

/// Sorted distinct breakpoints covering a target interval.
struct break_partition {
    std::vector<double> points;
};

/// Restrict `breaks` to [a, b], including the endpoints; duplicates removed.
inline break_partition make_partition(std::span<const double> breaks, double a, double b) {
    if (b < a) throw range_error("partition interval is reversed");
    std::vector<double> pts;
    pts.push_back(a);
    for (double x : breaks)
        if (x > a && x < b) pts.push_back(x);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return {std::move(pts)};
}

/// Exact integration of a piecewise polynomial over the partition cells.
/// The Gauss order carries one extra point beyond the minimum for the
/// stated degree bound.
template <class F>
double integrate_piecewise(F&& f, const break_partition& partition, int degree_bound) {
    const auto& pts = partition.points;
    if (pts.size() < 2) throw arity_error("partition must contain at least one cell");
    const int m = std::min(32, degree_bound / 2 + 2);
    const auto& rule = gauss_rule(m);
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
        const double mid = 0.5 * (pts[c] + pts[c + 1]);
        const double half = 0.5 * (pts[c + 1] - pts[c]);
        if (half == 0.0) continue;
        double cell = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            cell += rule.weights[q] * f(mid + half * rule.nodes[q]);
        total += half * cell;
    }
    return total;
}

/// Result of an adaptive quadrature; `converged` is false when the
/// recursion depth cap was reached before meeting the tolerance.
struct quad_result {
    double value = 0.0;
    bool converged = true;
};

namespace detail {

template <class F>
void adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double s,
                          double tol, int depth, quad_result& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double s2 = sl + sr;
    // second clause: the Richardson difference sits at the roundoff floor
    // of the cell values, so further splitting cannot improve the result
    const double floor_ =
        32.0 * std::numeric_limits<double>::epsilon() *
        (std::abs(sl) + std::abs(sr) + std::abs(s));
    if (std::abs(s2 - s) <= std::max(15.0 * tol, floor_) || depth <= 0) {
        out.value += s2 + (s2 - s) / 15.0;
        if (depth <= 0 && std::abs(s2 - s) > 15.0 * tol) out.converged = false;
        return;
    }
    adaptive_simpson_rec(f, a, m, fa, flm, fm, sl, 0.5 * tol, depth - 1, out);
    adaptive_simpson_rec(f, m, b, fm, frm, fb, sr, 0.5 * tol, depth - 1, out);
}

} // namespace detail

/// Adaptive Simpson integration with Richardson control. Depth is capped
/// at `max_depth`; exceeding it is reported through `converged`.
template <class F>
quad_result adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40) {
    if (tol <= 0.0) throw range_error("tolerance must be positive");
    if (a == b) return {};
    quad_result out;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, s, tol, max_depth, out);
    return out;
}

/// Adaptive Simpson over each cell of a partition, with a per-cell
/// tolerance relative to a coarse estimate of the cell value. Used for
/// error metrics where the integral magnitude is not known a priori.
/// Cells wider than `max_width` are pre-split uniformly so narrow
/// features inside a cell still seed the refinement.
template <class F>
quad_result adaptive_simpson_cells(F&& f, const break_partition& partition, double rel_tol,
                                   double abs_floor = 1e-30, double max_width = 0.0) {
    quad_result out;
    const auto& pts = partition.points;
    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
        const double a = pts[c], b = pts[c + 1];
        if (a == b) continue;
        const int splits =
            (max_width > 0.0) ? std::max(1, static_cast<int>(std::ceil((b - a) / max_width)))
                              : 1;
        for (int k = 0; k < splits; ++k) {
            const double u = a + (b - a) * k / splits;
            const double v = a + (b - a) * (k + 1) / splits;
            const double coarse =
                std::abs((v - u) / 6.0 * (f(u) + 4.0 * f(0.5 * (u + v)) + f(v)));
            const double tol = std::max(rel_tol * coarse, abs_floor);
            auto r = adaptive_simpson(f, u, v, tol);
            out.value += r.value;
            out.converged = out.converged && r.converged;
        }
    }
    return out;
}

} // namespace freeknot
