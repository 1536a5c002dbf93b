#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "freeknot/errors.hpp"
#include "freeknot/space.hpp"

namespace freeknot {

enum class constraint_mode { approx, poisson };

/// One decoupled chain of free knots along a patch axis: consecutive
/// entries keep a gap of at least h_min, each entry carries box bounds
/// (anchors, compactness box, fixed neighbours folded in).
struct chain_segment {
    int first_free = 0; // index into the global free-knot vector
    std::vector<double> lower;
    std::vector<double> upper;
    double gap = 0.0;
};

/// Linear inequality system over the free knots with Euclidean projection.
/// All constraints are per-axis chains plus per-entry bounds, so the
/// projection decouples into bounded isotonic regressions.
struct feasible_set {
    std::vector<chain_segment> segments;
    int n_free = 0;
    double h_min = 0.0;

    /// Euclidean projection onto the set; feasible points are returned
    /// unchanged.
    std::vector<double> project(std::span<const double> candidate) const;

    /// Largest constraint violation (0 when feasible).
    double max_violation(std::span<const double> x) const {
        double worst = 0.0;
        for (const auto& seg : segments) {
            const int m = static_cast<int>(seg.lower.size());
            for (int i = 0; i < m; ++i) {
                const double v = x[seg.first_free + i];
                worst = std::max(worst, seg.lower[i] - v);
                worst = std::max(worst, v - seg.upper[i]);
                if (i + 1 < m)
                    worst = std::max(worst, v + seg.gap - x[seg.first_free + i + 1]);
            }
        }
        return worst;
    }

    bool is_feasible(std::span<const double> x, double slack = 1e-12) const {
        return max_violation(x) <= slack;
    }
};

namespace detail {

/// Bounded isotonic regression: minimise ||z - c||^2 subject to z
/// non-decreasing and Lenv_i <= z_i <= Uenv_i, where the envelopes are
/// themselves non-decreasing. Pool-adjacent-violators with per-block
/// clamping.
inline std::vector<double> bounded_isotonic(std::span<const double> c,
                                            std::span<const double> lenv,
                                            std::span<const double> uenv) {
    const int m = static_cast<int>(c.size());
    struct block {
        double sum;
        int count;
        double lmax, umin;
        int begin;
        double value() const {
            return std::min(std::max(sum / count, lmax), umin);
        }
    };
    std::vector<block> stack;
    stack.reserve(m);
    for (int i = 0; i < m; ++i) {
        block b{c[i], 1, lenv[i], uenv[i], i};
        while (!stack.empty() && stack.back().value() > b.value() - 0.0) {
            const block& prev = stack.back();
            b.sum += prev.sum;
            b.count += prev.count;
            b.lmax = std::max(b.lmax, prev.lmax);
            b.umin = std::min(b.umin, prev.umin);
            b.begin = prev.begin;
            stack.pop_back();
        }
        stack.push_back(b);
    }
    std::vector<double> z(m);
    for (const auto& b : stack) {
        const double v = b.value();
        for (int i = b.begin; i < b.begin + b.count; ++i) z[i] = v;
    }
    return z;
}

} // namespace detail

inline std::vector<double> feasible_set::project(std::span<const double> candidate) const {
    if (static_cast<int>(candidate.size()) != n_free)
        throw arity_error("candidate has the wrong dimension");
    std::vector<double> out(candidate.begin(), candidate.end());
    for (const auto& seg : segments) {
        const int m = static_cast<int>(seg.lower.size());
        bool ok = true;
        for (int i = 0; i < m && ok; ++i) {
            const double v = candidate[seg.first_free + i];
            ok = v >= seg.lower[i] && v <= seg.upper[i] &&
                 (i + 1 == m || candidate[seg.first_free + i + 1] >= v + seg.gap);
        }
        if (ok) continue; // already feasible: identity, bit-exact
        std::vector<double> c(m), lenv(m), uenv(m);
        for (int i = 0; i < m; ++i) {
            const double shift = i * seg.gap;
            c[i] = candidate[seg.first_free + i] - shift;
            lenv[i] = seg.lower[i] - shift;
            uenv[i] = seg.upper[i] - shift;
        }
        for (int i = 1; i < m; ++i) lenv[i] = std::max(lenv[i], lenv[i - 1]);
        for (int i = m - 2; i >= 0; --i) uenv[i] = std::min(uenv[i], uenv[i + 1]);
        for (int i = 0; i < m; ++i)
            if (lenv[i] > uenv[i] + 1e-12)
                throw infeasible_error("chain constraints admit no feasible point");
        auto z = detail::bounded_isotonic(c, lenv, uenv);
        for (int i = 0; i < m; ++i) out[seg.first_free + i] = z[i] + i * seg.gap;
    }
    const double viol = max_violation(out);
    if (!(viol <= 1e-10))
        throw projection_error("projection left a constraint violated by " +
                               std::to_string(viol));
    return out;
}

/// Constraint system for a space: within-patch ordering with gap h_min,
/// plus per-mode anchors. Approximation mode keeps every shape function
/// contributing and boxes the knots inside a tripled domain; Poisson mode
/// pins all knots inside the closed domain (zero trace), with the
/// repeated boundary groups fixed upstream. Construction verifies that
/// the current layout satisfies every constraint.
inline feasible_set build_feasible_set(const multi_patch_space& space, constraint_mode mode,
                                       double h_min = 1e-6) {
    feasible_set fs;
    fs.h_min = h_min;
    const double inf = std::numeric_limits<double>::infinity();
    int free_counter = 0;
    for (int s = 0; s < space.patch_count(); ++s)
        for (int t = 0; t < space.dim(); ++t) {
            const auto& kv = space.patches[s].knots[t];
            const auto& mask = space.trainable[s][t];
            const int n = static_cast<int>(kv.size());
            const int p = space.patches[s].degrees[t];
            const double x_lo = space.domain[t][0], x_hi = space.domain[t][1];

            std::vector<double> lower(n, -inf), upper(n, inf);
            if (mode == constraint_mode::approx) {
                const double span = x_hi - x_lo;
                for (int j = 0; j < n; ++j) {
                    lower[j] = x_lo - span;
                    upper[j] = x_hi + span;
                }
                lower[p] = std::max(lower[p], x_lo);
                upper[n - p - 1] = std::min(upper[n - p - 1], x_hi);
            } else {
                for (int j = 0; j < n; ++j) {
                    lower[j] = x_lo;
                    upper[j] = x_hi;
                }
            }

            int j = 0;
            while (j < n) {
                if (!mask[j]) {
                    ++j;
                    continue;
                }
                int b = j;
                while (b + 1 < n && mask[b + 1]) ++b;
                chain_segment seg;
                seg.first_free = free_counter;
                seg.gap = h_min;
                for (int i = j; i <= b; ++i) {
                    seg.lower.push_back(lower[i]);
                    seg.upper.push_back(upper[i]);
                }
                if (j > 0) seg.lower.front() = std::max(seg.lower.front(), kv[j - 1] + h_min);
                if (b + 1 < n) seg.upper.back() = std::min(seg.upper.back(), kv[b + 1] - h_min);
                free_counter += b - j + 1;
                fs.segments.push_back(std::move(seg));
                j = b + 1;
            }
        }
    fs.n_free = free_counter;

    const auto current = space.gather_free();
    if (!fs.is_feasible(current, 1e-12))
        throw infeasible_error("initial layout violates the constraint system by " +
                               std::to_string(fs.max_violation(current)));
    return fs;
}

} // namespace freeknot
