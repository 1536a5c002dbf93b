#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "freeknot/bspline.hpp"
#include "freeknot/knots.hpp"

namespace freeknot {

using interval = std::array<double, 2>;

/// One tensor-product patch: per-axis degree and knot vector.
struct patch_spec {
    std::vector<int> degrees;
    std::vector<knot_vector> knots;

    int dim() const { return static_cast<int>(degrees.size()); }

    int basis_count(int axis) const {
        return static_cast<int>(knots[axis].size()) - degrees[axis] - 1;
    }

    long dof_count() const {
        long n = 1;
        for (int t = 0; t < dim(); ++t) n *= basis_count(t);
        return n;
    }

    std::vector<int> basis_dims() const {
        std::vector<int> d(dim());
        for (int t = 0; t < dim(); ++t) d[t] = basis_count(t);
        return d;
    }
};

/// Reference to one knot coordinate inside a multi-patch space.
struct knot_ref {
    int patch;
    int axis;
    int index;
};

/// Sum of tensor-product patches over an axis-aligned box, with a
/// trainable mask over the knot coordinates. DOF layout is patch-major,
/// lexicographic in the per-axis multi-index (last axis fastest).
struct multi_patch_space {
    std::vector<patch_spec> patches;
    std::vector<interval> domain;
    std::vector<std::vector<std::vector<char>>> trainable; // [patch][axis][knot]

    int dim() const { return static_cast<int>(domain.size()); }
    int patch_count() const { return static_cast<int>(patches.size()); }

    long dim_weights() const {
        long n = 0;
        for (const auto& p : patches) n += p.dof_count();
        return n;
    }

    long dim_knots() const {
        long n = 0;
        for (const auto& p : patches)
            for (const auto& kv : p.knots) n += static_cast<long>(kv.size());
        return n;
    }

    long patch_offset(int s) const {
        long off = 0;
        for (int q = 0; q < s; ++q) off += patches[q].dof_count();
        return off;
    }

    std::vector<knot_ref> free_knots() const {
        std::vector<knot_ref> refs;
        for (int s = 0; s < patch_count(); ++s)
            for (int t = 0; t < dim(); ++t)
                for (std::size_t j = 0; j < patches[s].knots[t].size(); ++j)
                    if (trainable[s][t][j]) refs.push_back({s, t, static_cast<int>(j)});
        return refs;
    }

    std::vector<double> gather_free() const {
        std::vector<double> out;
        for (const auto& ref : free_knots())
            out.push_back(patches[ref.patch].knots[ref.axis][ref.index]);
        return out;
    }

    void set_free_knots(std::span<const double> values) {
        const auto refs = free_knots();
        if (values.size() != refs.size())
            throw arity_error("free-knot vector has the wrong length");
        // rebuild per (patch, axis) vectors; ordering is the caller's duty
        std::size_t k = 0;
        for (int s = 0; s < patch_count(); ++s)
            for (int t = 0; t < dim(); ++t) {
                auto vals = patches[s].knots[t].values();
                bool touched = false;
                for (std::size_t j = 0; j < vals.size(); ++j)
                    if (trainable[s][t][j]) {
                        vals[j] = values[k++];
                        touched = true;
                    }
                if (touched) patches[s].knots[t] = knot_vector(std::move(vals));
            }
    }
};

namespace detail {

/// Index of the cell [kv_s, kv_{s+1}) containing x, clamped so that the
/// rightmost point of the vector falls in the last nonempty cell
/// (closing the right boundary). Returns -1 when x is outside.
inline int find_span(std::span<const double> kv, double x) {
    const int n = static_cast<int>(kv.size());
    if (x < kv.front() || x > kv.back()) return -1;
    if (x == kv.back()) {
        int s = n - 2;
        while (s >= 0 && kv[s] == kv[s + 1]) --s;
        return s;
    }
    const int s =
        static_cast<int>(std::upper_bound(kv.begin(), kv.end(), x) - kv.begin()) - 1;
    return s;
}

/// Values of the p+1 basis functions that can be nonzero on the span cell,
/// via the triangular recurrence. out[r] is B_{span-p+r}; entries whose
/// index falls outside [0, n-p-2] must be ignored by the caller.
inline void span_basis_values(std::span<const double> kv, int p, int span, double x,
                              std::span<double> out) {
    std::vector<double> left(p + 1), right(p + 1);
    out[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - kv[span + 1 - j];
        right[j] = kv[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Active basis range and values (k-th derivative) of one axis at x.
/// Returns the first active basis index; fills `vals` (size p+1) with the
/// derivative values; empty range signalled by first > last.
struct axis_eval {
    int first = 0;
    int count = 0;
    std::array<double, 16> vals{};
};

inline axis_eval eval_axis(const knot_vector& kv, int p, double x, int k) {
    axis_eval out;
    const auto v = kv.span();
    const int n = static_cast<int>(v.size());
    const int span = find_span(v, x);
    if (span < 0) return out;
    const int lo = std::max(span - p, 0);
    const int hi = std::min(span, n - p - 2);
    if (hi < lo) return out;
    out.first = lo;
    out.count = hi - lo + 1;
    if (k == 0) {
        std::array<double, 16> all{};
        span_basis_values(v, p, span, x, std::span<double>(all.data(), p + 1));
        for (int j = lo; j <= hi; ++j) out.vals[j - lo] = all[j - (span - p)];
    } else {
        // derivative values through the knot-calculus recursion; the side
        // gives the left limit when x closes the right end of the vector
        const side s = (x == v.back()) ? side::left : side::right;
        for (int j = lo; j <= hi; ++j)
            out.vals[j - lo] = eval_dx_v(p, v.subspan(j, p + 2), x, k, s);
    }
    return out;
}

} // namespace detail

/// Range [begin, end) of basis indices active at x on one patch axis.
inline std::pair<int, int> active_basis(const multi_patch_space& space, int s, int t,
                                        double x) {
    const auto& patch = space.patches[s];
    const auto e = detail::eval_axis(patch.knots[t], patch.degrees[t], x, 0);
    return {e.first, e.first + e.count};
}

/// Evaluate the realisation map at x for weights W (global DOF layout).
inline double realise(const multi_patch_space& space, std::span<const double> W,
                      std::span<const double> x) {
    if (static_cast<long>(W.size()) != space.dim_weights())
        throw arity_error("weight vector does not match the space");
    const int d = space.dim();
    double total = 0.0;
    for (int s = 0; s < space.patch_count(); ++s) {
        const auto& patch = space.patches[s];
        std::vector<detail::axis_eval> ax(d);
        bool alive = true;
        for (int t = 0; t < d; ++t) {
            ax[t] = detail::eval_axis(patch.knots[t], patch.degrees[t], x[t], 0);
            if (ax[t].count == 0) {
                alive = false;
                break;
            }
        }
        if (!alive) continue;
        const auto dims = patch.basis_dims();
        const long offset = space.patch_offset(s);
        std::vector<int> idx(d, 0);
        while (true) {
            double prod = 1.0;
            long flat = 0;
            for (int t = 0; t < d; ++t) {
                prod *= ax[t].vals[idx[t]];
                flat = flat * dims[t] + (ax[t].first + idx[t]);
            }
            total += W[offset + flat] * prod;
            int t = d - 1;
            while (t >= 0 && ++idx[t] == ax[t].count) idx[t--] = 0;
            if (t < 0) break;
        }
    }
    return total;
}

/// Partial derivative of the realisation along one axis.
inline double realise_dx(const multi_patch_space& space, std::span<const double> W,
                         std::span<const double> x, int axis) {
    const int d = space.dim();
    double total = 0.0;
    for (int s = 0; s < space.patch_count(); ++s) {
        const auto& patch = space.patches[s];
        std::vector<detail::axis_eval> ax(d);
        bool alive = true;
        for (int t = 0; t < d; ++t) {
            ax[t] = detail::eval_axis(patch.knots[t], patch.degrees[t], x[t],
                                      t == axis ? 1 : 0);
            if (ax[t].count == 0) {
                alive = false;
                break;
            }
        }
        if (!alive) continue;
        const auto dims = patch.basis_dims();
        const long offset = space.patch_offset(s);
        std::vector<int> idx(d, 0);
        while (true) {
            double prod = 1.0;
            long flat = 0;
            for (int t = 0; t < d; ++t) {
                prod *= ax[t].vals[idx[t]];
                flat = flat * dims[t] + (ax[t].first + idx[t]);
            }
            total += W[offset + flat] * prod;
            int t = d - 1;
            while (t >= 0 && ++idx[t] == ax[t].count) idx[t--] = 0;
            if (t < 0) break;
        }
    }
    return total;
}

namespace detail {

struct axis_layout {
    std::vector<std::vector<double>> patch_knots; // per patch index along this axis
    std::vector<std::vector<char>> mask;
};

/// Uniform-emulating ladder for one axis: r patch windows over a global
/// uniform knot sequence, adjacent windows overlapping degree+1 knots.
inline axis_layout uniform_axis_approx(interval dom, std::span<const int> counts, int p) {
    const int r = static_cast<int>(counts.size());
    long M = 0;
    for (int c : counts) {
        if (c < p + 2) throw capability_error("patch needs at least degree+2 knots");
        M += c;
    }
    M -= static_cast<long>(r - 1) * (p + 1);
    const long cells = M - 1 - 2 * p;
    if (cells < 1) throw capability_error("not enough knots to cover the domain");
    const double h = (dom[1] - dom[0]) / static_cast<double>(cells);
    std::vector<double> global(M);
    for (long g = 0; g < M; ++g) global[g] = dom[0] + (g - p) * h;
    global[p] = dom[0];
    global[M - 1 - p] = dom[1];

    axis_layout out;
    long off = 0;
    for (int q = 0; q < r; ++q) {
        out.patch_knots.emplace_back(global.begin() + off, global.begin() + off + counts[q]);
        out.mask.emplace_back(counts[q], 1);
        off += counts[q] - (p + 1);
    }
    return out;
}

/// Poisson variant: all knots inside the closed domain, boundary value
/// repeated to multiplicity p; the repeated groups are non-trainable.
inline axis_layout uniform_axis_poisson(interval dom, std::span<const int> counts, int p) {
    if (p < 1) throw capability_error("Poisson layout needs degree >= 1");
    const int r = static_cast<int>(counts.size());
    long M = 0;
    for (int c : counts) {
        if (c < p + 2) throw capability_error("patch needs at least degree+2 knots");
        M += c;
    }
    M -= static_cast<long>(r - 1) * (p + 1);
    const long cells = M + 1 - 2 * p;
    if (cells < 1) throw capability_error("not enough knots to cover the domain");
    const double h = (dom[1] - dom[0]) / static_cast<double>(cells);
    std::vector<double> global(M);
    for (long g = 0; g < M; ++g) {
        if (g < p)
            global[g] = dom[0];
        else if (g >= M - p)
            global[g] = dom[1];
        else
            global[g] = dom[0] + (g - p + 1) * h;
    }

    axis_layout out;
    long off = 0;
    for (int q = 0; q < r; ++q) {
        out.patch_knots.emplace_back(global.begin() + off, global.begin() + off + counts[q]);
        std::vector<char> mask(counts[q], 1);
        if (p >= 2)
            for (int j = 0; j < counts[q]; ++j) {
                const long g = off + j;
                if (g < p || g >= M - p) mask[j] = 0;
            }
        out.mask.push_back(std::move(mask));
        off += counts[q] - (p + 1);
    }
    return out;
}

inline multi_patch_space assemble_space(const std::vector<interval>& domain,
                                        std::span<const int> layout,
                                        const std::vector<axis_layout>& axes, int degree) {
    const int d = static_cast<int>(domain.size());
    multi_patch_space space;
    space.domain = domain;
    long r_total = 1;
    for (int t = 0; t < d; ++t) r_total *= layout[t];
    for (long s = 0; s < r_total; ++s) {
        std::vector<int> q(d);
        long rem = s;
        for (int t = d - 1; t >= 0; --t) {
            q[t] = static_cast<int>(rem % layout[t]);
            rem /= layout[t];
        }
        patch_spec patch;
        std::vector<std::vector<char>> mask;
        for (int t = 0; t < d; ++t) {
            patch.degrees.push_back(degree);
            patch.knots.emplace_back(axes[t].patch_knots[q[t]]);
            mask.push_back(axes[t].mask[q[t]]);
        }
        space.patches.push_back(std::move(patch));
        space.trainable.push_back(std::move(mask));
    }
    return space;
}

} // namespace detail

/// Uniform-emulating initialisation for the approximation problem: knots
/// evenly spaced with `degree` knots outside the domain on each side;
/// adjacent patches overlap over degree+1 knots. All knots trainable.
inline multi_patch_space init_uniform_approx(const std::vector<interval>& domain,
                                             std::span<const int> layout,
                                             int knots_per_patch, int degree) {
    const int d = static_cast<int>(domain.size());
    std::vector<detail::axis_layout> axes;
    for (int t = 0; t < d; ++t) {
        std::vector<int> counts(layout[t], knots_per_patch);
        axes.push_back(detail::uniform_axis_approx(domain[t], counts, degree));
    }
    return detail::assemble_space(domain, layout, axes, degree);
}

/// Poisson variant: boundary knots repeated to multiplicity `degree` and
/// fixed; every knot lies in the closed domain.
inline multi_patch_space init_uniform_poisson(const std::vector<interval>& domain,
                                              std::span<const int> layout,
                                              int knots_per_patch, int degree) {
    const int d = static_cast<int>(domain.size());
    std::vector<detail::axis_layout> axes;
    for (int t = 0; t < d; ++t) {
        std::vector<int> counts(layout[t], knots_per_patch);
        axes.push_back(detail::uniform_axis_poisson(domain[t], counts, degree));
    }
    return detail::assemble_space(domain, layout, axes, degree);
}

/// Sorted distinct knot values of all patches along one axis, clipped to
/// the domain; used as quadrature breakpoints.
inline std::vector<double> axis_breaks(const multi_patch_space& space, int t) {
    std::vector<double> pts;
    for (const auto& p : space.patches)
        for (double v : p.knots[t].values())
            if (v > space.domain[t][0] && v < space.domain[t][1]) pts.push_back(v);
    pts.push_back(space.domain[t][0]);
    pts.push_back(space.domain[t][1]);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

/// Smallest gap between consecutive knots where at least one of the pair
/// is trainable (the fixed repeated groups have gap zero by design).
inline double min_free_gap(const multi_patch_space& space) {
    double h = std::numeric_limits<double>::infinity();
    for (int s = 0; s < space.patch_count(); ++s)
        for (int t = 0; t < space.dim(); ++t) {
            const auto& kv = space.patches[s].knots[t];
            for (std::size_t j = 0; j + 1 < kv.size(); ++j)
                if (space.trainable[s][t][j] || space.trainable[s][t][j + 1])
                    h = std::min(h, kv[j + 1] - kv[j]);
        }
    return h;
}

/// Smallest distance between knots of distinct patches along any shared
/// axis (diagnostic for the non-convex cross-patch constraint).
inline double cross_patch_gap(const multi_patch_space& space) {
    double gap = std::numeric_limits<double>::infinity();
    for (int t = 0; t < space.dim(); ++t)
        for (int s = 0; s < space.patch_count(); ++s)
            for (int q = s + 1; q < space.patch_count(); ++q)
                for (double a : space.patches[s].knots[t].values())
                    for (double b : space.patches[q].knots[t].values())
                        gap = std::min(gap, std::abs(a - b));
    return gap;
}

namespace detail {

inline void print_double(std::ostream& os, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

} // namespace detail

/// Plain-text snapshot: header, domain, then one line per patch axis with
/// degree, knot count, knot values and the trainable mask. Floats use the
/// shortest round-trip representation.
inline void save_space(const multi_patch_space& space, std::ostream& os) {
    os << space.patch_count() << ' ' << space.dim() << '\n';
    for (int t = 0; t < space.dim(); ++t) {
        detail::print_double(os, space.domain[t][0]);
        os << ' ';
        detail::print_double(os, space.domain[t][1]);
        os << (t + 1 == space.dim() ? '\n' : ' ');
    }
    for (int s = 0; s < space.patch_count(); ++s)
        for (int t = 0; t < space.dim(); ++t) {
            const auto& kv = space.patches[s].knots[t];
            os << space.patches[s].degrees[t] << ' ' << kv.size();
            for (double v : kv.values()) {
                os << ' ';
                detail::print_double(os, v);
            }
            for (char m : space.trainable[s][t]) os << ' ' << int(m);
            os << '\n';
        }
}

inline multi_patch_space load_space(std::istream& is) {
    multi_patch_space space;
    int r = 0, d = 0;
    if (!(is >> r >> d) || r < 1 || d < 1) throw io_error("bad space snapshot header");
    space.domain.resize(d);
    for (int t = 0; t < d; ++t)
        if (!(is >> space.domain[t][0] >> space.domain[t][1]))
            throw io_error("bad space snapshot domain");
    for (int s = 0; s < r; ++s) {
        patch_spec patch;
        std::vector<std::vector<char>> mask;
        for (int t = 0; t < d; ++t) {
            int p = 0, n = 0;
            if (!(is >> p >> n) || n < p + 2) throw io_error("bad space snapshot axis");
            std::vector<double> vals(n);
            for (auto& v : vals)
                if (!(is >> v)) throw io_error("bad space snapshot knots");
            std::vector<char> m(n);
            for (auto& v : m) {
                int b = 0;
                if (!(is >> b)) throw io_error("bad space snapshot mask");
                v = static_cast<char>(b);
            }
            patch.degrees.push_back(p);
            patch.knots.emplace_back(std::move(vals));
            mask.push_back(std::move(m));
        }
        space.patches.push_back(std::move(patch));
        space.trainable.push_back(std::move(mask));
    }
    return space;
}

} // namespace freeknot
