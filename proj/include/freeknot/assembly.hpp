#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <vector>

#include "freeknot/bspline.hpp"
#include "freeknot/quadrature.hpp"
#include "freeknot/separable.hpp"
#include "freeknot/space.hpp"
#include "freeknot/tensor.hpp"

namespace freeknot {

namespace detail {

/// Overlap of two supports and the target interval.
inline bool clip_supports(std::span<const double> rwin, std::span<const double> cwin,
                          interval I, double& lo, double& hi) {
    lo = std::max({rwin.front(), cwin.front(), I[0]});
    hi = std::min({rwin.back(), cwin.back(), I[1]});
    return hi > lo;
}

inline break_partition window_partition(std::span<const double> rwin,
                                        std::span<const double> cwin, double lo, double hi) {
    std::vector<double> breaks(rwin.begin(), rwin.end());
    breaks.insert(breaks.end(), cwin.begin(), cwin.end());
    return make_partition(breaks, lo, hi);
}

/// d/dtheta of int_I (d^k B_k(rwin)) (d^k B_cp(cwin)) dx by cellwise
/// Leibniz differentiation; theta moves rwin[row_loc] and, when given,
/// cwin[col_loc] together. Requires the row factor piecewise constant
/// (degree == k, k in {0, 1}).
inline double d_pc_product(int k, std::span<const double> rwin,
                           std::span<const double> cwin, int cp,
                           std::optional<int> row_loc, std::optional<int> col_loc,
                           interval I) {
    const int rp = static_cast<int>(rwin.size()) - 2;
    if (rp != k || k > 1)
        throw capability_error("cellwise route needs a piecewise-constant row factor");
    if (col_loc && cp != k)
        throw capability_error("moving smooth columns belong to the interchange route");
    double lo, hi;
    if (!clip_supports(rwin, cwin, I, lo, hi)) return 0.0;
    auto part = window_partition(rwin, cwin, lo, hi);

    double moving = 0.0;
    bool has_moving = false;
    if (row_loc) {
        moving = rwin[*row_loc];
        has_moving = true;
    }
    if (col_loc) {
        if (has_moving && cwin[*col_loc] != moving)
            throw capability_error("jointly moving knots must share their value");
        moving = cwin[*col_loc];
        has_moving = true;
    }
    if (!has_moving) return 0.0;

    // value and parameter-derivative of a piecewise-constant factor on the
    // cell containing xm; v = s/gap gives dv/d(left) = |v| v, dv/d(right) = -|v| v
    auto pc_value = [k](std::span<const double> win, double xm, std::optional<int> loc,
                        double& dv) {
        const double v = eval_dx_v(k, win, xm, k);
        dv = 0.0;
        if (k == 1 && loc && v != 0.0) {
            const int m = (xm < win[1]) ? 0 : 1; // cell index within the window
            if (*loc == m) dv = +std::abs(v) * v;
            if (*loc == m + 1) dv = -std::abs(v) * v;
        }
        return v;
    };

    double total = 0.0;
    const auto& pts = part.points;
    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
        const double u = pts[c], v = pts[c + 1];
        const double xm = 0.5 * (u + v);
        double dvr = 0.0, dvc = 0.0;
        const double vr = pc_value(rwin, xm, row_loc, dvr);
        if (cp == k) {
            const double vc = pc_value(cwin, xm, col_loc, dvc);
            total += (dvr * vc + vr * dvc) * (v - u);
            if (v == moving) total += vr * vc;
            if (u == moving) total -= vr * vc;
        } else {
            auto col = [&](double x) { return eval_dx_v(cp, cwin, x, k); };
            if (dvr != 0.0) {
                break_partition cell{{u, v}};
                total += dvr * integrate_piecewise(col, cell, cp - k);
            }
            if (v == moving) total += vr * eval_dx_v(cp, cwin, v, k, side::left);
            if (u == moving) total -= vr * eval_dx_v(cp, cwin, u, k, side::right);
        }
    }
    return total;
}

/// d/dtheta of int_I f (d^k B_k(win)) dx, theta = win[loc]; piecewise
/// constant factor, continuous data.
inline double d_pc_linear(int k, std::span<const double> win, int loc,
                          const std::function<double(double)>& f, interval I) {
    const double lo = std::max(win.front(), I[0]);
    const double hi = std::min(win.back(), I[1]);
    if (hi <= lo) return 0.0;
    auto part = make_partition(win, lo, hi);
    const double moving = win[loc];
    double total = 0.0;
    const auto& pts = part.points;
    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
        const double u = pts[c], v = pts[c + 1];
        const double xm = 0.5 * (u + v);
        const double vr = eval_dx_v(k, win, xm, k);
        double dvr = 0.0;
        if (k == 1 && vr != 0.0) {
            const int m = (xm < win[1]) ? 0 : 1;
            if (loc == m) dvr = +std::abs(vr) * vr;
            if (loc == m + 1) dvr = -std::abs(vr) * vr;
        }
        if (dvr != 0.0)
            total += dvr * adaptive_simpson(f, u, v, 1e-12).value;
        if (v == moving) total += vr * f(v);
        if (u == moving) total -= vr * f(u);
    }
    return total;
}

} // namespace detail

/// Entries int_I (d^k B_i)(d^k B_j) over the merged break partition of the
/// two knot vectors, exact Gauss quadrature. Banded when row and column
/// spaces coincide.
inline Eigen::MatrixXd assemble_bilinear_1d(const bilinear_kernel& kernel,
                                            const knot_vector& row_kv, int rp,
                                            const knot_vector& col_kv, int cp, interval I) {
    if (kernel.k > std::min(rp, cp))
        throw order_error("kernel derivative order exceeds a basis degree");
    const int k = kernel.k;
    const int nrow = static_cast<int>(row_kv.size()) - rp - 1;
    const int ncol = static_cast<int>(col_kv.size()) - cp - 1;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nrow, ncol);
    for (int i = 0; i < nrow; ++i) {
        const auto rwin = row_kv.span().subspan(i, rp + 2);
        for (int j = 0; j < ncol; ++j) {
            const auto cwin = col_kv.span().subspan(j, cp + 2);
            double lo, hi;
            if (!detail::clip_supports(rwin, cwin, I, lo, hi)) continue;
            auto part = detail::window_partition(rwin, cwin, lo, hi);
            M(i, j) = integrate_piecewise(
                [&](double x) {
                    return detail::eval_dx_v(rp, rwin, x, k) *
                           detail::eval_dx_v(cp, cwin, x, k);
                },
                part, (rp - k) + (cp - k));
        }
    }
    return M;
}

/// Entries int_I f (d^k B_i) by adaptive Simpson (tolerance 1e-12),
/// segmented at the window knots.
inline Eigen::VectorXd assemble_linear_1d(const linear_kernel& kernel,
                                          const knot_vector& kv, int p, interval I,
                                          bool* depth_warning = nullptr) {
    if (kernel.k > p) throw order_error("kernel derivative order exceeds the basis degree");
    const int n = static_cast<int>(kv.size()) - p - 1;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto win = kv.span().subspan(i, p + 2);
        const double lo = std::max(win.front(), I[0]);
        const double hi = std::min(win.back(), I[1]);
        if (hi <= lo) continue;
        auto part = make_partition(win, lo, hi);
        double acc = 0.0;
        for (std::size_t c = 0; c + 1 < part.points.size(); ++c) {
            auto r = adaptive_simpson(
                [&](double x) {
                    return kernel.data(x) * detail::eval_dx_v(p, win, x, kernel.k);
                },
                part.points[c], part.points[c + 1], 1e-12);
            acc += r.value;
            if (!r.converged && depth_warning) *depth_warning = true;
        }
        v(i) = acc;
    }
    return v;
}

/// Derivative of assemble_bilinear_1d with respect to knot j of the row
/// vector. For distinct row/column vectors the row-side derivative is
/// returned; with same_patch the full derivative (both sides share the
/// knot vector). The piecewise-constant corner (degree == k) uses cellwise
/// Leibniz differentiation and is refused across distinct patches.
inline Eigen::MatrixXd d_assemble_bilinear_dknot(const bilinear_kernel& kernel,
                                                 const knot_vector& row_kv, int rp,
                                                 const knot_vector& col_kv, int cp,
                                                 int j, bool same_patch, interval I) {
    if (kernel.k > std::min(rp, cp))
        throw order_error("kernel derivative order exceeds a basis degree");
    const int k = kernel.k;
    if (!same_patch && rp == k && cp == k)
        throw nondifferentiable_error(
            "piecewise-constant factors on crossing knot vectors are not differentiable");
    const int nrow = static_cast<int>(row_kv.size()) - rp - 1;
    const int ncol = static_cast<int>(col_kv.size()) - cp - 1;
    if (j < 0 || j >= static_cast<int>(row_kv.size()))
        throw range_error("knot index outside the row vector");
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nrow, ncol);

    auto row_side = [&](Eigen::MatrixXd& out) {
        for (int i = std::max(0, j - rp - 1); i <= std::min(nrow - 1, j); ++i) {
            const auto rwin = row_kv.span().subspan(i, rp + 2);
            const int loc = j - i;
            for (int c = 0; c < ncol; ++c) {
                const auto cwin = col_kv.span().subspan(c, cp + 2);
                double lo, hi;
                if (!detail::clip_supports(rwin, cwin, I, lo, hi)) continue;
                if (rp == k) {
                    out(i, c) += detail::d_pc_product(k, rwin, cwin, cp, loc,
                                                      std::nullopt, I);
                } else {
                    auto part = detail::window_partition(rwin, cwin, lo, hi);
                    out(i, c) += integrate_piecewise(
                        [&](double x) {
                            const double di =
                                (k == 0) ? detail::eval_dknot_v(rp, rwin, loc, x)
                                         : detail::eval_dknot_dx_v(rp, rwin, loc, x);
                            return di * detail::eval_dx_v(cp, cwin, x, k);
                        },
                        part, (rp - k) + (cp - k));
                }
            }
        }
    };

    if (!same_patch) {
        row_side(D);
        return D;
    }
    if (rp == k) {
        // shared knot vector, piecewise-constant factors: full cellwise rule
        for (int i = 0; i < nrow; ++i)
            for (int c = 0; c < ncol; ++c) {
                std::optional<int> rloc, cloc;
                if (j >= i && j <= i + rp + 1) rloc = j - i;
                if (j >= c && j <= c + cp + 1) cloc = j - c;
                if (!rloc && !cloc) continue;
                D(i, c) = detail::d_pc_product(k, row_kv.span().subspan(i, rp + 2),
                                               col_kv.span().subspan(c, cp + 2), cp, rloc,
                                               cloc, I);
            }
        return D;
    }
    row_side(D);
    Eigen::MatrixXd full = D + D.transpose();
    return full;
}

/// Derivative of assemble_linear_1d with respect to knot j. Degrees above
/// the kernel order interchange differentiation and integration; degree
/// equal to the order uses the cellwise rule (continuous data required).
inline Eigen::VectorXd d_assemble_linear_dknot(const linear_kernel& kernel,
                                               const knot_vector& kv, int p, int j,
                                               interval I, bool* depth_warning = nullptr) {
    if (kernel.k > p) throw order_error("kernel derivative order exceeds the basis degree");
    const int n = static_cast<int>(kv.size()) - p - 1;
    if (j < 0 || j >= static_cast<int>(kv.size()))
        throw range_error("knot index outside the vector");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (int i = std::max(0, j - p - 1); i <= std::min(n - 1, j); ++i) {
        const auto win = kv.span().subspan(i, p + 2);
        const int loc = j - i;
        const double lo = std::max(win.front(), I[0]);
        const double hi = std::min(win.back(), I[1]);
        if (hi <= lo) continue;
        if (p == kernel.k) {
            out(i) = detail::d_pc_linear(kernel.k, win, loc, kernel.data, I);
            continue;
        }
        auto part = make_partition(win, lo, hi);
        double acc = 0.0;
        for (std::size_t c = 0; c + 1 < part.points.size(); ++c) {
            auto r = adaptive_simpson(
                [&](double x) {
                    const double di = (kernel.k == 0)
                                          ? detail::eval_dknot_v(p, win, loc, x)
                                          : detail::eval_dknot_dx_v(p, win, loc, x);
                    return kernel.data(x) * di;
                },
                part.points[c], part.points[c + 1], 1e-12);
            acc += r.value;
            if (!r.converged && depth_warning) *depth_warning = true;
        }
        out(i) = acc;
    }
    return out;
}

/// Assembled 1D factor matrices and load vectors of a separable form on a
/// multi-patch space; the d-dimensional operator is applied by sum
/// factorisation and never materialised.
struct assembled_operator {
    const multi_patch_space* space = nullptr;
    // a_blocks[term][s][sp][axis]: rows index patch s, cols patch sp
    std::vector<std::vector<std::vector<std::vector<Eigen::MatrixXd>>>> a_blocks;
    // load_factors[term][s][axis]
    std::vector<std::vector<std::vector<Eigen::VectorXd>>> load_factors;
    Eigen::VectorXd F;
    bool quad_warning = false;

    Eigen::VectorXd apply(const Eigen::VectorXd& W) const {
        const auto& sp = *space;
        const int d = sp.dim();
        Eigen::VectorXd Y = Eigen::VectorXd::Zero(W.size());
        for (const auto& term : a_blocks)
            for (int s = 0; s < sp.patch_count(); ++s) {
                const long off_s = sp.patch_offset(s);
                for (int q = 0; q < sp.patch_count(); ++q) {
                    const long off_q = sp.patch_offset(q);
                    tensor T = tensor::zeros(sp.patches[q].basis_dims());
                    for (long i = 0; i < static_cast<long>(T.data.size()); ++i)
                        T.data[i] = W(off_q + i);
                    for (int t = 0; t < d; ++t) T = mode_apply(term[s][q][t], T, t);
                    for (long i = 0; i < static_cast<long>(T.data.size()); ++i)
                        Y(off_s + i) += T.data[i];
                }
            }
        return Y;
    }

    /// (W^T A W, F^T W)
    std::pair<double, double> energy_terms(const Eigen::VectorXd& W) const {
        return {W.dot(apply(W)), F.dot(W)};
    }
};

/// Assemble all 1D factors of the form on the current knot configuration.
inline assembled_operator assemble(const multi_patch_space& space,
                                   const separable_form& form) {
    assembled_operator op;
    op.space = &space;
    const int d = space.dim();
    const int r = space.patch_count();

    op.a_blocks.resize(form.a_terms.size());
    for (std::size_t term = 0; term < form.a_terms.size(); ++term) {
        auto& blocks = op.a_blocks[term];
        blocks.assign(r, std::vector<std::vector<Eigen::MatrixXd>>(r));
        for (int s = 0; s < r; ++s)
            for (int q = s; q < r; ++q) {
                std::vector<Eigen::MatrixXd> axis(d);
                for (int t = 0; t < d; ++t)
                    axis[t] = assemble_bilinear_1d(
                        form.a_terms[term][t], space.patches[s].knots[t],
                        space.patches[s].degrees[t], space.patches[q].knots[t],
                        space.patches[q].degrees[t], space.domain[t]);
                if (q != s) {
                    std::vector<Eigen::MatrixXd> mirrored(d);
                    for (int t = 0; t < d; ++t) mirrored[t] = axis[t].transpose();
                    blocks[q][s] = std::move(mirrored);
                }
                blocks[s][q] = std::move(axis);
            }
    }

    op.load_factors.resize(form.l_terms.size());
    op.F = Eigen::VectorXd::Zero(space.dim_weights());
    for (std::size_t term = 0; term < form.l_terms.size(); ++term) {
        auto& lf = op.load_factors[term];
        lf.resize(r);
        for (int s = 0; s < r; ++s) {
            lf[s].resize(d);
            for (int t = 0; t < d; ++t)
                lf[s][t] = assemble_linear_1d(form.l_terms[term][t],
                                              space.patches[s].knots[t],
                                              space.patches[s].degrees[t],
                                              space.domain[t], &op.quad_warning);
            // accumulate the outer product into the global load
            const auto dims = space.patches[s].basis_dims();
            const long off = space.patch_offset(s);
            std::vector<int> idx(d, 0);
            while (true) {
                double prod = 1.0;
                long flat = 0;
                for (int t = 0; t < d; ++t) {
                    prod *= lf[s][t](idx[t]);
                    flat = flat * dims[t] + idx[t];
                }
                op.F(off + flat) += prod;
                int t = d - 1;
                while (t >= 0 && ++idx[t] == dims[t]) idx[t--] = 0;
                if (t < 0) break;
            }
        }
    }
    return op;
}

/// Discrete energy 1/2 W^T A W - F^T W.
inline double energy_value(const assembled_operator& op, const Eigen::VectorXd& W) {
    auto [aww, fw] = op.energy_terms(W);
    return 0.5 * aww - fw;
}

/// Partial gradient of the energy with respect to the free knots, at
/// fixed W. Entries for fixed knots never appear (they are not free).
inline Eigen::VectorXd grad_knots(const multi_patch_space& space, const separable_form& form,
                                  const assembled_operator& op, const Eigen::VectorXd& W) {
    const int d = space.dim();
    const int r = space.patch_count();
    const auto refs = space.free_knots();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(refs.size());

    // patch views of W
    std::vector<tensor> Wt(r);
    for (int s = 0; s < r; ++s) {
        Wt[s] = tensor::zeros(space.patches[s].basis_dims());
        const long off = space.patch_offset(s);
        for (long i = 0; i < static_cast<long>(Wt[s].data.size()); ++i)
            Wt[s].data[i] = W(off + i);
    }

    // Q[term][s][q][t](rowbasis_s_t, colbasis_q_t): contraction of all other axes
    std::vector<std::vector<std::vector<std::vector<Eigen::MatrixXd>>>> Q(
        form.a_terms.size());
    for (std::size_t term = 0; term < form.a_terms.size(); ++term) {
        Q[term].assign(r, std::vector<std::vector<Eigen::MatrixXd>>(
                              r, std::vector<Eigen::MatrixXd>(d)));
        for (int s = 0; s < r; ++s)
            for (int q = 0; q < r; ++q)
                for (int t = 0; t < d; ++t) {
                    tensor Y = Wt[q];
                    for (int u = 0; u < d; ++u)
                        if (u != t) Y = mode_apply(op.a_blocks[term][s][q][u], Y, u);
                    Q[term][s][q][t] = contract_all_but(Wt[s], Y, t);
                }
    }

    // per-axis load contractions: ql[term][s][t](i) pairs W_s against the
    // other-axis load factors
    std::vector<std::vector<std::vector<Eigen::VectorXd>>> ql(form.l_terms.size());
    for (std::size_t term = 0; term < form.l_terms.size(); ++term) {
        ql[term].assign(r, std::vector<Eigen::VectorXd>(d));
        for (int s = 0; s < r; ++s)
            for (int t = 0; t < d; ++t) {
                tensor Y = Wt[s];
                for (int u = 0; u < d; ++u)
                    if (u != t) {
                        Eigen::MatrixXd row = op.load_factors[term][s][u].transpose();
                        Y = mode_apply(row, Y, u);
                    }
                Eigen::VectorXd v(Y.dims[t]);
                for (int i = 0; i < Y.dims[t]; ++i) v(i) = Y.data[i];
                ql[term][s][t] = std::move(v);
            }
    }

    for (std::size_t m = 0; m < refs.size(); ++m) {
        const auto [s, t, j] = refs[m];
        double g = 0.0;
        for (std::size_t term = 0; term < form.a_terms.size(); ++term)
            for (int q = 0; q < r; ++q) {
                const Eigen::MatrixXd D = d_assemble_bilinear_dknot(
                    form.a_terms[term][t], space.patches[s].knots[t],
                    space.patches[s].degrees[t], space.patches[q].knots[t],
                    space.patches[q].degrees[t], j, q == s, space.domain[t]);
                const double contrib = D.cwiseProduct(Q[term][s][q][t]).sum();
                g += (q == s ? 0.5 : 1.0) * contrib;
            }
        for (std::size_t term = 0; term < form.l_terms.size(); ++term) {
            const Eigen::VectorXd dv = d_assemble_linear_dknot(
                form.l_terms[term][t], space.patches[s].knots[t],
                space.patches[s].degrees[t], j, space.domain[t]);
            g -= dv.dot(ql[term][s][t]);
        }
        grad(m) = g;
    }
    return grad;
}

} // namespace freeknot
