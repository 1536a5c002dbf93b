#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "freeknot/assembly.hpp"
#include "freeknot/constraints.hpp"

namespace freeknot {

struct optim_config {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
    double warmup_scale = 50.0; // eta(t) = (1 - exp(-t/scale)) * lr
    int max_iters = 1000;
    double stop_tol = 1e-6; // knot displacement; 1e-6 in 1D, 1e-4 in 2D
    double cg_tol = 1e-12;
    int cg_cap = 100;         // between full solves
    int full_solve_period = 25;
};

inline double lr_schedule(const optim_config& cfg, int t) {
    return (1.0 - std::exp(-t / cfg.warmup_scale)) * cfg.lr;
}

struct cg_result {
    Eigen::VectorXd W;
    double rel_residual = 0.0;
    int iters = 0;
};

/// Conjugate gradients on an SPD operator, warm-started from W0; stops at
/// relative residual `tol` or after `max_iters` iterations.
template <class ApplyFn>
cg_result cg_solve(ApplyFn&& apply, const Eigen::VectorXd& F, Eigen::VectorXd W0,
                   double tol, int max_iters) {
    cg_result out;
    const double fnorm = F.norm();
    if (fnorm == 0.0) {
        out.W = Eigen::VectorXd::Zero(F.size());
        return out;
    }
    Eigen::VectorXd W = std::move(W0);
    Eigen::VectorXd r = F - apply(W);
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    int it = 0;
    while (std::sqrt(rr) / fnorm > tol && it < max_iters) {
        const Eigen::VectorXd Ap = apply(p);
        const double pap = p.dot(Ap);
        if (!std::isfinite(pap) || pap < -1e-14 * p.squaredNorm())
            throw divergence_error("conjugate gradients hit a non-positive curvature");
        if (pap <= 0.0) break; // stalled on a singular direction
        const double alpha = rr / pap;
        W += alpha * p;
        r -= alpha * Ap;
        const double rr_new = r.squaredNorm();
        if (!std::isfinite(rr_new))
            throw divergence_error("conjugate gradients produced non-finite values");
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        ++it;
    }
    out.W = std::move(W);
    out.rel_residual = std::sqrt(rr) / fnorm;
    out.iters = it;
    return out;
}

/// Discrete energy at explicit free-knot parameters (scatters, assembles,
/// evaluates). Convenience entry point for finite-difference checks.
inline double energy(multi_patch_space space, const separable_form& form,
                     std::span<const double> xi, const Eigen::VectorXd& W) {
    space.set_free_knots(xi);
    return energy_value(assemble(space, form), W);
}

/// Knot gradient at explicit free-knot parameters, fixed W.
inline Eigen::VectorXd grad_knots(multi_patch_space space, const separable_form& form,
                                  std::span<const double> xi, const Eigen::VectorXd& W) {
    space.set_free_knots(xi);
    auto op = assemble(space, form);
    return grad_knots(space, form, op, W);
}

struct adam_state {
    Eigen::VectorXd m, v;
    int t = 0;
};

/// Bias-corrected ADAM proposal: returns the increment to add to the
/// parameters, scaled by the warm-up schedule at step t.
inline Eigen::VectorXd adam_step(adam_state& st, const Eigen::VectorXd& g,
                                 const optim_config& cfg, int t) {
    if (st.m.size() == 0) {
        st.m = Eigen::VectorXd::Zero(g.size());
        st.v = Eigen::VectorXd::Zero(g.size());
    }
    st.t = t;
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * g;
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const double eta = lr_schedule(cfg, t);
    Eigen::VectorXd step(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double mhat = st.m(i) / bc1;
        const double vhat = st.v(i) / bc2;
        step(i) = -eta * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    return step;
}

struct trace_row {
    int iter = 0;
    double energy = 0.0;
    double best_energy = 0.0;
    double displacement = 0.0;
    double cross_gap = 0.0;
    std::vector<double> knots;
};

struct minimise_result {
    std::vector<double> best_xi;
    Eigen::VectorXd best_W;
    double best_energy = 0.0;
    int iterations = 0;
    bool aborted = false;
    bool early_stopped = false;
    bool quad_warning = false;
    std::vector<trace_row> trace;
};

/// Projected-ADAM outer loop over the knots with an inner CG solve for
/// the weights: full-precision solve every `full_solve_period` iterations,
/// capped warm-started CG in between. Retains the lowest-energy iterate;
/// stops early once the knot displacement falls below `stop_tol`.
inline minimise_result minimise(multi_patch_space space, const separable_form& form,
                                const feasible_set& fset, const optim_config& cfg) {
    minimise_result out;
    std::vector<double> xi = space.gather_free();
    if (!fset.is_feasible(xi))
        throw infeasible_error("minimise requires a feasible starting point");

    const long n_w = space.dim_weights();
    Eigen::VectorXd W = Eigen::VectorXd::Zero(n_w);
    adam_state adam;
    out.best_energy = std::numeric_limits<double>::infinity();

    const int full_cap = std::max<long>(1000, 10 * n_w);
    for (int t = 1; t <= cfg.max_iters; ++t) {
        try {
            auto op = assemble(space, form);
            out.quad_warning = out.quad_warning || op.quad_warning;
            const bool full = ((t - 1) % cfg.full_solve_period) == 0;
            auto sol = cg_solve([&](const Eigen::VectorXd& y) { return op.apply(y); },
                                op.F, std::move(W), cfg.cg_tol,
                                full ? full_cap : cfg.cg_cap);
            W = std::move(sol.W);
            const double e = energy_value(op, W);
            if (!std::isfinite(e)) throw divergence_error("non-finite energy");
            if (e < out.best_energy) {
                out.best_energy = e;
                out.best_xi = xi;
                out.best_W = W;
            }

            const Eigen::VectorXd g = grad_knots(space, form, op, W);
            const Eigen::VectorXd step = adam_step(adam, g, cfg, t);
            std::vector<double> proposal(xi);
            for (std::size_t i = 0; i < proposal.size(); ++i) proposal[i] += step(i);
            const auto next = fset.project(proposal);

            double disp2 = 0.0;
            for (std::size_t i = 0; i < xi.size(); ++i) {
                const double d = next[i] - xi[i];
                disp2 += d * d;
            }
            const double disp = std::sqrt(disp2);

            out.trace.push_back({t, e, out.best_energy, disp, cross_patch_gap(space), xi});
            out.iterations = t;

            xi = next;
            space.set_free_knots(xi);
            if (disp < cfg.stop_tol) {
                out.early_stopped = true;
                break;
            }
        } catch (const error&) {
            out.aborted = true; // best snapshot so far is still returned
            break;
        }
    }
    if (out.best_xi.empty()) {
        out.best_xi = xi;
        out.best_W = Eigen::VectorXd::Zero(n_w);
        out.best_energy = std::numeric_limits<double>::quiet_NaN();
        out.aborted = true;
    }
    return out;
}

} // namespace freeknot
