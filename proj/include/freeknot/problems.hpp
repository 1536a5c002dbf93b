#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "freeknot/energy_opt.hpp"
#include "freeknot/quadrature.hpp"
#include "freeknot/space.hpp"

namespace freeknot {

enum class problem_kind { l2_approx, poisson };

/// Rank-R sum of tensor products of 1D factors, each carrying its value
/// and first derivative.
struct separable_function {
    struct factor {
        std::function<double(double)> value;
        std::function<double(double)> deriv;
    };
    std::vector<std::vector<factor>> terms; // [term][axis]

    int rank() const { return static_cast<int>(terms.size()); }

    double operator()(std::span<const double> x) const {
        double total = 0.0;
        for (const auto& term : terms) {
            double prod = 1.0;
            for (std::size_t t = 0; t < term.size(); ++t) prod *= term[t].value(x[t]);
            total += prod;
        }
        return total;
    }

    double partial(std::span<const double> x, int axis) const {
        double total = 0.0;
        for (const auto& term : terms) {
            double prod = 1.0;
            for (std::size_t t = 0; t < term.size(); ++t)
                prod *= (static_cast<int>(t) == axis) ? term[t].deriv(x[t])
                                                      : term[t].value(x[t]);
            total += prod;
        }
        return total;
    }
};

/// One of the named benchmark problems: weak form kind, domain, separable
/// data (the target for approximation, the manufactured solution for
/// Poisson) and the cached exact energy norm.
struct problem_spec {
    std::string name;
    problem_kind kind = problem_kind::l2_approx;
    std::vector<interval> domain;
    separable_function exact; // target / manufactured solution
    bool has_exact = false;
    double exact_energy_norm_sq = 0.0; // a(u*, u*)

    int dim() const { return static_cast<int>(domain.size()); }
};

namespace detail {

/// Adaptive 1D integral of a factor product, pre-segmented so narrow
/// transitions in the data cannot slip between the coarse sample points.
inline double pair_integral(const separable_function::factor& a,
                            const separable_function::factor& b, interval I, bool deriv,
                            double tol = 1e-12, int segments = 256) {
    auto f = [&](double x) {
        const double va = deriv ? a.deriv(x) : a.value(x);
        const double vb = deriv ? b.deriv(x) : b.value(x);
        return va * vb;
    };
    double total = 0.0;
    for (int k = 0; k < segments; ++k) {
        const double u = I[0] + (I[1] - I[0]) * k / segments;
        const double v = I[0] + (I[1] - I[0]) * (k + 1) / segments;
        const double coarse = std::abs((v - u) / 6.0 * (f(u) + 4.0 * f(0.5 * (u + v)) + f(v)));
        const double seg_tol = std::max(tol / segments, 1e-15 * coarse);
        total += adaptive_simpson(f, u, v, seg_tol).value;
    }
    return total;
}

/// a(u, u) for separable u: L2 product for approximation, the gradient
/// product for Poisson; cross-rank terms included.
inline double separable_energy_norm_sq(const separable_function& u,
                                       const std::vector<interval>& domain,
                                       problem_kind kind) {
    const int d = static_cast<int>(domain.size());
    const int R = u.rank();
    double total = 0.0;
    const int dmax = (kind == problem_kind::poisson) ? d : 1;
    for (int tp = 0; tp < dmax; ++tp)
        for (int s = 0; s < R; ++s)
            for (int q = 0; q < R; ++q) {
                double prod = 1.0;
                for (int t = 0; t < d; ++t) {
                    const bool dv = (kind == problem_kind::poisson) && (t == tp);
                    prod *= pair_integral(u.terms[s][t], u.terms[q][t], domain[t], dv);
                }
                total += prod;
            }
    return total;
}

} // namespace detail

/// Weak-form kernels of a problem: mass tensor for approximation, the
/// gradient-product sum for Poisson; the load realises l(v) = a(u*, v).
inline separable_form build_form(const problem_spec& problem) {
    const int d = problem.dim();
    separable_form form;
    if (problem.kind == problem_kind::l2_approx) {
        form.a_terms.push_back(std::vector<bilinear_kernel>(d, bilinear_kernel{0}));
        for (const auto& term : problem.exact.terms) {
            std::vector<linear_kernel> lk;
            for (int t = 0; t < d; ++t) lk.push_back({0, term[t].value});
            form.l_terms.push_back(std::move(lk));
        }
    } else {
        for (int tp = 0; tp < d; ++tp) {
            std::vector<bilinear_kernel> ak;
            for (int t = 0; t < d; ++t) ak.push_back({t == tp ? 1 : 0});
            form.a_terms.push_back(std::move(ak));
            for (const auto& term : problem.exact.terms) {
                std::vector<linear_kernel> lk;
                for (int t = 0; t < d; ++t)
                    lk.push_back(t == tp ? linear_kernel{1, term[t].deriv}
                                         : linear_kernel{0, term[t].value});
                form.l_terms.push_back(std::move(lk));
            }
        }
    }
    return form;
}

/// Differentiability gate from the data regularity and the patch layout:
/// approximation needs degree >= 1 on several patches (>= 0 on a single
/// patch with continuous data); Poisson needs degree >= 2 on several
/// patches (>= 1 on a single patch).
inline void degree_gate(const problem_spec& problem, const multi_patch_space& space) {
    const bool single = space.patch_count() == 1;
    int min_degree = std::numeric_limits<int>::max();
    for (const auto& p : space.patches)
        for (int deg : p.degrees) min_degree = std::min(min_degree, deg);
    if (problem.kind == problem_kind::poisson) {
        if (min_degree < 1)
            throw capability_error("Poisson needs H1-conforming degrees (>= 1)");
        if (!single && min_degree < 2)
            throw capability_error(
                "multi-patch Poisson energy is differentiable only for degrees >= 2");
    } else {
        if (!single && min_degree < 1)
            throw capability_error(
                "multi-patch approximation energy is differentiable only for degrees >= 1");
    }
}

inline bool degree_gate_ok(const problem_spec& problem, const multi_patch_space& space,
                           std::string* reason = nullptr) {
    try {
        degree_gate(problem, space);
        return true;
    } catch (const capability_error& e) {
        if (reason) *reason = e.what();
        return false;
    }
}

namespace detail {

/// Composite Gauss integration over one axis: every break cell is
/// pre-split down to `max_width` and integrated with a fixed 10-point
/// rule. The difference integrands of the error metrics are smooth per
/// cell but carry cancellation noise, which rules out Richardson-style
/// adaptivity; a fixed composite rule on the break partition is exact to
/// that noise level.
template <class F>
double composite_gauss_cells(F&& f, const break_partition& part, double max_width) {
    const auto& rule = gauss_rule(10);
    double total = 0.0;
    const auto& pts = part.points;
    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
        const double a = pts[c], b = pts[c + 1];
        if (a == b) continue;
        const int splits = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
        for (int k = 0; k < splits; ++k) {
            const double u = a + (b - a) * k / splits;
            const double v = a + (b - a) * (k + 1) / splits;
            const double mid = 0.5 * (u + v), half = 0.5 * (v - u);
            double cell = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                cell += rule.weights[q] * f(mid + half * rule.nodes[q]);
            total += half * cell;
        }
    }
    return total;
}

/// Integral of a pointwise integrand over the domain on the merged break
/// grid of the space, pre-split to the benchmark feature scale.
inline double integrate_over_domain(const multi_patch_space& space,
                                    const std::function<double(std::span<const double>)>& f) {
    const int d = space.dim();
    if (d == 1) {
        const double w0 = (space.domain[0][1] - space.domain[0][0]) / 256.0;
        break_partition part{axis_breaks(space, 0)};
        return composite_gauss_cells(
            [&](double x) {
                const double pt[] = {x};
                return f(pt);
            },
            part, w0);
    }
    if (d != 2) throw capability_error("domain integration implemented for d <= 2");
    const double w0 = (space.domain[0][1] - space.domain[0][0]) / 128.0;
    const double w1 = (space.domain[1][1] - space.domain[1][0]) / 128.0;
    break_partition px{axis_breaks(space, 0)}, py{axis_breaks(space, 1)};
    auto inner = [&](double x) {
        return composite_gauss_cells(
            [&](double y) {
                const double pt[] = {x, y};
                return f(pt);
            },
            py, w1);
    };
    return composite_gauss_cells(inner, px, w0);
}

} // namespace detail

struct error_report {
    bool available = false;
    double energy_norm = std::numeric_limits<double>::quiet_NaN();
    double energy_norm_direct = std::numeric_limits<double>::quiet_NaN();
    double l2 = std::numeric_limits<double>::quiet_NaN();
};

/// Errors of the discrete solution W on the current knot configuration:
/// the energy-norm error through the assembled quadratic form, the same
/// quantity by direct quadrature of the difference (robust when the error
/// is tiny), and the L2 error on the merged break partition.
inline error_report error_metrics(const problem_spec& problem,
                                  const multi_patch_space& space, const separable_form& form,
                                  const Eigen::VectorXd& W) {
    error_report rep;
    if (!problem.has_exact) return rep;
    rep.available = true;

    auto op = assemble(space, form);
    auto [aww, fw] = op.energy_terms(W);
    const double residual_sq = aww - 2.0 * fw + problem.exact_energy_norm_sq;
    const double cancellation_floor =
        64.0 * std::numeric_limits<double>::epsilon() *
        (std::abs(aww) + 2.0 * std::abs(fw) + problem.exact_energy_norm_sq);
    rep.energy_norm = std::sqrt(std::max(0.0, residual_sq));

    std::span<const double> wspan(W.data(), W.size());
    auto diff_sq = [&](std::span<const double> x) {
        const double d = realise(space, wspan, x) - problem.exact(x);
        return d * d;
    };
    rep.l2 = std::sqrt(std::max(0.0, detail::integrate_over_domain(space, diff_sq)));

    if (problem.kind == problem_kind::l2_approx) {
        rep.energy_norm_direct = rep.l2;
    } else {
        double total = 0.0;
        for (int t = 0; t < space.dim(); ++t) {
            auto grad_diff_sq = [&](std::span<const double> x) {
                const double d = realise_dx(space, wspan, x, t) - problem.exact.partial(x, t);
                return d * d;
            };
            total += detail::integrate_over_domain(space, grad_diff_sq);
        }
        rep.energy_norm_direct = std::sqrt(std::max(0.0, total));
    }
    // below the cancellation floor the quadratic form carries no signal;
    // the direct quadrature evaluates the same quantity accurately
    if (residual_sq < cancellation_floor) rep.energy_norm = rep.energy_norm_direct;
    return rep;
}

namespace detail {

inline separable_function::factor poly_envelope_factor() {
    return {[](double x) { return x * x - 1.0; }, [](double x) { return 2.0 * x; }};
}

} // namespace detail

/// The named benchmark problems.
inline problem_spec make_problem(const std::string& name) {
    using factor = separable_function::factor;
    problem_spec p;
    p.name = name;

    if (name == "approx1d" || name == "approx1d-smooth") {
        p.kind = problem_kind::l2_approx;
        p.domain = {interval{-1.0, 1.0}};
        const bool smooth = (name == "approx1d-smooth");
        factor f;
        if (smooth) {
            f.value = [](double x) { return std::sin(2 * x + 0.4); };
            f.deriv = [](double x) { return 2 * std::cos(2 * x + 0.4); };
        } else {
            const double eps = 0.01;
            f.value = [eps](double x) {
                const double s = std::sin(2 * x + 0.4);
                return s * s / std::sqrt(s * s + eps);
            };
            f.deriv = [eps](double x) {
                const double s = std::sin(2 * x + 0.4);
                const double ds = 2 * std::cos(2 * x + 0.4);
                const double r = std::sqrt(s * s + eps);
                return ds * (s / r + s * eps / (r * r * r));
            };
        }
        p.exact.terms = {{f}};
    } else if (name == "poisson1d" || name == "poisson1d-smooth") {
        p.kind = problem_kind::poisson;
        p.domain = {interval{-1.0, 1.0}};
        const double a = (name == "poisson1d") ? 100.0 : 2.0;
        factor f;
        f.value = [a](double x) {
            return (x * x - 1.0) * std::tanh(a * std::sin(x - 0.3));
        };
        f.deriv = [a](double x) {
            const double T = std::tanh(a * std::sin(x - 0.3));
            return 2 * x * T + (x * x - 1.0) * a * std::cos(x - 0.3) * (1.0 - T * T);
        };
        p.exact.terms = {{f}};
    } else if (name == "approx2d") {
        p.kind = problem_kind::l2_approx;
        p.domain = {interval{-1.0, 1.0}, interval{-1.0, 1.0}};
        // truncated expansion of exp(-alpha (g - h)^2), g = cos(pi x + 1), h = 3y
        const double alpha = 5.0;
        const int N = 10;
        double coeff = 1.0; // (2 alpha)^k / k!
        for (int k = 0; k <= N; ++k) {
            if (k > 0) coeff *= 2.0 * alpha / k;
            factor fx, fy;
            fx.value = [alpha, k, coeff](double x) {
                const double g = std::cos(M_PI * x + 1.0);
                return coeff * std::exp(-alpha * g * g) * std::pow(g, k);
            };
            fx.deriv = [alpha, k, coeff](double x) {
                const double g = std::cos(M_PI * x + 1.0);
                const double dg = -M_PI * std::sin(M_PI * x + 1.0);
                const double base = coeff * std::exp(-alpha * g * g);
                const double poly = (k > 0 ? k * std::pow(g, k - 1) : 0.0) -
                                    2.0 * alpha * std::pow(g, k + 1);
                return base * dg * poly;
            };
            fy.value = [alpha, k](double y) {
                const double h = 3.0 * y;
                return std::exp(-alpha * h * h) * std::pow(h, k);
            };
            fy.deriv = [alpha, k](double y) {
                const double h = 3.0 * y;
                const double base = std::exp(-alpha * h * h);
                const double poly = (k > 0 ? k * std::pow(h, k - 1) : 0.0) -
                                    2.0 * alpha * std::pow(h, k + 1);
                return base * 3.0 * poly;
            };
            p.exact.terms.push_back({fx, fy});
        }
    } else if (name == "poisson2d-tanh") {
        p.kind = problem_kind::poisson;
        p.domain = {interval{-1.0, 1.0}, interval{-1.0, 1.0}};
        auto env = detail::poly_envelope_factor(); // x^2 - 1 (sign absorbed pairwise)
        auto tanh_f = [](double scale, double shift, bool one_minus) {
            factor f;
            f.value = [=](double x) {
                const double T = std::tanh(scale * (x - shift));
                return one_minus ? 1.0 - T : T;
            };
            f.deriv = [=](double x) {
                const double T = std::tanh(scale * (x - shift));
                const double dT = scale * (1.0 - T * T);
                return one_minus ? -dT : dT;
            };
            return f;
        };
        auto mul = [](const factor& a, const factor& b) {
            factor f;
            f.value = [=](double x) { return a.value(x) * b.value(x); };
            f.deriv = [=](double x) {
                return a.deriv(x) * b.value(x) + a.value(x) * b.deriv(x);
            };
            return f;
        };
        // u0 v with u0 = (1-x^2)(1-y^2) = (x^2-1)(y^2-1)
        p.exact.terms = {
            {mul(env, tanh_f(20.0, 0.3, true)), mul(env, tanh_f(50.0, -0.3, true))},
            {mul(env, tanh_f(50.0, -0.7, false)), mul(env, tanh_f(20.0, 0.6, true))}};
    } else if (name == "poisson2d-peak") {
        p.kind = problem_kind::poisson;
        p.domain = {interval{-1.0, 1.0}, interval{-1.0, 1.0}};
        // cos(x+y) = cos x cos y - sin x sin y
        auto make = [](double center, double scale, bool use_sin, double sign) {
            factor f;
            f.value = [=](double x) {
                const double e = std::exp(-scale * (x - center) * (x - center));
                const double trig = use_sin ? std::sin(x) : std::cos(x);
                return sign * (x * x - 1.0) * e * trig;
            };
            f.deriv = [=](double x) {
                const double e = std::exp(-scale * (x - center) * (x - center));
                const double trig = use_sin ? std::sin(x) : std::cos(x);
                const double dtrig = use_sin ? std::cos(x) : -std::sin(x);
                return sign * e *
                       (2 * x * trig +
                        (x * x - 1.0) * (dtrig - 2.0 * scale * (x - center) * trig));
            };
            return f;
        };
        p.exact.terms = {{make(-0.3, 3.0, false, 1.0), make(0.5, 1.0, false, 1.0)},
                         {make(-0.3, 3.0, true, -1.0), make(0.5, 1.0, true, 1.0)}};
    } else {
        throw io_error("unknown problem: " + name);
    }

    p.has_exact = true;
    p.exact_energy_norm_sq = detail::separable_energy_norm_sq(p.exact, p.domain, p.kind);
    return p;
}

/// Names accepted by make_problem.
inline std::vector<std::string> problem_names() {
    return {"approx1d",  "approx1d-smooth", "poisson1d",     "poisson1d-smooth",
            "approx2d",  "poisson2d-tanh",  "poisson2d-peak"};
}

} // namespace freeknot
