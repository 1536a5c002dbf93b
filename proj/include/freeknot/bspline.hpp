#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "freeknot/errors.hpp"
#include "freeknot/knots.hpp"

namespace freeknot {

/// Evaluation side at breakpoints: `right` is the half-open convention
/// [a, b); `left` gives the limit from below (used for one-sided values
/// and for closing the rightmost interval of a space).
enum class side { right, left };

/// Scalar function with derivatives up to max_order, as needed by
/// confluent divided differences.
struct smooth_fn {
    std::function<double(double)> value;
    std::function<double(int, double)> deriv; // order r >= 1
    int max_order = 0;
};

namespace detail {

inline double heaviside(double t, side s) {
    return (s == side::right) ? (t > 0.0 ? 1.0 : 0.0) : (t >= 0.0 ? 1.0 : 0.0);
}

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

} // namespace detail

/// y -> (y - x)_+^p, with derivatives up to order p. The order-p
/// derivative is p! H(y - x) with H(0) fixed by `s`.
inline smooth_fn truncated_power(int p, double x, side s = side::right) {
    smooth_fn f;
    f.max_order = p;
    if (p == 0) {
        f.value = [x, s](double y) { return detail::heaviside(y - x, s); };
        f.deriv = [](int, double) -> double {
            throw capability_error("truncated power of degree 0 has no pointwise derivative");
        };
    } else {
        f.value = [p, x](double y) { return y > x ? std::pow(y - x, p) : 0.0; };
        f.deriv = [p, x, s](int r, double y) {
            if (r > p) throw capability_error("derivative order exceeds truncated-power degree");
            double c = 1.0;
            for (int i = 0; i < r; ++i) c *= (p - i);
            if (r == p) return c * detail::heaviside(y - x, s);
            return y > x ? c * std::pow(y - x, p - r) : 0.0;
        };
    }
    return f;
}

namespace detail {

/// Confluent Newton table over non-decreasing abscissae. Repeated
/// abscissae take D^j f / j! directly instead of a difference quotient.
inline double divided_difference_v(std::span<const double> y, const smooth_fn& f) {
    const int m = static_cast<int>(y.size());
    if (m == 0) throw arity_error("divided difference needs at least one abscissa");
    std::vector<double> c(m);
    for (int i = 0; i < m; ++i) c[i] = f.value(y[i]);
    for (int j = 1; j < m; ++j) {
        for (int i = m - 1; i >= j; --i) {
            if (y[i] != y[i - j]) {
                c[i] = (c[i] - c[i - 1]) / (y[i] - y[i - j]);
            } else {
                if (j > f.max_order)
                    throw capability_error("repeated abscissae need derivative order " +
                                           std::to_string(j));
                c[i] = f.deriv(j, y[i]) / factorial(j);
            }
        }
    }
    return c[m - 1];
}

inline double bspline_cdb(int p, std::span<const double> win, double x, side s);

/// N_p(win)(x) = [win](. - x)_+^p for a window of p+2 knots. Evaluated as
/// B_p / |win| through the Cox-De Boor recursion, which is a chain of
/// convex combinations and therefore stabler than the divided-difference
/// table when knots nearly coincide.
inline double nspline(int p, std::span<const double> win, double x, side s = side::right) {
    if (static_cast<int>(win.size()) != p + 2)
        throw arity_error("N-spline window must hold degree+2 knots");
    if (win.back() == win.front())
        throw distributional_error("N-spline on a zero-width window is a distribution");
    if (x < win.front() || x > win.back()) return 0.0;
    return bspline_cdb(p, win, x, s) / (win.back() - win.front());
}

/// Cox-De Boor recursion on a single window of p+2 knots; terms with a
/// zero denominator are zero.
inline double bspline_cdb(int p, std::span<const double> win, double x, side s = side::right) {
    if (static_cast<int>(win.size()) != p + 2)
        throw arity_error("B-spline window must hold degree+2 knots");
    if (x < win.front() || x > win.back()) return 0.0;
    std::vector<double> n(p + 1);
    for (int j = 0; j <= p; ++j) {
        const bool in = (s == side::right) ? (win[j] <= x && x < win[j + 1])
                                           : (win[j] < x && x <= win[j + 1]);
        n[j] = in ? 1.0 : 0.0;
    }
    for (int deg = 1; deg <= p; ++deg) {
        for (int j = 0; j <= p - deg; ++j) {
            double v = 0.0;
            const double dl = win[j + deg] - win[j];
            if (dl > 0.0) v += (x - win[j]) / dl * n[j];
            const double dr = win[j + deg + 1] - win[j + 1];
            if (dr > 0.0) v += (win[j + deg + 1] - x) / dr * n[j + 1];
            n[j] = v;
        }
    }
    return n[0];
}

/// One term of an N-spline expansion.
struct nterm {
    double coef;
    std::vector<double> win;
};

/// Expansion of d^k/dx^k B_p(win) as sum of coef * N_{p-k}(sub-window),
/// by k applications of the derivative recursion.
inline std::vector<nterm> dx_terms(int p, std::span<const double> win, int k) {
    if (k < 0 || k > p) throw order_error("spatial derivative order must lie in [0, degree]");
    std::vector<nterm> terms;
    const double w = width_v(win);
    if (w == 0.0) return terms; // B is identically zero
    terms.push_back({w, {win.begin(), win.end()}});
    for (int step = 0; step < k; ++step) {
        const int pe = p - step; // degree of the N factors being differentiated
        std::vector<nterm> next;
        next.reserve(2 * terms.size());
        for (const auto& t : terms) {
            if (t.coef == 0.0) continue;
            const double ww = width_v(t.win);
            if (ww == 0.0)
                throw distributional_error("derivative hit a zero-width window");
            const double c = t.coef * pe / ww;
            next.push_back({-c, drop_first_v(t.win)});
            next.push_back({+c, drop_last_v(t.win)});
        }
        terms = std::move(next);
    }
    return terms;
}

inline double eval_dx_v(int p, std::span<const double> win, double x, int k,
                        side s = side::right) {
    if (k == 0) return bspline_cdb(p, win, x, s);
    double v = 0.0;
    for (const auto& t : dx_terms(p, win, k)) v += t.coef * nspline(p - k, t.win, x, s);
    return v;
}

inline double eval_dknot_v(int p, std::span<const double> win, int i, double x,
                           side s = side::right) {
    if (p < 1) throw distributional_error("knot derivative of a degree-0 spline is a Dirac");
    if (i < 0 || i > p + 1) throw range_error("knot index outside the window");
    const auto dup = insert_v(win, win[i]);
    double v = 0.0;
    if (i != 0) v += nspline(p, drop_first_v(dup), x, s);
    if (i != p + 1) v -= nspline(p, drop_last_v(dup), x, s);
    return v;
}

inline double eval_dknot_dx_v(int p, std::span<const double> win, int i, double x,
                              side s = side::right) {
    if (p < 2) throw order_error("mixed knot/space derivative needs degree >= 2");
    if (i < 0 || i > p + 1) throw range_error("knot index outside the window");
    const auto dup = insert_v(win, win[i]);
    auto ddx_n = [&](const std::vector<double>& sigma) {
        const double w = width_v(sigma);
        if (w == 0.0)
            throw distributional_error("derivative hit a zero-width window");
        return -p / w * (nspline(p - 1, drop_first_v(sigma), x, s) -
                         nspline(p - 1, drop_last_v(sigma), x, s));
    };
    double v = 0.0;
    if (i != 0) v += ddx_n(drop_first_v(dup));
    if (i != p + 1) v -= ddx_n(drop_last_v(dup));
    return v;
}

} // namespace detail

/// Divided difference [y_1, ..., y_m] f over non-decreasing abscissae.
inline double divided_difference(const knot_vector& abscissae, const smooth_fn& f) {
    return detail::divided_difference_v(abscissae.span(), f);
}

/// B_p(knots)(x) via the Cox-De Boor recursion; zero outside the window.
inline double eval(int p, const knot_vector& knots, double x) {
    return detail::bspline_cdb(p, knots.span(), x);
}

/// N_p = B_p / |knots|; refuses zero-width windows (Dirac values).
inline double eval_normalised(int p, const knot_vector& knots, double x) {
    return detail::nspline(p, knots.span(), x);
}

/// k-th spatial derivative of B_p(knots) at x. For k = p the value is
/// piecewise constant and knots take the right-limit unless asked otherwise.
inline double eval_dx(int p, const knot_vector& knots, double x, int k = 1,
                      side s = side::right) {
    return detail::eval_dx_v(p, knots.span(), x, k, s);
}

/// Derivative of B_p(knots)(x) with respect to knot i (0-based).
inline double eval_dknot(int p, const knot_vector& knots, int i, double x) {
    return detail::eval_dknot_v(p, knots.span(), i, x);
}

/// Mixed derivative d/dknot_i d/dx B_p(knots)(x); needs p >= 2.
inline double eval_dknot_dx(int p, const knot_vector& knots, int i, double x) {
    return detail::eval_dknot_dx_v(p, knots.span(), i, x);
}

} // namespace freeknot
