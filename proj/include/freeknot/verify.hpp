#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "freeknot/bspline.hpp"
#include "freeknot/quadrature.hpp"
#include "freeknot/rng.hpp"

namespace freeknot {

/// Outcome of one numerically verified inequality family. For bound
/// checks the ratio is LHS / RHS of the displayed inequality; for
/// interchange checks it is (relative deviation) / (tolerance). A check
/// passes when the worst ratio stays below 1 + 1e-9.
struct bound_report {
    std::string lemma;
    int degree = 0;
    int samples = 0;
    struct sub_check {
        std::string name;
        int evaluated = 0;
        double max_ratio = 0.0;
        bool pass = true;
    };
    std::vector<sub_check> checks;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

constexpr double ratio_slack = 1.0 + 1e-9;

inline double cert_c(int p) { return 1.0 / std::sqrt(p + 1.0); } // C_p upper bound

/// Exact L2 norm of a spline-derived piecewise polynomial given its
/// breakpoint multiset and polynomial degree.
template <class F>
double l2_norm(F&& f, std::span<const double> breaks, int piece_degree) {
    auto part = make_partition(breaks, breaks.front(), breaks.back());
    const double v = integrate_piecewise([&](double x) { return f(x) * f(x); }, part,
                                         2 * piece_degree);
    return std::sqrt(std::max(0.0, v));
}

inline std::vector<double> sample_window(rng& r, int n, double h_min) {
    const double L = r.uniform(1.0, 10.0);
    std::vector<double> v(n);
    while (true) {
        for (auto& x : v) x = r.uniform(0.0, L);
        std::sort(v.begin(), v.end());
        if (min_gap_v(v) >= h_min) return v;
    }
}

inline void record(bound_report::sub_check& c, double ratio) {
    ++c.evaluated;
    c.max_ratio = std::max(c.max_ratio, ratio);
    c.pass = c.pass && (ratio <= ratio_slack);
}

} // namespace detail

/// Boundedness of B_p and its spatial/parametric/mixed derivatives under
/// a minimum-mesh-size floor, with the certified constants C_p.
inline bound_report check_boundedness(int p, int samples, double h_min,
                                      std::uint64_t seed = 0) {
    using namespace detail;
    bound_report rep;
    rep.lemma = "boundedness";
    rep.degree = p;
    rep.samples = samples;
    rep.checks = {{"B"}, {"dx_B"}, {"di_B"}, {"di_dx_B"}};
    rng r(seed + 1000 * p);
    for (int s = 0; s < samples; ++s) {
        const auto win = sample_window(r, p + 2, h_min);
        const double w = width_v(win);
        const double h = min_gap_v(win);

        const double nb = l2_norm([&](double x) { return bspline_cdb(p, win, x); }, win, p);
        record(rep.checks[0], nb / (cert_c(p) * std::sqrt(w)));

        if (p >= 1) {
            const double ndx =
                l2_norm([&](double x) { return eval_dx_v(p, win, x, 1); }, win, p - 1);
            record(rep.checks[1],
                   ndx / (std::sqrt(2.0 * p) * cert_c(p - 1) / std::sqrt(h)));

            double ndi = 0.0;
            for (int i = 0; i <= p + 1; ++i)
                ndi = std::max(ndi, l2_norm([&](double x) { return eval_dknot_v(p, win, i, x); },
                                            win, p));
            record(rep.checks[2], ndi / (std::sqrt(2.0 / p) * cert_c(p) / std::sqrt(h)));
        }
        if (p >= 2) {
            double nmix = 0.0;
            for (int i = 0; i <= p + 1; ++i)
                nmix = std::max(
                    nmix, l2_norm([&](double x) { return eval_dknot_dx_v(p, win, i, x); },
                                  win, p - 1));
            record(rep.checks[3],
                   nmix / (2.0 * std::sqrt(2.0) / (p - 1) * cert_c(p - 1) * std::pow(h, -1.5)));
        }
    }
    return rep;
}

/// Hoelder/Lipschitz continuity of B_p and its derivatives with respect
/// to the knots, with the same certified constants. The low-degree corner
/// cases carry their own displayed constants and exponents.
inline bound_report check_holder(int p, int samples, double h_min, std::uint64_t seed = 0) {
    using namespace detail;
    bound_report rep;
    rep.lemma = "holder";
    rep.degree = p;
    rep.samples = samples;
    rep.checks = {{"B_p0"},    {"B"},      {"dx_B_p1"},    {"dx_B"},
                  {"di_B_p1"}, {"di_B"},   {"di_dx_B_p2"}, {"di_dx_B"}};
    rng r(seed + 2000 * p);

    auto diff_norm = [&](auto&& fa, auto&& fb, std::span<const double> wa,
                         std::span<const double> wb, int deg) {
        std::vector<double> breaks(wa.begin(), wa.end());
        breaks.insert(breaks.end(), wb.begin(), wb.end());
        std::sort(breaks.begin(), breaks.end());
        return l2_norm([&](double x) { return fa(x) - fb(x); }, breaks, deg);
    };

    for (int s = 0; s < samples; ++s) {
        const double L = r.uniform(1.0, 10.0);
        auto draw = [&] {
            std::vector<double> v(p + 2);
            while (true) {
                for (auto& x : v) x = r.uniform(0.0, L);
                std::sort(v.begin(), v.end());
                if (min_gap_v(v) >= h_min) return v;
            }
        };
        const auto sa = draw(), sb = draw();
        const double h = std::min(min_gap_v(sa), min_gap_v(sb));
        double dist2 = 0.0;
        for (int i = 0; i < p + 2; ++i) dist2 += (sa[i] - sb[i]) * (sa[i] - sb[i]);
        const double dist = std::sqrt(dist2);
        if (dist == 0.0) continue;

        const double db = diff_norm([&](double x) { return bspline_cdb(p, sa, x); },
                                    [&](double x) { return bspline_cdb(p, sb, x); }, sa, sb, p);
        if (p == 0)
            record(rep.checks[0], db / (2.0 * cert_c(0) * std::sqrt(dist)));
        else
            record(rep.checks[1], db / (std::sqrt(2.0 * (p + 1) / p) * cert_c(p) *
                                        std::pow(h, -0.5) * dist));

        if (p >= 1) {
            const double ddx =
                diff_norm([&](double x) { return eval_dx_v(p, sa, x, 1); },
                          [&](double x) { return eval_dx_v(p, sb, x, 1); }, sa, sb, p - 1);
            if (p == 1)
                record(rep.checks[2], ddx / (4.0 * cert_c(0) / h * std::sqrt(dist)));
            else
                record(rep.checks[3], ddx / (2.0 * std::sqrt((p + 1.0) / (p - 1.0)) *
                                             cert_c(p - 1) * std::pow(h, -1.5) * dist));

            double ddi = 0.0;
            for (int i = 0; i <= p + 1; ++i)
                ddi = std::max(ddi, diff_norm([&](double x) { return eval_dknot_v(p, sa, i, x); },
                                              [&](double x) { return eval_dknot_v(p, sb, i, x); },
                                              sa, sb, p));
            if (p == 1)
                record(rep.checks[4], ddi / (5.0 * cert_c(1) / h * std::sqrt(dist)));
            else
                record(rep.checks[5],
                       ddi / (2.0 / p * std::sqrt((2.0 * p + 7.0) / (p - 1.0)) * cert_c(p) *
                              std::pow(h, -1.5) * dist));
        }
        if (p >= 2) {
            double dmix = 0.0;
            for (int i = 0; i <= p + 1; ++i)
                dmix = std::max(dmix,
                                diff_norm([&](double x) { return eval_dknot_dx_v(p, sa, i, x); },
                                          [&](double x) { return eval_dknot_dx_v(p, sb, i, x); },
                                          sa, sb, p - 1));
            if (p == 2)
                record(rep.checks[6],
                       dmix / (12.0 * cert_c(1) * std::pow(h, -2.0) * std::sqrt(dist)));
            else
                record(rep.checks[7],
                       dmix / (4.0 / (p - 1) * std::sqrt((p + 7.0) / (p - 2.0)) * cert_c(p - 1) *
                               std::pow(h, -2.5) * dist));
        }
    }
    return rep;
}

/// Differentiation under the integral sign: the parametric derivative of
/// the assembled 1D forms against their integrated-derivative expression,
/// both computed independently. Ratios are relative deviations divided by
/// the 1e-5 tolerance.
inline bound_report check_interchange(int p, int samples, double h_min,
                                      std::uint64_t seed = 0) {
    using namespace detail;
    bound_report rep;
    rep.lemma = "interchange";
    rep.degree = p;
    rep.samples = samples;
    rep.checks = {{"linear_k0"}, {"bilinear_k1"}};
    rng r(seed + 3000 * p);
    const double tol = 1e-5, eps = 1e-6;

    for (int s = 0; s < samples; ++s) {
        const double a0 = r.uniform(0.5, 3.0), b0 = r.uniform(-1.0, 1.0),
                     c0 = r.uniform(-1.0, 1.0);
        auto f = [&](double x) { return std::sin(a0 * x + b0) + c0 * x; };

        if (p >= 1) {
            const auto win = sample_window(r, p + 2, h_min);
            const int i = r.uniform_int(0, p + 1);
            auto integral = [&](std::span<const double> w) {
                auto part = make_partition(w, w.front(), w.back());
                double acc = 0.0;
                for (std::size_t c = 0; c + 1 < part.points.size(); ++c)
                    acc += adaptive_simpson(
                               [&](double x) { return f(x) * bspline_cdb(p, w, x); },
                               part.points[c], part.points[c + 1], 1e-10)
                               .value;
                return acc;
            };
            auto wp = win, wm = win;
            wp[i] += eps;
            wm[i] -= eps;
            const double fd = (integral(wp) - integral(wm)) / (2 * eps);
            auto part = make_partition(win, win.front(), win.back());
            double rhs = 0.0;
            for (std::size_t c = 0; c + 1 < part.points.size(); ++c)
                rhs += adaptive_simpson(
                           [&](double x) { return f(x) * eval_dknot_v(p, win, i, x); },
                           part.points[c], part.points[c + 1], 1e-10)
                           .value;
            const double dev = std::abs(fd - rhs) / std::max(1.0, std::abs(rhs));
            record(rep.checks[0], dev / tol);
        }

        if (p >= 2) {
            const int q = r.uniform_int(2, 5);
            const double L = r.uniform(1.0, 6.0);
            auto draw = [&](int n) {
                std::vector<double> v(n);
                while (true) {
                    for (auto& x : v) x = r.uniform(0.0, L);
                    std::sort(v.begin(), v.end());
                    if (min_gap_v(v) >= h_min) return v;
                }
            };
            const auto rw = draw(p + 2), cw = draw(q + 2);
            const int i = r.uniform_int(0, p + 1);
            auto entry = [&](std::span<const double> w) {
                const double lo = std::max(w.front(), cw.front());
                const double hi = std::min(w.back(), cw.back());
                if (hi <= lo) return 0.0;
                std::vector<double> breaks(w.begin(), w.end());
                breaks.insert(breaks.end(), cw.begin(), cw.end());
                auto part = make_partition(breaks, lo, hi);
                return integrate_piecewise(
                    [&](double x) {
                        return eval_dx_v(p, w, x, 1) * eval_dx_v(q, cw, x, 1);
                    },
                    part, (p - 1) + (q - 1));
            };
            auto wp = rw, wm = rw;
            wp[i] += eps;
            wm[i] -= eps;
            const double fd = (entry(wp) - entry(wm)) / (2 * eps);
            const double lo = std::max(rw.front(), cw.front());
            const double hi = std::min(rw.back(), cw.back());
            double rhs = 0.0;
            if (hi > lo) {
                std::vector<double> breaks(rw.begin(), rw.end());
                breaks.insert(breaks.end(), cw.begin(), cw.end());
                auto part = make_partition(breaks, lo, hi);
                rhs = integrate_piecewise(
                    [&](double x) {
                        return eval_dknot_dx_v(p, rw, i, x) * eval_dx_v(q, cw, x, 1);
                    },
                    part, (p - 1) + (q - 1));
            }
            const double dev = std::abs(fd - rhs) / std::max(1.0, std::abs(rhs));
            record(rep.checks[1], dev / tol);
        }
    }
    return rep;
}

/// Aligned text rendering of a batch of reports.
inline std::string format_reports(std::span<const bound_report> reports) {
    std::ostringstream os;
    os << std::left << std::setw(14) << "lemma" << std::setw(4) << "p" << std::setw(12)
       << "sub-check" << std::right << std::setw(10) << "samples" << std::setw(16)
       << "max ratio" << std::setw(8) << "pass" << '\n';
    for (const auto& rep : reports)
        for (const auto& c : rep.checks) {
            if (c.evaluated == 0) continue;
            os << std::left << std::setw(14) << rep.lemma << std::setw(4) << rep.degree
               << std::setw(12) << c.name << std::right << std::setw(10) << c.evaluated
               << std::setw(16) << std::scientific << std::setprecision(4) << c.max_ratio
               << std::setw(8) << (c.pass ? "yes" : "NO") << '\n';
        }
    return os.str();
}

inline void reports_to_csv(std::span<const bound_report> reports, std::ostream& os) {
    os << "lemma,degree,sub_check,samples,max_ratio,pass\n";
    for (const auto& rep : reports)
        for (const auto& c : rep.checks) {
            if (c.evaluated == 0) continue;
            os << rep.lemma << ',' << rep.degree << ',' << c.name << ',' << c.evaluated << ','
               << std::scientific << std::setprecision(12) << c.max_ratio << ','
               << (c.pass ? 1 : 0) << '\n';
        }
}

} // namespace freeknot
