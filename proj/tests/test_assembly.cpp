#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "freeknot/assembly.hpp"
#include "freeknot/rng.hpp"

using namespace freeknot;
using Catch::Approx;

namespace {

const interval unit{-1.0, 1.0};
const interval wide{-100.0, 100.0};

knot_vector uniform_knots(double a, double h, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + i * h;
    return knot_vector(v);
}

knot_vector random_feasible_knots(rng& r, int n, double h_min, double lo, double hi) {
    std::vector<double> v(n);
    while (true) {
        for (auto& x : v) x = r.uniform(lo, hi);
        std::sort(v.begin(), v.end());
        if (detail::min_gap_v(v) >= h_min) break;
    }
    return knot_vector(v);
}

knot_vector shift_knot(const knot_vector& kv, int j, double d) {
    auto v = kv.values();
    v[j] += d;
    return knot_vector(v);
}

Eigen::MatrixXd dense_from_apply(const assembled_operator& op, long n) {
    Eigen::MatrixXd A(n, n);
    for (long j = 0; j < n; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(j) = 1.0;
        A.col(j) = op.apply(e);
    }
    return A;
}

} // namespace

TEST_CASE("mass and stiffness closed forms on uniform knots") {
    const double h = 0.25;
    auto kv = uniform_knots(0.0, h, 9);
    auto mass = assemble_bilinear_1d({0}, kv, 1, kv, 1, wide);
    auto stiff = assemble_bilinear_1d({1}, kv, 1, kv, 1, wide);
    for (int i = 2; i < 5; ++i) {
        CHECK(mass(i, i) == Approx(2 * h / 3).margin(1e-14));
        CHECK(mass(i, i + 1) == Approx(h / 6).margin(1e-14));
        CHECK(stiff(i, i) == Approx(2 / h).margin(1e-12));
        CHECK(stiff(i, i + 1) == Approx(-1 / h).margin(1e-12));
    }
    // entries beyond the bandwidth vanish exactly
    for (int i = 0; i < mass.rows(); ++i)
        for (int j = 0; j < mass.cols(); ++j)
            if (std::abs(i - j) > 1) {
                CHECK(mass(i, j) == 0.0);
                CHECK(stiff(i, j) == 0.0);
            }
}

TEST_CASE("disjoint supports give zero blocks") {
    auto a = uniform_knots(0.0, 1.0, 4);
    auto b = uniform_knots(10.0, 1.0, 4);
    auto M = assemble_bilinear_1d({0}, a, 1, b, 1, wide);
    CHECK(M.norm() == 0.0);
}

TEST_CASE("kernel order validation") {
    auto kv = uniform_knots(0.0, 1.0, 5);
    CHECK_THROWS_AS(assemble_bilinear_1d({2}, kv, 1, kv, 1, wide), order_error);
    CHECK_THROWS_AS(assemble_linear_1d({1, [](double) { return 1.0; }}, kv, 0, wide),
                    order_error);
}

TEST_CASE("load vector basics") {
    knot_vector hat{0, 1, 2};
    linear_kernel one{0, [](double) { return 1.0; }};
    auto v = assemble_linear_1d(one, hat, 1, wide);
    REQUIRE(v.size() == 1);
    CHECK(v(0) == Approx(1.0).margin(1e-12));

    linear_kernel zero{0, [](double) { return 0.0; }};
    CHECK(assemble_linear_1d(zero, hat, 1, wide).norm() == 0.0);

    // f = B_j reproduces the mass column
    auto kv = uniform_knots(0.0, 0.5, 8);
    const int p = 2, j = 2;
    const auto win = kv.span().subspan(j, p + 2);
    linear_kernel bj{0, [&](double x) { return detail::bspline_cdb(p, win, x); }};
    auto col = assemble_linear_1d(bj, kv, p, wide);
    auto mass = assemble_bilinear_1d({0}, kv, p, kv, p, wide);
    for (int i = 0; i < col.size(); ++i)
        CHECK(col(i) == Approx(mass(i, j)).margin(1e-10));
}

TEST_CASE("load derivative: constant data differentiates the width identity") {
    for (int p = 1; p <= 3; ++p) {
        auto kv = uniform_knots(0.0, 0.5, p + 2); // single window
        linear_kernel one{0, [](double) { return 1.0; }};
        for (int j = 0; j < p + 2; ++j) {
            auto dv = d_assemble_linear_dknot(one, kv, p, j, wide);
            const double expected = (j == 0) ? -1.0 / (p + 1)
                                             : (j == p + 1 ? 1.0 / (p + 1) : 0.0);
            CHECK(dv(0) == Approx(expected).margin(1e-10));
        }
    }
}

TEST_CASE("load derivative matches finite differences") {
    rng r(21);
    linear_kernel smooth{0, [](double x) { return std::sin(1.3 * x) + 0.4 * x * x; }};
    for (int trial = 0; trial < 60; ++trial) {
        const int p = r.uniform_int(1, 4);
        const int n = r.uniform_int(p + 2, p + 6);
        auto kv = random_feasible_knots(r, n, 0.05, 0, 3);
        const int j = r.uniform_int(0, n - 1);
        auto dv = d_assemble_linear_dknot(smooth, kv, p, j, wide);
        const double eps = 1e-6;
        Eigen::VectorXd fd = (assemble_linear_1d(smooth, shift_knot(kv, j, eps), p, wide) -
                              assemble_linear_1d(smooth, shift_knot(kv, j, -eps), p, wide)) /
                             (2 * eps);
        for (int i = 0; i < dv.size(); ++i)
            CHECK(std::abs(dv(i) - fd(i)) <= 1e-5 * std::max(1.0, std::abs(dv(i))));
    }
}

TEST_CASE("degree-0 load derivative evaluates the data at the knots") {
    linear_kernel f{0, [](double x) { return std::cos(x); }};
    knot_vector kv{0.3, 1.1};
    auto d0 = d_assemble_linear_dknot(f, kv, 0, 0, wide);
    auto d1 = d_assemble_linear_dknot(f, kv, 0, 1, wide);
    CHECK(d0(0) == Approx(-std::cos(0.3)).margin(1e-13));
    CHECK(d1(0) == Approx(std::cos(1.1)).margin(1e-13));
}

TEST_CASE("degree-1 stiffness load derivative (cellwise route) matches FD") {
    rng r(77);
    linear_kernel g{1, [](double x) { return std::sin(2 * x) + x; }};
    for (int trial = 0; trial < 40; ++trial) {
        const int n = r.uniform_int(4, 8);
        auto kv = random_feasible_knots(r, n, 0.08, 0, 3);
        const int j = r.uniform_int(0, n - 1);
        auto dv = d_assemble_linear_dknot(g, kv, 1, j, wide);
        const double eps = 1e-6;
        Eigen::VectorXd fd = (assemble_linear_1d(g, shift_knot(kv, j, eps), 1, wide) -
                              assemble_linear_1d(g, shift_knot(kv, j, -eps), 1, wide)) /
                             (2 * eps);
        for (int i = 0; i < dv.size(); ++i)
            CHECK(std::abs(dv(i) - fd(i)) <= 1e-5 * std::max(1.0, std::abs(dv(i))));
    }
}

TEST_CASE("bilinear knot derivative matches FD across patches") {
    rng r(31);
    for (int trial = 0; trial < 40; ++trial) {
        const int k = r.uniform_int(0, 1);
        const int p = r.uniform_int(k == 0 ? 1 : 2, 4);
        const int q = r.uniform_int(k == 0 ? 1 : 2, 4);
        auto row = random_feasible_knots(r, p + 4, 0.05, 0, 3);
        auto col = random_feasible_knots(r, q + 4, 0.05, 0, 3);
        const int j = r.uniform_int(0, static_cast<int>(row.size()) - 1);
        auto D = d_assemble_bilinear_dknot({k}, row, p, col, q, j, false, wide);
        const double eps = 1e-6;
        Eigen::MatrixXd fd =
            (assemble_bilinear_1d({k}, shift_knot(row, j, eps), p, col, q, wide) -
             assemble_bilinear_1d({k}, shift_knot(row, j, -eps), p, col, q, wide)) /
            (2 * eps);
        for (int i = 0; i < D.rows(); ++i)
            for (int l = 0; l < D.cols(); ++l)
                CHECK(std::abs(D(i, l) - fd(i, l)) <=
                      1e-5 * std::max(1.0, std::abs(D(i, l))));
    }
}

TEST_CASE("bilinear knot derivative matches FD on a shared patch") {
    rng r(41);
    for (int trial = 0; trial < 40; ++trial) {
        const int k = r.uniform_int(0, 1);
        const int p = r.uniform_int(std::max(1, k), 4); // includes p == k corner
        const int n = r.uniform_int(p + 3, p + 7);
        auto kv = random_feasible_knots(r, n, 0.05, 0, 3);
        const int j = r.uniform_int(0, n - 1);
        auto D = d_assemble_bilinear_dknot({k}, kv, p, kv, p, j, true, wide);
        const double eps = 1e-6;
        auto plus = shift_knot(kv, j, eps);
        auto minus = shift_knot(kv, j, -eps);
        Eigen::MatrixXd fd = (assemble_bilinear_1d({k}, plus, p, plus, p, wide) -
                              assemble_bilinear_1d({k}, minus, p, minus, p, wide)) /
                             (2 * eps);
        for (int i = 0; i < D.rows(); ++i)
            for (int l = 0; l < D.cols(); ++l)
                CHECK(std::abs(D(i, l) - fd(i, l)) <=
                      1e-5 * std::max(1.0, std::abs(D(i, l))));
    }
}

TEST_CASE("degree-0 same-patch mass derivative") {
    knot_vector kv{0.0, 0.4, 1.0, 1.7};
    // entries are the cell lengths; derivative is a difference of indicators
    for (int j = 0; j < 4; ++j) {
        auto D = d_assemble_bilinear_dknot({0}, kv, 0, kv, 0, j, true, wide);
        for (int i = 0; i < 3; ++i) {
            const double expected = (j == i + 1 ? 1.0 : 0.0) - (j == i ? 1.0 : 0.0);
            CHECK(D(i, i) == Approx(expected).margin(1e-14));
        }
    }
}

TEST_CASE("crossing piecewise-constant factors are refused") {
    knot_vector a{0, 1, 2}, b{0.5, 1.5, 2.5};
    CHECK_THROWS_AS(d_assemble_bilinear_dknot({1}, a, 1, b, 1, 0, false, wide),
                    nondifferentiable_error);
    knot_vector c{0, 1}, d{0.5, 1.5};
    CHECK_THROWS_AS(d_assemble_bilinear_dknot({0}, c, 0, d, 0, 0, false, wide),
                    nondifferentiable_error);
}

TEST_CASE("paper's stiffness coefficient as cellwise-derivative oracle") {
    // a_1(B_1((x,0,1)), B_1((y,0,1))) = 1 - max(x,y)/(xy) on [-1,0)^2
    auto entry = [](double x, double y) {
        knot_vector rw{x, 0, 1}, cw{y, 0, 1};
        auto M = assemble_bilinear_1d({1}, rw, 1, cw, 1, unit);
        return M(0, 0);
    };
    rng r(51);
    for (int trial = 0; trial < 50; ++trial) {
        double x = r.uniform(-0.95, -0.1);
        double y = r.uniform(-0.95, -0.1);
        if (std::abs(x - y) < 0.02) continue;
        CHECK(entry(x, y) == Approx(1.0 - std::max(x, y) / (x * y)).margin(1e-12));
        // derivative with respect to x: 0 for x > y, 1/x^2 for x < y
        const double expected_dx = (x > y) ? 0.0 : 1.0 / (x * x);
        knot_vector rw{x, 0, 1}, cw{y, 0, 1};
        const double dx =
            detail::d_pc_product(1, rw.span(), cw.span(), 1, 0, std::nullopt, unit);
        CHECK(dx == Approx(expected_dx).margin(1e-10));
    }
}

TEST_CASE("sum-factorised application equals the dense Kronecker operator") {
    rng r(61);
    const std::vector<interval> dom{{-1.0, 1.0}, {-1.0, 1.0}};
    separable_form poisson2d;
    poisson2d.a_terms = {{{1}, {0}}, {{0}, {1}}};

    for (int layout0 : {1, 2}) {
        auto space = init_uniform_approx(dom, std::vector<int>{layout0, 1}, 6, 1);
        auto op = assemble(space, poisson2d);
        const long n = space.dim_weights();
        REQUIRE(n <= 100);

        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t term = 0; term < poisson2d.a_terms.size(); ++term)
            for (int s = 0; s < space.patch_count(); ++s)
                for (int q = 0; q < space.patch_count(); ++q) {
                    const auto& ax = op.a_blocks[term][s][q];
                    Eigen::MatrixXd kron(ax[0].rows() * ax[1].rows(),
                                         ax[0].cols() * ax[1].cols());
                    for (int i0 = 0; i0 < ax[0].rows(); ++i0)
                        for (int j0 = 0; j0 < ax[0].cols(); ++j0)
                            kron.block(i0 * ax[1].rows(), j0 * ax[1].cols(), ax[1].rows(),
                                       ax[1].cols()) = ax[0](i0, j0) * ax[1];
                    dense.block(space.patch_offset(s), space.patch_offset(q), kron.rows(),
                                kron.cols()) += kron;
                }

        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd W(n);
            for (long i = 0; i < n; ++i) W(i) = r.uniform(-1, 1);
            const Eigen::VectorXd via_apply = op.apply(W);
            const Eigen::VectorXd via_dense = dense * W;
            CHECK((via_apply - via_dense).lpNorm<Eigen::Infinity>() <= 1e-12);
        }

        // unit vectors read out matrix columns
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(2) = 1.0;
        const Eigen::VectorXd col = op.apply(e);
        for (long i = 0; i < n; ++i) CHECK(col(i) == Approx(dense(i, 2)).margin(1e-12));

        // global symmetry, including cross-patch blocks
        Eigen::MatrixXd A = dense_from_apply(op, n);
        CHECK((A - A.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("mass operator stays positive definite under the mesh-size floor") {
    rng r(71);
    separable_form l2form;
    l2form.a_terms = {{{0}}};
    std::vector<double> hs, lams;
    for (int trial = 0; trial < 100; ++trial) {
        const double h_min = (trial % 4 == 0)   ? 1e-1
                             : (trial % 4 == 1) ? 5e-2
                             : (trial % 4 == 2) ? 2e-2
                                                : 1e-2;
        multi_patch_space space;
        space.domain = {interval{-1.0, 1.0}};
        patch_spec patch;
        patch.degrees = {2};
        const int n = r.uniform_int(6, 10);
        patch.knots = {random_feasible_knots(r, n, h_min, -1, 1)};
        space.patches.push_back(patch);
        space.trainable = {{std::vector<char>(n, 1)}};

        auto op = assemble(space, l2form);
        Eigen::MatrixXd A = dense_from_apply(op, space.dim_weights());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
        const double lmin = eig.eigenvalues().minCoeff();
        CHECK(lmin > 0.0);
        hs.push_back(h_min);
        lams.push_back(lmin);
    }
    // least-squares fit through the origin: lambda_min ~ c * h_min, c > 0
    double num = 0, den = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        num += hs[i] * lams[i];
        den += hs[i] * hs[i];
    }
    CHECK(num / den > 0.0);
}

TEST_CASE("energy value completes the square") {
    separable_form l2form;
    l2form.a_terms = {{{0}}};
    l2form.l_terms = {{{0, [](double x) { return std::sin(x); }}}};
    auto space = init_uniform_approx(std::vector<interval>{{-1.0, 1.0}},
                                     std::vector<int>{1}, 8, 2);
    auto op = assemble(space, l2form);
    const long n = space.dim_weights();
    Eigen::MatrixXd A = dense_from_apply(op, n);
    Eigen::VectorXd W = A.ldlt().solve(op.F);
    CHECK(energy_value(op, W) == Approx(-0.5 * op.F.dot(W)).margin(1e-12));
    CHECK(energy_value(op, Eigen::VectorXd::Zero(n)) == 0.0);
}
