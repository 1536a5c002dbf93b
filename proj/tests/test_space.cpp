#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "freeknot/rng.hpp"
#include "freeknot/space.hpp"

using namespace freeknot;
using Catch::Approx;

namespace {

const std::vector<interval> unit1d{{-1.0, 1.0}};
const std::vector<interval> unit2d{{-1.0, 1.0}, {-1.0, 1.0}};

} // namespace

TEST_CASE("dimension formulas") {
    const int layout1[] = {1};
    auto s2 = init_uniform_approx(unit2d, std::vector<int>{1, 1}, 8, 2);
    CHECK(s2.dim_weights() == 25);
    CHECK(s2.dim_knots() == 16);

    auto s1 = init_uniform_approx(unit1d, layout1, 6, 1);
    CHECK(s1.dim_weights() == 4);

    // DOF-level parameterisation: one basis function per patch
    auto dof_level = init_uniform_approx(unit1d, std::vector<int>{3}, 4, 2);
    for (const auto& p : dof_level.patches) CHECK(p.dof_count() == 1);
}

TEST_CASE("uniform approx initialisation") {
    auto s = init_uniform_approx(unit1d, std::vector<int>{1}, 6, 1);
    const auto& kv = s.patches[0].knots[0];
    REQUIRE(kv.size() == 6);
    CHECK(kv[0] == Approx(-1 - 2.0 / 3.0));
    CHECK(kv[1] == -1.0);
    CHECK(kv[2] == Approx(-1.0 / 3.0));
    CHECK(kv[3] == Approx(1.0 / 3.0));
    CHECK(kv[4] == 1.0);
    CHECK(kv[5] == Approx(1 + 2.0 / 3.0));
    for (char m : s.trainable[0][0]) CHECK(m == 1);

    // adjacent patches share degree+1 knot positions at initialisation
    auto two = init_uniform_approx(unit1d, std::vector<int>{2}, 8, 2);
    const auto& a = two.patches[0].knots[0];
    const auto& b = two.patches[1].knots[0];
    for (int k = 0; k < 3; ++k) CHECK(a[a.size() - 3 + k] == b[k]);

    // degree 0 needs no exterior knots
    auto flat = init_uniform_approx(unit1d, std::vector<int>{1}, 6, 0);
    CHECK(flat.patches[0].knots[0].front() == -1.0);
    CHECK(flat.patches[0].knots[0].back() == 1.0);
}

TEST_CASE("uniform poisson initialisation") {
    auto s = init_uniform_poisson(unit1d, std::vector<int>{1}, 7, 2);
    const auto& kv = s.patches[0].knots[0];
    CHECK(kv[0] == -1.0);
    CHECK(kv[1] == -1.0);
    CHECK(kv[kv.size() - 1] == 1.0);
    CHECK(kv[kv.size() - 2] == 1.0);
    CHECK(s.trainable[0][0][0] == 0);
    CHECK(s.trainable[0][0][1] == 0);
    CHECK(s.trainable[0][0][2] == 1);
    CHECK(s.trainable[0][0][kv.size() - 1] == 0);
    CHECK(s.trainable[0][0][kv.size() - 2] == 0);

    auto lin = init_uniform_poisson(unit1d, std::vector<int>{1}, 6, 1);
    CHECK(min_mesh_size(lin.patches[0].knots[0]) > 0); // no repetition for degree 1
    for (char m : lin.trainable[0][0]) CHECK(m == 1);

    auto two = init_uniform_poisson(unit1d, std::vector<int>{2}, 8, 2);
    CHECK(two.patches[0].knots[0][0] == -1.0);
    CHECK(two.patches[0].knots[0][1] == -1.0);
    CHECK(min_mesh_size(two.patches[1].knots[0]) == 0.0); // shared right-boundary group
    CHECK(two.patches[1].knots[0].back() == 1.0);

    CHECK_THROWS_AS(init_uniform_poisson(unit1d, std::vector<int>{1}, 6, 0),
                    capability_error);
}

TEST_CASE("realise basics") {
    auto s = init_uniform_approx(unit1d, std::vector<int>{1}, 6, 1);
    std::vector<double> w(s.dim_weights(), 0.0);
    const double x[] = {0.3};
    CHECK(realise(s, w, x) == 0.0);

    w[1] = 0.7; // single basis function scales linearly
    const auto& kv = s.patches[0].knots[0];
    const double expected = 0.7 * eval(1, knot_vector{kv[1], kv[2], kv[3]}, 0.3);
    CHECK(realise(s, w, x) == Approx(expected));

    std::vector<double> ones(s.dim_weights(), 1.0);
    for (double xx : {-1.0, -0.2, 0.6, 1.0}) {
        const double pt[] = {xx};
        CHECK(realise(s, ones, pt) == Approx(1.0).margin(1e-13));
    }
}

TEST_CASE("realise is linear in the weights") {
    rng r(4);
    auto s = init_uniform_approx(unit2d, std::vector<int>{2, 1}, 6, 1);
    const long n = s.dim_weights();
    std::vector<double> w1(n), w2(n), mix(n);
    for (long i = 0; i < n; ++i) {
        w1[i] = r.uniform(-1, 1);
        w2[i] = r.uniform(-1, 1);
    }
    const double a = 0.37, b = -1.21;
    for (long i = 0; i < n; ++i) mix[i] = a * w1[i] + b * w2[i];
    for (int trial = 0; trial < 50; ++trial) {
        const double x[] = {r.uniform(-1, 1), r.uniform(-1, 1)};
        const double lhs = realise(s, mix, x);
        const double rhs = a * realise(s, w1, x) + b * realise(s, w2, x);
        CHECK(lhs == Approx(rhs).margin(1e-13));
    }
}

TEST_CASE("active basis") {
    multi_patch_space s;
    s.domain = unit1d;
    patch_spec p;
    p.degrees = {1};
    p.knots = {knot_vector{0, 1, 2, 3, 4}};
    s.patches.push_back(p);
    s.trainable = {{std::vector<char>(5, 1)}};

    auto [b0, e0] = active_basis(s, 0, 0, 1.5);
    CHECK(b0 == 0);
    CHECK(e0 == 2);
    auto [b1, e1] = active_basis(s, 0, 0, -0.5);
    CHECK(b1 == e1); // empty
    auto [b2, e2] = active_basis(s, 0, 0, 1.0); // at a knot: the right cell
    CHECK(b2 == 0);
    CHECK(e2 == 2);
    auto [b3, e3] = active_basis(s, 0, 0, 2.0);
    CHECK(b3 == 1);
    CHECK(e3 == 3);

    // dense scan at generic points: range equals the support test
    rng r(6);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = r.uniform(-0.5, 4.5);
        auto [b, e] = active_basis(s, 0, 0, x);
        for (int j = 0; j < 3; ++j) {
            const auto& kv = s.patches[0].knots[0];
            const bool in_support = (x >= kv[j] && x < kv[j + 2]);
            const bool in_range = (j >= b && j < e);
            CHECK(in_range == in_support);
        }
    }
}

TEST_CASE("snapshot round trip") {
    auto s = init_uniform_poisson(unit2d, std::vector<int>{2, 1}, 7, 2);
    // perturb to non-trivial decimals
    auto free_vals = s.gather_free();
    rng r(12);
    for (auto& v : free_vals) v += r.uniform(-1e-4, 1e-4);
    s.set_free_knots(free_vals);

    std::stringstream ss;
    save_space(s, ss);
    auto loaded = load_space(ss);
    REQUIRE(loaded.patch_count() == s.patch_count());
    for (int q = 0; q < s.patch_count(); ++q)
        for (int t = 0; t < s.dim(); ++t) {
            CHECK(loaded.patches[q].degrees[t] == s.patches[q].degrees[t]);
            CHECK(loaded.patches[q].knots[t] == s.patches[q].knots[t]); // bit-exact
            CHECK(loaded.trainable[q][t] == s.trainable[q][t]);
        }
}

TEST_CASE("free knot gather/scatter and diagnostics") {
    auto s = init_uniform_poisson(unit1d, std::vector<int>{1}, 8, 2);
    auto vals = s.gather_free();
    CHECK(vals.size() == s.patches[0].knots[0].size() - 4);
    vals[0] += 0.01;
    s.set_free_knots(vals);
    CHECK(s.gather_free()[0] == Approx(vals[0]));
    CHECK(min_free_gap(s) > 0.0);

    auto two = init_uniform_approx(unit1d, std::vector<int>{2}, 8, 2);
    CHECK(cross_patch_gap(two) == 0.0); // overlapping knots at initialisation
}
