#include <catch2/catch_amalgamated.hpp>

#include "freeknot/knots.hpp"
#include "freeknot/rng.hpp"

using namespace freeknot;

TEST_CASE("drop operators") {
    CHECK(drop_first(knot_vector{0, 1, 2}) == knot_vector{1, 2});
    CHECK(drop_last(knot_vector{0, 1, 2}) == knot_vector{0, 1});
    CHECK(drop_first(drop_last(knot_vector{0, 1, 2, 3})) ==
          drop_last(drop_first(knot_vector{0, 1, 2, 3})));
    CHECK(drop_first(drop_last(knot_vector{0, 1, 2, 3})) == knot_vector{1, 2});
    CHECK_THROWS_AS(drop_first(knot_vector{0, 1}), arity_error);
    CHECK_THROWS_AS(drop_last(knot_vector{0, 1}), arity_error);
}

TEST_CASE("insert keeps order and multiset") {
    CHECK(insert(knot_vector{0, 1, 2}, 1) == knot_vector{0, 1, 1, 2});
    CHECK(insert(knot_vector{0, 2}, 1) == knot_vector{0, 1, 2});
    CHECK(insert(knot_vector{0, 0, 3}, 0) == knot_vector{0, 0, 0, 3});
    CHECK_THROWS_AS(insert(knot_vector{0, 1}, 2), range_error);
    CHECK_THROWS_AS(insert(knot_vector{0, 1}, -0.5), range_error);
}

TEST_CASE("width and mesh size") {
    CHECK(width(knot_vector{0, 1, 2}) == 2.0);
    CHECK(width(knot_vector{1, 1}) == 0.0);
    CHECK(width(knot_vector{-1, 0, 0.5, 3}) == 4.0);
    CHECK(min_mesh_size(knot_vector{0, 0.2, 1}) == 0.2);
    CHECK(min_mesh_size(knot_vector{0, 0, 1}) == 0.0);
    const knot_vector kvs[] = {knot_vector{0, 0.5, 1}, knot_vector{0, 0.25, 1}};
    CHECK(joint_min_mesh_size(kvs) == 0.25);
}

TEST_CASE("non-decreasing invariant enforced") {
    CHECK_THROWS_AS(knot_vector({1.0, 0.0}), range_error);
    CHECK_THROWS_AS(knot_vector(std::vector<double>{0.0}), arity_error);
}

TEST_CASE("drop operators commute on random vectors") {
    rng r(42);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = r.uniform_int(4, 12);
        std::vector<double> v(n);
        for (auto& x : v) x = r.uniform(-5, 5);
        std::sort(v.begin(), v.end());
        knot_vector kv(v);
        CHECK(drop_first(drop_last(kv)) == drop_last(drop_first(kv)));
    }
}

TEST_CASE("insert then erase restores the multiset") {
    rng r(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = r.uniform_int(2, 10);
        std::vector<double> v(n);
        for (auto& x : v) x = r.uniform(0, 1);
        std::sort(v.begin(), v.end());
        knot_vector kv(v);
        const double x = r.uniform(kv.front(), kv.back());
        auto grown = insert(kv, x);
        REQUIRE(grown.size() == kv.size() + 1);
        auto vals = grown.values();
        vals.erase(std::find(vals.begin(), vals.end(), x));
        CHECK(vals == kv.values());
        CHECK(min_mesh_size(grown) <= min_mesh_size(kv));
    }
}
