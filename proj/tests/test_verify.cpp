#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "freeknot/verify.hpp"

using namespace freeknot;
using Catch::Approx;

TEST_CASE("boundedness checks pass for all admissible degrees") {
    for (int p = 0; p <= 5; ++p) {
        auto rep = check_boundedness(p, 100, 0.05, 7);
        INFO(format_reports(std::span(&rep, 1)));
        CHECK(rep.pass());
        CHECK(rep.checks[0].evaluated == 100);
        if (p == 0) {
            CHECK(rep.checks[1].evaluated == 0); // derivative checks need p >= 1
            CHECK(rep.checks[3].evaluated == 0);
        }
        if (p >= 2) CHECK(rep.checks[3].evaluated == 100);
    }
}

TEST_CASE("boundedness hand value: uniform hat") {
    // ||B_1((0,1,2))||^2 = 2/3 <= |tau|/(p+1) = 1
    knot_vector kv{0, 1, 2};
    auto part = make_partition(kv.span(), 0, 2);
    const double sq = integrate_piecewise(
        [&](double x) { return eval(1, kv, x) * eval(1, kv, x); }, part, 2);
    CHECK(sq == Approx(2.0 / 3.0).margin(1e-13));
    CHECK(sq <= width(kv) / 2.0);
}

TEST_CASE("holder checks pass for all admissible degrees") {
    for (int p = 0; p <= 5; ++p) {
        auto rep = check_holder(p, 100, 0.05, 13);
        INFO(format_reports(std::span(&rep, 1)));
        CHECK(rep.pass());
        if (p == 0) {
            CHECK(rep.checks[0].evaluated > 0);
            CHECK(rep.checks[1].evaluated == 0);
        }
        if (p == 2) CHECK(rep.checks[6].evaluated > 0); // special constant for p = 2
        if (p >= 3) CHECK(rep.checks[7].evaluated > 0); // general mixed bound needs p >= 3
        if (p == 2) CHECK(rep.checks[7].evaluated == 0);
    }
}

TEST_CASE("holder exponent scaling for degree 0") {
    // RHS = 2 C_0 ||sigma - tau||^(1/2): halving the distance scales by 1/sqrt(2)
    auto rhs = [](double dist) { return 2.0 * 1.0 * std::sqrt(dist); };
    CHECK(rhs(0.5) / rhs(1.0) == Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("interchange checks pass") {
    for (int p = 1; p <= 5; ++p) {
        auto rep = check_interchange(p, 60, 0.05, 19);
        INFO(format_reports(std::span(&rep, 1)));
        CHECK(rep.pass());
        if (p >= 2) CHECK(rep.checks[1].evaluated == 60);
    }
}

TEST_CASE("interchange endpoint identity for constant data") {
    // both routes give +-1/(p+1) at the outermost knots
    for (int p = 1; p <= 4; ++p) {
        std::vector<double> win(p + 2);
        for (int i = 0; i < p + 2; ++i) win[i] = 0.7 * i;
        auto part = make_partition(win, win.front(), win.back());
        for (int i : {0, p + 1}) {
            const double rhs = integrate_piecewise(
                [&](double x) { return detail::eval_dknot_v(p, win, i, x); }, part, p);
            const double expected = (i == 0) ? -1.0 / (p + 1) : 1.0 / (p + 1);
            CHECK(rhs == Approx(expected).margin(1e-12));
        }
    }
}

TEST_CASE("report formatting") {
    auto rep = check_boundedness(2, 10, 0.05, 3);
    auto text = format_reports(std::span(&rep, 1));
    CHECK(text.find("boundedness") != std::string::npos);
    CHECK(text.find("di_dx_B") != std::string::npos);
    std::ostringstream csv;
    reports_to_csv(std::span(&rep, 1), csv);
    CHECK(csv.str().rfind("lemma,degree,sub_check,samples,max_ratio,pass", 0) == 0);
}
