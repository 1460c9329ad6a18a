#include <doctest.h>

#include <cmath>

#include "mbl/verify.hpp"

using namespace mbl;

TEST_CASE("lu_log_det on known matrices") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3) * 2.0;
    CHECK(verify::lu_log_det(m) == doctest::Approx(3.0 * std::log(2.0)));
    Eigen::MatrixXd a(2, 2);
    a << 4, 1, 2, 3;  // det 10
    CHECK(verify::lu_log_det(a) == doctest::Approx(std::log(10.0)));
}

TEST_CASE("brute force extremes on the unconstrained interval") {
    const ConfidenceState s(1, 0.1);
    const auto g = verify::brute_force_extremes(s, Eigen::VectorXd::Constant(1, 1.0));
    REQUIRE(g.feasible);
    CHECK(g.max_value == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(g.min_value == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("brute force extremes after one observation") {
    // Theta_1 = {|theta| <= 1, (1 - theta)^2 <= 1}: the interval [0, 1].
    const ConfidenceState s = update(ConfidenceState(1, 1.0), Eigen::VectorXd::Constant(1, 1.0), 1.0);
    const auto g = verify::brute_force_extremes(s, Eigen::VectorXd::Constant(1, 1.0));
    CHECK(g.width() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("self-check suites pass") {
    for (const auto& r : verify::check_width_oracle(40, 11)) CHECK_MESSAGE(r.passed(), r.name, " worst ", r.worst);
    for (const auto& r : verify::check_determinants(200, 5)) CHECK_MESSAGE(r.passed(), r.name, " worst ", r.worst);
    const auto cert = verify::check_needle_certificates(5, 2);
    CHECK_MESSAGE(cert.passed(), cert.name, " worst ", cert.worst);
}
