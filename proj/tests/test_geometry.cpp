#include <doctest.h>

#include <cmath>

#include "mbl/errors.hpp"
#include "mbl/geometry.hpp"
#include "mbl/rng.hpp"
#include "mbl/serialize.hpp"
#include "mbl/verify.hpp"

using namespace mbl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ConfidenceState one_observation() { return update(ConfidenceState(1, 0.5), vec({1.0}), 0.5); }

}  // namespace

TEST_CASE("update: one observation in dim 1") {
    const ConfidenceState s = one_observation();
    CHECK(s.t() == 1);
    CHECK(s.gram()(0, 0) == 1.0);
    CHECK(s.xy()[0] == 0.5);
    // Psi = 1 + 0.25, inverse 1 / 1.25
    CHECK(s.psi_inverse()(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(s.log_det_psi() == doctest::Approx(std::log(1.25)).epsilon(1e-15));
}

TEST_CASE("update: orthogonal unit observations") {
    ConfidenceState s(2, 1.0);
    s = update(std::move(s), vec({1, 0}), 0.3);
    s = update(std::move(s), vec({0, 1}), 0.7);
    CHECK(s.gram().isApprox(Eigen::Matrix2d::Identity()));
    CHECK(s.psi_inverse().isApprox(Eigen::Matrix2d::Identity() / 3.0));
    CHECK(s.log_det_psi() == doctest::Approx(2.0 * std::log(3.0)));
}

TEST_CASE("update leaves its input untouched") {
    const ConfidenceState before(3, 0.2);
    const ConfidenceState after = update(before, vec({0, 1, 0}), 0.1);
    CHECK(before.t() == 0);
    CHECK(before.gram().isZero());
    CHECK(after.t() == 1);
}

TEST_CASE("update rejects bad input") {
    ConfidenceState s(2, 0.1);
    CHECK_THROWS_AS(update(s, vec({1, 1}), 0.1), InvalidParam);
    CHECK_THROWS_AS(update(s, vec({1}), 0.1), DimensionMismatch);
}

TEST_CASE("gram equals the sum of history outer products") {
    Engine engine(5);
    ConfidenceState s(4, 0.3);
    for (int k = 0; k < 12; ++k) s = update(std::move(s), uniform_on_sphere(engine, 4), 0.5);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
    for (const auto& obs : s.history()) sum += obs.phi * obs.phi.transpose();
    CHECK((sum - s.gram()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relaxed width") {
    CHECK(relaxed_width(ConfidenceState(3, 0.1), vec({0, 1, 0})) == 2.0);
    const ConfidenceState s = one_observation();
    // sqrt(8 * 0.25 * 1 * 0.8)
    CHECK(relaxed_width(s, vec({1.0})) == doctest::Approx(std::sqrt(1.6)).epsilon(1e-14));
    CHECK(psi_quadratic_form(s, vec({1.0})) == doctest::Approx(0.8));
    CHECK(psi_quadratic_form(s, vec({1.0})) >= 0.5);

    FeatureMatrix features(2, 1);
    features << 1.0, -1.0;
    const Eigen::VectorXd batch = relaxed_widths(s, features);
    CHECK(batch[0] == doctest::Approx(std::sqrt(1.6)));
    CHECK(batch[1] == doctest::Approx(std::sqrt(1.6)));
}

TEST_CASE("relaxed width is unavailable for epsilon = 0 with a singular Gram") {
    const ConfidenceState s = update(ConfidenceState(2, 0.0), vec({1, 0}), 0.4);
    CHECK_FALSE(s.has_psi());
    CHECK_THROWS_AS(relaxed_width(s, vec({0, 1})), NumericalFailure);
}

TEST_CASE("exact width on the unit ball") {
    const WidthReport r = exact_width(ConfidenceState(2, 0.3), vec({1, 0}));
    CHECK(*r.exact == doctest::Approx(2.0));
    CHECK(r.theta_max->isApprox(vec({1, 0})));
    CHECK(r.theta_min->isApprox(vec({-1, 0})));
}

TEST_CASE("exact width of a one-dimensional interval") {
    // Theta_1 = {theta in [-1,1] : (0.5 - theta)^2 <= 0.25} = [0, 1]
    const ConfidenceState s = one_observation();
    const WidthReport r = exact_width(s, vec({1.0}));
    CHECK(*r.exact == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((*r.theta_max)[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((*r.theta_min)[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(*r.exact <= r.relaxed + 1e-6);
    CHECK(membership(s, *r.theta_max));
    CHECK(membership(s, *r.theta_min));
}

TEST_CASE("exact width with epsilon = 0 uses the affine interpolation set") {
    ConfidenceState s(3, 0.0);
    s = update(std::move(s), vec({1, 0, 0}), 0.6);
    const ExactWidthSolver solver(s);
    CHECK(*solver.width(vec({1, 0, 0})).exact == doctest::Approx(0.0).epsilon(1e-12));
    // theta_1 pinned at 0.6, the rest ranges over a disk of radius 0.8
    CHECK(*solver.width(vec({0, 1, 0})).exact == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(solver.maximize(vec({0, 0, 1})).value == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("inconsistent observations make the set infeasible") {
    ConfidenceState s(1, 0.1);
    s = update(std::move(s), vec({1.0}), 0.0);
    s = update(std::move(s), vec({1.0}), 1.0);
    CHECK_THROWS_AS(ExactWidthSolver{s}, InfeasibleSet);
}

TEST_CASE("membership") {
    CHECK(membership(ConfidenceState(2, 0.1), vec({0.6, 0.8})));
    CHECK_FALSE(membership(ConfidenceState(2, 0.1), vec({2, 0})));
    CHECK_THROWS_AS(membership(ConfidenceState(2, 0.1), vec({1})), DimensionMismatch);
    const ConfidenceState s = one_observation();
    CHECK(membership(s, vec({0.0})));
    CHECK_FALSE(membership(s, vec({-0.1})));
}

TEST_CASE("witness persists and exact width is dominated on random trajectories") {
    Engine engine(17);
    std::uniform_int_distribution<int> dim_dist(1, 8);
    std::uniform_real_distribution<double> eps_dist(0.02, 0.5);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = dim_dist(engine);
        const double eps = eps_dist(engine);
        const Eigen::VectorXd witness = uniform_in_ball(engine, d);
        std::uniform_real_distribution<double> noise(-eps, eps);
        ConfidenceState s(d, eps);
        for (int t = 0; t < 12; ++t) {
            const Eigen::VectorXd query = uniform_on_sphere(engine, d);
            const WidthReport r = exact_width(s, query);
            CHECK(*r.exact <= r.relaxed + kWidthTolerance);
            CHECK(membership(s, *r.theta_max));
            CHECK(membership(s, *r.theta_min));
            const Eigen::VectorXd phi = uniform_on_sphere(engine, d);
            s = update(std::move(s), phi, witness.dot(phi) + noise(engine));
            CHECK(membership(s, witness));
        }
    }
}

TEST_CASE("exact width matches the brute-force grid oracle") {
    for (const auto& r : verify::check_width_oracle(24, 3)) {
        INFO(r.name << " worst " << r.worst);
        CHECK(r.passed());
    }
}

TEST_CASE("matrix determinant step") {
    const DeterminantStep a = matrix_determinant_step(Eigen::Matrix2d::Identity(), vec({1, 0}));
    CHECK(a.growth_factor == doctest::Approx(2.0));
    CHECK(a.new_log_det == doctest::Approx(std::log(2.0)));

    Eigen::MatrixXd psi(1, 1);
    psi << 1.25;
    CHECK(matrix_determinant_step(psi, vec({1.0})).growth_factor == doctest::Approx(1.8));

    CHECK_THROWS_AS(matrix_determinant_step(-Eigen::Matrix2d::Identity(), vec({1, 0})), NumericalFailure);
}

TEST_CASE("a quadratic form of at least 1/2 grows the determinant by at least 3/2") {
    Engine engine(23);
    int triggered = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 6;
        FixedRegularizerGram gram(d, 0.05);
        for (int k = 0; k < 10; ++k) {
            const Eigen::VectorXd phi = uniform_on_sphere(engine, d);
            const double q = gram.quadratic_form(phi);
            const DeterminantStep step = matrix_determinant_step(gram.matrix(), phi);
            CHECK(step.growth_factor == doctest::Approx(1.0 + q).epsilon(1e-9));
            if (q >= 0.5) {
                ++triggered;
                CHECK(step.growth_factor >= 1.5);
            }
            gram.add(phi);
        }
    }
    CHECK(triggered > 0);
}

TEST_CASE("determinant identities on random sequences") {
    for (const auto& r : verify::check_determinants(100, 9)) {
        INFO(r.name << " worst " << r.worst);
        CHECK(r.passed());
    }
}

TEST_CASE("fixed-regularizer quadratic form never grows under a repeated observation") {
    Engine engine(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + trial % 8;
        FixedRegularizerGram gram(d, 0.1);
        for (int k = 0; k < 5; ++k) gram.add(uniform_on_sphere(engine, d));
        const Eigen::VectorXd phi = uniform_on_sphere(engine, d);
        double prev = gram.quadratic_form(phi);
        for (int k = 0; k < 10; ++k) {
            gram.add(phi);
            const double q = gram.quadratic_form(phi);
            CHECK(q <= prev + 1e-12);
            prev = q;
        }
    }
}

TEST_CASE("state debug dump replays to the same state") {
    Engine engine(2);
    ConfidenceState s(3, 0.2);
    for (int k = 0; k < 4; ++k) s = update(std::move(s), uniform_on_sphere(engine, 3), 0.25 * k);
    const ConfidenceState back = state_from_json(state_to_json(s));
    CHECK(back.t() == s.t());
    CHECK(back.gram() == s.gram());
    CHECK(back.xy() == s.xy());
}
