#include "mbl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/LU>

#include "mbl/errors.hpp"
#include "mbl/instances.hpp"

namespace mbl::verify {

namespace {

struct Feasibility {
    const ConfidenceState& state;
    double budget;

    bool operator()(const Eigen::VectorXd& theta) const {
        if (theta.squaredNorm() > 1.0) return false;
        double total = 0.0;
        for (const auto& obs : state.history()) {
            const double r = obs.y - obs.phi.dot(theta);
            total += r * r;
            if (total > budget) return false;
        }
        return true;
    }
};

// Local pattern search for max of phi^T theta over a convex set, starting from
// a feasible point.
double refine_max(const Feasibility& feasible, const Eigen::VectorXd& phi, Eigen::Vector2d best, double half_width) {
    double best_value = phi.dot(best);
    constexpr int kSide = 101;
    for (int iter = 0; iter < 200 && half_width > 1e-9; ++iter) {
        Eigen::Vector2d next = best;
        double next_value = best_value;
        bool on_edge = false;
        for (int i = 0; i < kSide; ++i) {
            for (int j = 0; j < kSide; ++j) {
                Eigen::Vector2d cand = best + half_width * Eigen::Vector2d(-1.0 + 2.0 * i / (kSide - 1),
                                                                           -1.0 + 2.0 * j / (kSide - 1));
                const double v = phi.dot(cand);
                if (v > next_value && feasible(cand)) {
                    next_value = v;
                    next = cand;
                    on_edge = i == 0 || j == 0 || i == kSide - 1 || j == kSide - 1;
                }
            }
        }
        best = next;
        best_value = next_value;
        if (!on_edge) half_width /= 4.0;
    }
    return best_value;
}

}  // namespace

GridExtremes brute_force_extremes(const ConfidenceState& state, const Eigen::VectorXd& phi) {
    const int d = state.dim();
    if (d > 2) throw InvalidParam("brute-force oracle supports dim <= 2");
    if (phi.size() != d) throw DimensionMismatch("phi has the wrong length");
    const Feasibility feasible{state, state.residual_budget()};

    GridExtremes out;
    out.max_value = -std::numeric_limits<double>::infinity();
    out.min_value = std::numeric_limits<double>::infinity();

    if (d == 1) {
        constexpr int kPoints = 1'000'000;
        Eigen::VectorXd theta(1);
        for (int i = 0; i < kPoints; ++i) {
            theta[0] = -1.0 + 2.0 * i / (kPoints - 1);
            if (!feasible(theta)) continue;
            out.feasible = true;
            const double v = phi[0] * theta[0];
            out.max_value = std::max(out.max_value, v);
            out.min_value = std::min(out.min_value, v);
        }
        return out;
    }

    constexpr int kSide = 1000;
    const double step = 2.0 / (kSide - 1);
    Eigen::Vector2d arg_max;
    Eigen::Vector2d arg_min;
    Eigen::VectorXd theta(2);
    for (int i = 0; i < kSide; ++i) {
        for (int j = 0; j < kSide; ++j) {
            theta << -1.0 + step * i, -1.0 + step * j;
            if (!feasible(theta)) continue;
            out.feasible = true;
            const double v = phi.dot(theta);
            if (v > out.max_value) {
                out.max_value = v;
                arg_max = theta;
            }
            if (v < out.min_value) {
                out.min_value = v;
                arg_min = theta;
            }
        }
    }
    if (!out.feasible) return out;
    out.max_value = refine_max(feasible, phi, arg_max, 4.0 * step);
    out.min_value = -refine_max(feasible, -phi, arg_min, 4.0 * step);
    return out;
}

double lu_log_det(const Eigen::MatrixXd& m) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    return lu.matrixLU().diagonal().array().abs().log().sum();
}

SmallState random_small_state(Engine& engine, int dim, std::size_t t, double epsilon) {
    SmallState out{ConfidenceState(dim, epsilon), 0.9 * uniform_in_ball(engine, dim), uniform_on_sphere(engine, dim)};
    std::uniform_real_distribution<double> noise(-epsilon, epsilon);
    for (std::size_t k = 0; k < t; ++k) {
        const Eigen::VectorXd phi = uniform_on_sphere(engine, dim);
        const double y = out.witness.dot(phi) + noise(engine);
        out.state = update(std::move(out.state), phi, y);
    }
    return out;
}

std::vector<CheckReport> check_width_oracle(std::size_t n_states, std::uint64_t seed) {
    CheckReport agree{"width oracle agreement (abs 1e-3)"};
    CheckReport dominance{"exact <= relaxed + 1e-6"};
    CheckReport witness{"witness membership"};
    Engine engine = make_engine(seed, StreamTag::state_sampler);
    std::uniform_int_distribution<int> dim_dist(1, 2);
    std::uniform_int_distribution<std::size_t> t_dist(0, 5);
    constexpr double kEps[] = {0.1, 0.5};

    for (std::size_t i = 0; i < n_states; ++i) {
        const int dim = dim_dist(engine);
        const std::size_t t = t_dist(engine);
        const double eps = kEps[i % 2];
        SmallState s = random_small_state(engine, dim, t, eps);

        const WidthReport report = exact_width(s.state, s.query);
        const GridExtremes grid = brute_force_extremes(s.state, s.query);
        const double gap = grid.feasible ? std::abs(*report.exact - grid.width())
                                         : std::numeric_limits<double>::infinity();
        ++agree.trials;
        agree.worst = std::max(agree.worst, gap);
        if (!(gap <= 1e-3)) ++agree.violations;

        const double excess = *report.exact - report.relaxed;
        ++dominance.trials;
        dominance.worst = std::max(dominance.worst, excess);
        if (excess > 1e-6) ++dominance.violations;

        ++witness.trials;
        if (!membership(s.state, s.witness)) ++witness.violations;
    }
    return {agree, dominance, witness};
}

std::vector<CheckReport> check_determinants(std::size_t n_trials, std::uint64_t seed) {
    CheckReport lemma{"matrix determinant lemma (rel 1e-8)"};
    CheckReport recursion{"rank-one log-det recursion (rel 1e-8)"};
    CheckReport cap{"AM-GM determinant cap (rel 1e-8)"};
    Engine engine = make_engine(seed, StreamTag::state_sampler, 1);
    std::uniform_int_distribution<int> dim_dist(1, 32);
    std::uniform_int_distribution<int> t_dist(1, 64);
    std::uniform_real_distribution<double> log_lambda(std::log(1e-3), std::log(10.0));

    auto rel_err = [](double log_a, double log_b) { return std::abs(std::expm1(log_a - log_b)); };

    for (std::size_t k = 0; k < n_trials; ++k) {
        const int d = dim_dist(engine);
        const int t = t_dist(engine);
        const double lambda = std::exp(log_lambda(engine));
        FixedRegularizerGram gram(d, lambda);
        for (int s = 0; s < t; ++s) {
            const Eigen::VectorXd phi = uniform_on_sphere(engine, d);
            const Eigen::MatrixXd before = gram.matrix();
            const DeterminantStep step = matrix_determinant_step(before, phi);
            const Eigen::MatrixXd after = before + phi * phi.transpose();
            const double oracle_after = lu_log_det(after);
            const double oracle_growth = std::exp(oracle_after - lu_log_det(before));

            const double e1 = std::max(rel_err(step.new_log_det, oracle_after),
                                       std::abs(step.growth_factor - oracle_growth) / oracle_growth);
            ++lemma.trials;
            lemma.worst = std::max(lemma.worst, e1);
            if (e1 > 1e-8) ++lemma.violations;

            gram.add(phi);
        }
        const double direct = lu_log_det(gram.matrix());
        const double e2 = rel_err(gram.log_det(), direct);
        ++recursion.trials;
        recursion.worst = std::max(recursion.worst, e2);
        if (e2 > 1e-8) ++recursion.violations;

        // det <= (lambda + t/d)^d up to relative 1e-8
        const double log_cap = d * std::log(lambda + static_cast<double>(t) / d);
        const double excess = std::expm1(direct - log_cap);
        ++cap.trials;
        cap.worst = std::max(cap.worst, excess);
        if (excess > 1e-8) ++cap.violations;
    }
    return {lemma, recursion, cap};
}

CheckReport check_needle_certificates(std::size_t n_instances, std::uint64_t seed) {
    CheckReport report{"needle feature certificates"};
    Engine engine = make_engine(seed, StreamTag::state_sampler, 2);
    std::uniform_int_distribution<int> log_n(2, 8);
    std::uniform_real_distribution<double> eps_dist(0.3, 0.6);
    for (std::size_t k = 0; k < n_instances; ++k) {
        const std::size_t n = std::size_t{1} << log_n(engine);
        const double eps = eps_dist(engine);
        const int dim = lemma_dimension(n, eps);
        const Action x_star = std::uniform_int_distribution<std::size_t>(0, n - 1)(engine);
        const Instance inst = gen_needle_instance(n, x_star, dim, eps, engine());
        const FeatureAudit audit = audit_features(inst.features);
        const MisspecCertificate cert = certify_misspecification(inst, inst.phi(x_star));
        const double worst = std::max({audit.max_abs_inner - eps, audit.max_norm_deviation - kNormTolerance,
                                       cert.achieved_error - eps, cert.theta_norm - 1.0 - kCertificateTolerance});
        ++report.trials;
        report.worst = std::max(report.worst, worst);
        if (worst > 0.0) ++report.violations;
    }
    return report;
}

std::vector<CheckReport> run_all(std::uint64_t seed) {
    std::vector<CheckReport> out = check_width_oracle(200, seed);
    for (auto& r : check_determinants(1000, seed)) out.push_back(std::move(r));
    out.push_back(check_needle_certificates(20, seed));
    return out;
}

}  // namespace mbl::verify
