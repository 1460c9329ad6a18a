#include "mbl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "mbl/errors.hpp"
#include "mbl/rng.hpp"

namespace mbl {

namespace {
constexpr double kTieSlack = 1e-12;
}  // namespace

std::string_view to_string(WidthMode mode) { return mode == WidthMode::relaxed ? "relaxed" : "exact"; }

WidthMode parse_width_mode(std::string_view text) {
    if (text == "relaxed") return WidthMode::relaxed;
    if (text == "exact") return WidthMode::exact;
    throw InvalidParam("unknown width mode '" + std::string(text) + "'");
}

std::string_view to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::exhaustive: return "exhaustive";
        case BaselineKind::uniform_random: return "uniform_random";
        case BaselineKind::greedy_ls: return "greedy_ls";
    }
    return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view text) {
    if (text == "exhaustive") return BaselineKind::exhaustive;
    if (text == "uniform_random" || text == "uniform") return BaselineKind::uniform_random;
    if (text == "greedy_ls") return BaselineKind::greedy_ls;
    throw InvalidParam("unknown baseline '" + std::string(text) + "'");
}

double trial_bound(int d, double epsilon) {
    if (d < 1) throw InvalidParam("d must be positive");
    if (!(epsilon > 0.0)) throw InvalidParam("epsilon must be positive");
    return 3.0 * d * std::log1p(1.0 / (d * epsilon * epsilon));
}

double min_tolerance(int d, double epsilon) {
    return 2.0 * epsilon * (1.0 + std::sqrt(trial_bound(d, epsilon)));
}

double trial_bound_or_inf(int d, double epsilon) {
    return epsilon > 0.0 ? trial_bound(d, epsilon) : std::numeric_limits<double>::infinity();
}

double min_tolerance_or_zero(int d, double epsilon) { return epsilon > 0.0 ? min_tolerance(d, epsilon) : 0.0; }

ConfidenceState initial_state(const Instance& instance, const AgentConfig& config) {
    const double eps = config.width_mode == WidthMode::relaxed ? std::max(config.epsilon, kRelaxedEpsilonFloor)
                                                               : config.epsilon;
    return ConfidenceState(instance.dim(), eps);
}

Eigen::VectorXd action_widths(const ConfidenceState& state, const Instance& instance, const AgentConfig& config) {
    if (state.dim() != instance.dim()) throw DimensionMismatch("state and instance dimensions differ");
    if (config.width_mode == WidthMode::relaxed) return relaxed_widths(state, instance.features);

    const ExactWidthSolver solver(state);
    Eigen::VectorXd widths(static_cast<Eigen::Index>(instance.n_actions()));
    for (Action x = 0; x < instance.n_actions(); ++x) {
        widths[static_cast<Eigen::Index>(x)] = *solver.width(instance.phi(x), config.solver_tol).exact;
    }
    return widths;
}

Selection select_action(const ConfidenceState& state, const Instance& instance, const AgentConfig& config) {
    const Eigen::VectorXd widths = action_widths(state, instance, config);
    Selection best{0, widths[0]};
    for (Eigen::Index x = 1; x < widths.size(); ++x) {
        // Widths equal up to rounding are ties; the earlier action keeps them.
        if (widths[x] > best.width + kTieSlack * std::max(1.0, std::abs(best.width))) best = {static_cast<Action>(x), widths[x]};
    }
    return best;
}

Action recommend(const ConfidenceState& state, const Instance& instance, double tol) {
    if (state.dim() != instance.dim()) throw DimensionMismatch("state and instance dimensions differ");
    const ExactWidthSolver solver(state);
    const auto n = static_cast<Eigen::Index>(instance.n_actions());

    // theta^T phi over Theta_t lies within [phi^T c, phi^T c + spread] for the
    // feasible center c, where spread bounds the width. Only actions whose
    // upper end reaches the best lower end need an exact solve.
    const Eigen::VectorXd lower = instance.features * solver.center();
    Eigen::VectorXd spread = 2.0 * instance.features.rowwise().norm();
    if (state.t() > 0 && state.has_psi()) spread = spread.cwiseMin(relaxed_widths(state, instance.features));
    const double floor = lower.maxCoeff();

    Action best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (Eigen::Index x = 0; x < n; ++x) {
        if (lower[x] + spread[x] < floor) continue;
        const double value = solver.maximize(instance.phi(static_cast<Action>(x)), tol).value;
        if (value > best_value) {
            best_value = value;
            best = static_cast<Action>(x);
        }
    }
    return best;
}

namespace {

Trace start_trace(const Instance& instance, double epsilon, double epsilon_prime) {
    Trace trace;
    trace.epsilon = epsilon;
    trace.epsilon_prime = epsilon_prime;
    trace.bound_B = trial_bound_or_inf(instance.dim(), epsilon);
    trace.epsilon_prime_min = min_tolerance_or_zero(instance.dim(), epsilon);
    return trace;
}

}  // namespace

Trace run_episode(const Instance& instance, const AgentConfig& config) {
    if (!(config.epsilon >= 0.0)) throw InvalidParam("epsilon must be nonnegative");
    if (!(config.epsilon_prime > 0.0)) throw InvalidParam("epsilon_prime must be positive");
    const std::size_t budget = config.max_trials ? config.max_trials : 4 * instance.n_actions();
    const double threshold = config.epsilon_prime - 2.0 * config.epsilon;

    Trace trace = start_trace(instance, config.epsilon, config.epsilon_prime);
    ConfidenceState state = initial_state(instance, config);
    for (;;) {
        const Selection sel = select_action(state, instance, config);
        if (sel.width <= threshold) {
            trace.stopped = true;
            trace.recommendation = recommend(state, instance, config.solver_tol);
            break;
        }
        if (trace.rounds.size() >= budget) break;

        const std::size_t t = state.t();
        const double y = instance.rewards[static_cast<Eigen::Index>(sel.action)];
        trace.rounds.push_back({t, sel.action, sel.width, y});
        if (sel.width >= 2.0 * config.epsilon * std::sqrt(static_cast<double>(t))) ++trace.wide_round_count;
        state = update(std::move(state), instance.phi(sel.action), y);
    }
    trace.trials = trace.rounds.size();
    return trace;
}

Trace run_baseline(const Instance& instance, BaselineKind kind, std::uint64_t seed, std::size_t max_trials,
                   double epsilon_prime) {
    const std::size_t n = instance.n_actions();
    const int d = instance.dim();
    const double target = instance.best_reward() - epsilon_prime;

    Trace trace = start_trace(instance, instance.epsilon, epsilon_prime);
    Engine engine = make_engine(seed, StreamTag::baseline);
    std::uniform_int_distribution<std::size_t> uniform(0, n - 1);

    // greedy_ls state
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd xy = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd span(d, 0);  // orthonormal basis of pulled features
    std::size_t scan = 0;
    constexpr double ridge = 1e-6;

    auto greedy_choice = [&]() -> Action {
        while (scan < n && span.cols() < d) {
            Eigen::VectorXd v = instance.phi(scan);
            if (span.cols() > 0) v -= span * (span.transpose() * v);
            const double norm = v.norm();
            const Action x = scan++;
            if (norm > 1e-8) {
                span.conservativeResize(Eigen::NoChange, span.cols() + 1);
                span.col(span.cols() - 1) = v / norm;
                return x;
            }
        }
        Eigen::MatrixXd reg = gram;
        reg.diagonal().array() += ridge;
        const Eigen::VectorXd theta = reg.ldlt().solve(xy);
        const Eigen::VectorXd pred = instance.features * theta;
        Action best = 0;
        for (Eigen::Index x = 1; x < pred.size(); ++x) {
            if (pred[x] > pred[static_cast<Eigen::Index>(best)]) best = static_cast<Action>(x);
        }
        return best;
    };

    while (trace.rounds.size() < max_trials) {
        const std::size_t t = trace.rounds.size();
        Action x = 0;
        switch (kind) {
            case BaselineKind::exhaustive: x = t % n; break;
            case BaselineKind::uniform_random: x = uniform(engine); break;
            case BaselineKind::greedy_ls: x = greedy_choice(); break;
        }
        const double y = instance.rewards[static_cast<Eigen::Index>(x)];
        trace.rounds.push_back({t, x, std::numeric_limits<double>::quiet_NaN(), y});
        if (kind == BaselineKind::greedy_ls) {
            const Eigen::VectorXd phi = instance.phi(x);
            gram += phi * phi.transpose();
            xy += y * phi;
        }
        if (y >= target) {
            trace.stopped = true;
            trace.recommendation = x;
            break;
        }
    }
    trace.trials = trace.rounds.size();
    return trace;
}

bool recommendation_optimal(const Instance& instance, const Trace& trace) {
    return trace.recommendation && is_eps_optimal(instance, *trace.recommendation, trace.epsilon_prime);
}

}  // namespace mbl
