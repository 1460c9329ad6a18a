#pragma once

// Width-maximizing identification agent and comparison baselines.
//
// Each round the agent pulls the action whose prediction spread over the
// confidence set is largest. Once that largest width drops to eps' - 2 eps it
// stops and recommends the optimistic action, i.e. the one with the largest
// attainable prediction over the confidence set. Observations are noiseless.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mbl/geometry.hpp"
#include "mbl/instances.hpp"

namespace mbl {

enum class WidthMode { relaxed, exact };
enum class TieBreak { lowest_index };

std::string_view to_string(WidthMode mode);
WidthMode parse_width_mode(std::string_view text);

struct AgentConfig {
    double epsilon = 0.0;        // declared misspecification
    double epsilon_prime = 0.25; // target tolerance
    WidthMode width_mode = WidthMode::relaxed;
    std::size_t max_trials = 0;  // 0 selects 4 * n_actions
    TieBreak tie_break = TieBreak::lowest_index;
    double solver_tol = kWidthTolerance;
};

struct Round {
    std::size_t t = 0;
    Action action = 0;
    double width = 0.0;  // NaN for baselines, which do not compute widths
    double y = 0.0;
};

struct Trace {
    std::vector<Round> rounds;
    bool stopped = false;
    std::size_t trials = 0;
    std::optional<Action> recommendation;
    double bound_B = 0.0;
    double epsilon_prime_min = 0.0;
    std::size_t wide_round_count = 0;
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
};

/// 3 d ln(1 + 1 / (d eps^2)).
double trial_bound(int d, double epsilon);
/// 2 eps (1 + sqrt(trial_bound(d, eps))); the smallest eps' the guarantee covers.
double min_tolerance(int d, double epsilon);

/// trial_bound / min_tolerance extended to eps = 0 by their limits (inf and 0).
double trial_bound_or_inf(int d, double epsilon);
double min_tolerance_or_zero(int d, double epsilon);

/// Configured width of every action in the current state.
Eigen::VectorXd action_widths(const ConfidenceState& state, const Instance& instance, const AgentConfig& config);

struct Selection {
    Action action = 0;
    double width = 0.0;
};
Selection select_action(const ConfidenceState& state, const Instance& instance, const AgentConfig& config);

/// Optimistic action: argmax over x of max_{theta in Theta_t} theta^T phi(x).
Action recommend(const ConfidenceState& state, const Instance& instance, double tol = kWidthTolerance);

/// Initial confidence state an episode with `config` starts from.
ConfidenceState initial_state(const Instance& instance, const AgentConfig& config);

Trace run_episode(const Instance& instance, const AgentConfig& config);

enum class BaselineKind { exhaustive, uniform_random, greedy_ls };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view text);

/// Baselines stop once they observe a reward within eps' of the best reward.
/// exhaustive scans actions in index order, uniform_random samples uniformly,
/// greedy_ls first pulls a spanning set of actions (scanning in index order)
/// and then pulls the argmax of the ridge least-squares prediction.
Trace run_baseline(const Instance& instance, BaselineKind kind, std::uint64_t seed, std::size_t max_trials,
                   double epsilon_prime = 0.0);

bool recommendation_optimal(const Instance& instance, const Trace& trace);

}  // namespace mbl
