#pragma once

// Seeded Monte Carlo sweeps and the (epsilon, d) regime map.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbl/agent.hpp"
#include "mbl/instances.hpp"

namespace mbl {

/// Tolerance used when classifying regimes.
inline constexpr double kRegimeEpsilonPrime = 0.25;
/// eps sqrt(d) at or below this satisfies the simplified upper-bound condition.
inline constexpr double kUpperRegimeCeiling = 0.01;

struct RegimeCell {
    double epsilon = 0.0;
    int dim = 0;
    std::size_t n_actions = 0;
    double eps_sqrt_d = 0.0;
    bool lower_regime = false;            // eps sqrt(d) >= sqrt(8 ln N)
    bool upper_regime_simplified = false; // eps sqrt(d) <= 1/100
    bool upper_condition_exact = false;   // 1/4 >= min_tolerance(d, eps)
};

RegimeCell classify_regime(double epsilon, int dim, std::size_t n_actions);

struct LogRange {
    double lo = 0.0;
    double hi = 0.0;
    int steps = 0;
};
struct IntRange {
    int lo = 0;
    int hi = 0;
    int steps = 0;
};

std::vector<double> log_space(const LogRange& range);
/// Integers rounded from an even linear spacing of [lo, hi].
std::vector<int> int_space(const IntRange& range);

/// classify_regime over the grid, epsilon outer and d inner.
std::vector<RegimeCell> regime_map(std::size_t n_actions, const LogRange& epsilon_range, const IntRange& dim_range);

void write_regime_csv(std::ostream& out, const std::vector<RegimeCell>& cells);

struct AgentSpec {
    std::string name;
    bool is_width_agent = true;
    WidthMode width_mode = WidthMode::relaxed;
    BaselineKind baseline = BaselineKind::exhaustive;
};

/// "width" (relaxed), "width_exact", "exhaustive", "uniform_random", "greedy_ls".
AgentSpec parse_agent_spec(const std::string& name);

struct SweepSpec {
    std::vector<InstanceKind> instance_kinds;
    std::vector<std::size_t> n_actions_grid;
    std::vector<int> dim_grid;
    std::vector<double> epsilon_grid;
    std::vector<AgentSpec> agents;
    std::vector<std::uint64_t> seeds;
    std::optional<double> epsilon_prime;  // unset: min_tolerance(d, eps) per cell
    std::size_t max_trials = 0;           // 0: 4 * n_actions
    int max_attempts = 64;
    int workers = 1;
    std::filesystem::path output_path;    // empty: do not persist
    bool timestamp = true;
};

struct SweepResult {
    InstanceKind kind = InstanceKind::needle;
    std::size_t n_actions = 0;
    int dim = 0;
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
    std::string agent;
    std::uint64_t seed = 0;
    std::string status;  // ok | gen_failed | error
    std::size_t trials = 0;
    bool stopped = false;
    std::optional<Action> recommendation;
    bool recommendation_optimal = false;
    double bound_B = 0.0;
    double epsilon_prime_min = 0.0;
    std::size_t wide_rounds = 0;
};

/// Rewarding action of the seeded needle instance used by sweeps.
Action needle_position(std::uint64_t seed, std::size_t n_actions);

/// The instance a sweep generates for one grid point.
Instance sweep_instance(InstanceKind kind, std::size_t n_actions, int dim, double epsilon, std::uint64_t seed,
                        int max_attempts);

/// Runs every grid point x seed x agent. Rows come back (and are written) in
/// lexicographic order of (kind, n_actions, dim, epsilon, agent, seed) no
/// matter how many workers run.
std::vector<SweepResult> run_sweep(const SweepSpec& spec);

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& rows, bool timestamp);

}  // namespace mbl
