#include "mbl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "mbl/errors.hpp"
#include "mbl/rng.hpp"
#include "mbl/serialize.hpp"

namespace mbl {

namespace {

constexpr int kCsvDigits = 12;

std::string csv_number(double v) { return format_number(v, kCsvDigits); }
const char* csv_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

RegimeCell classify_regime(double epsilon, int dim, std::size_t n_actions) {
    if (!(epsilon > 0.0)) throw InvalidParam("epsilon must be positive");
    if (dim < 1) throw InvalidParam("dim must be positive");
    if (n_actions < 2) throw InvalidParam("n_actions must be at least 2");
    RegimeCell cell;
    cell.epsilon = epsilon;
    cell.dim = dim;
    cell.n_actions = n_actions;
    cell.eps_sqrt_d = epsilon * std::sqrt(static_cast<double>(dim));
    cell.lower_regime = cell.eps_sqrt_d >= std::sqrt(8.0 * std::log(static_cast<double>(n_actions)));
    cell.upper_regime_simplified = cell.eps_sqrt_d <= kUpperRegimeCeiling;
    cell.upper_condition_exact = kRegimeEpsilonPrime >= min_tolerance(dim, epsilon);
    return cell;
}

std::vector<double> log_space(const LogRange& r) {
    if (!(r.lo > 0.0) || !(r.hi >= r.lo) || r.steps < 2) throw InvalidParam("log range needs 0 < lo <= hi, steps >= 2");
    std::vector<double> out(static_cast<std::size_t>(r.steps));
    const double a = std::log(r.lo);
    const double b = std::log(r.hi);
    for (int i = 0; i < r.steps; ++i) out[i] = std::exp(a + (b - a) * i / (r.steps - 1));
    out.front() = r.lo;
    out.back() = r.hi;
    return out;
}

std::vector<int> int_space(const IntRange& r) {
    if (r.lo < 1 || r.hi < r.lo || r.steps < 2) throw InvalidParam("integer range needs 1 <= lo <= hi, steps >= 2");
    std::vector<int> out(static_cast<std::size_t>(r.steps));
    for (int i = 0; i < r.steps; ++i) {
        out[i] = static_cast<int>(std::lround(r.lo + static_cast<double>(r.hi - r.lo) * i / (r.steps - 1)));
    }
    return out;
}

std::vector<RegimeCell> regime_map(std::size_t n_actions, const LogRange& epsilon_range, const IntRange& dim_range) {
    const auto eps = log_space(epsilon_range);
    const auto dims = int_space(dim_range);
    std::vector<RegimeCell> cells;
    cells.reserve(eps.size() * dims.size());
    for (double e : eps) {
        for (int d : dims) cells.push_back(classify_regime(e, d, n_actions));
    }
    return cells;
}

void write_regime_csv(std::ostream& out, const std::vector<RegimeCell>& cells) {
    out << "epsilon,dim,n_actions,eps_sqrt_d,lower_regime,upper_regime_simplified,upper_condition_exact\n";
    for (const auto& c : cells) {
        out << csv_number(c.epsilon) << ',' << c.dim << ',' << c.n_actions << ',' << csv_number(c.eps_sqrt_d) << ','
            << csv_bool(c.lower_regime) << ',' << csv_bool(c.upper_regime_simplified) << ','
            << csv_bool(c.upper_condition_exact) << '\n';
    }
}

AgentSpec parse_agent_spec(const std::string& name) {
    AgentSpec spec;
    spec.name = name;
    if (name == "width") return spec;
    if (name == "width_exact") {
        spec.width_mode = WidthMode::exact;
        return spec;
    }
    spec.is_width_agent = false;
    spec.baseline = parse_baseline_kind(name);
    spec.name = std::string(to_string(spec.baseline));
    return spec;
}

Action needle_position(std::uint64_t seed, std::size_t n_actions) {
    Engine engine = make_engine(seed, StreamTag::needle_position);
    return std::uniform_int_distribution<std::size_t>(0, n_actions - 1)(engine);
}

Instance sweep_instance(InstanceKind kind, std::size_t n_actions, int dim, double epsilon, std::uint64_t seed,
                        int max_attempts) {
    if (kind == InstanceKind::needle) {
        return gen_needle_instance(n_actions, needle_position(seed, n_actions), dim, epsilon, seed, max_attempts);
    }
    return gen_realizable_instance(n_actions, dim, epsilon, seed);
}

namespace {

struct Cell {
    InstanceKind kind;
    std::size_t n_actions;
    int dim;
    double epsilon;
    std::uint64_t seed;
};

std::vector<SweepResult> run_cell(const SweepSpec& spec, const Cell& cell) {
    std::vector<SweepResult> rows;
    auto base_row = [&](const AgentSpec& agent) {
        SweepResult row;
        row.kind = cell.kind;
        row.n_actions = cell.n_actions;
        row.dim = cell.dim;
        row.epsilon = cell.epsilon;
        row.agent = agent.name;
        row.seed = cell.seed;
        row.bound_B = trial_bound_or_inf(cell.dim, cell.epsilon);
        row.epsilon_prime_min = min_tolerance_or_zero(cell.dim, cell.epsilon);
        row.epsilon_prime = spec.epsilon_prime ? *spec.epsilon_prime : row.epsilon_prime_min;
        return row;
    };

    std::optional<Instance> instance;
    try {
        instance = sweep_instance(cell.kind, cell.n_actions, cell.dim, cell.epsilon, cell.seed, spec.max_attempts);
    } catch (const Error&) {
        for (const auto& agent : spec.agents) {
            SweepResult row = base_row(agent);
            row.status = "gen_failed";
            rows.push_back(std::move(row));
        }
        return rows;
    }

    for (const auto& agent : spec.agents) {
        SweepResult row = base_row(agent);
        try {
            Trace trace;
            if (agent.is_width_agent) {
                AgentConfig config;
                config.epsilon = cell.epsilon;
                config.epsilon_prime = row.epsilon_prime;
                config.width_mode = agent.width_mode;
                config.max_trials = spec.max_trials;
                trace = run_episode(*instance, config);
            } else {
                const std::size_t budget = spec.max_trials ? spec.max_trials : 4 * cell.n_actions;
                trace = run_baseline(*instance, agent.baseline, cell.seed, budget, row.epsilon_prime);
            }
            row.status = "ok";
            row.trials = trace.trials;
            row.stopped = trace.stopped;
            row.recommendation = trace.recommendation;
            row.recommendation_optimal = recommendation_optimal(*instance, trace);
            row.wide_rounds = trace.wide_round_count;
        } catch (const Error&) {
            row.status = "error";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<SweepResult> run_sweep(const SweepSpec& spec) {
    if (spec.instance_kinds.empty() || spec.n_actions_grid.empty() || spec.dim_grid.empty() ||
        spec.epsilon_grid.empty() || spec.agents.empty() || spec.seeds.empty()) {
        throw InvalidParam("sweep grids must be nonempty");
    }
    if (std::set<std::uint64_t>(spec.seeds.begin(), spec.seeds.end()).size() != spec.seeds.size()) {
        throw InvalidParam("sweep seeds must be distinct");
    }

    std::vector<Cell> cells;
    for (auto kind : spec.instance_kinds)
        for (auto n : spec.n_actions_grid)
            for (int d : spec.dim_grid)
                for (double e : spec.epsilon_grid)
                    for (auto s : spec.seeds) cells.push_back({kind, n, d, e, s});

    std::vector<std::vector<SweepResult>> per_cell(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) per_cell[i] = run_cell(spec, cells[i]);
    };
    const int workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(cells.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    std::vector<SweepResult> rows;
    for (auto& group : per_cell) std::move(group.begin(), group.end(), std::back_inserter(rows));
    std::stable_sort(rows.begin(), rows.end(), [](const SweepResult& a, const SweepResult& b) {
        return std::make_tuple(to_string(a.kind), a.n_actions, a.dim, a.epsilon, std::string_view(a.agent), a.seed) <
               std::make_tuple(to_string(b.kind), b.n_actions, b.dim, b.epsilon, std::string_view(b.agent), b.seed);
    });

    if (!spec.output_path.empty()) {
        std::ofstream out(spec.output_path);
        if (!out) throw IoError("cannot open " + spec.output_path.string() + " for writing");
        write_sweep_csv(out, rows, spec.timestamp);
        if (!out) throw IoError("failed writing " + spec.output_path.string());
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& rows, bool timestamp) {
    if (timestamp) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << "# generated " << buf << '\n';
    }
    out << "kind,n_actions,dim,epsilon,epsilon_prime,agent,seed,status,trials,stopped,recommendation,"
           "recommendation_optimal,bound_B,epsilon_prime_min,wide_rounds\n";
    for (const auto& r : rows) {
        out << to_string(r.kind) << ',' << r.n_actions << ',' << r.dim << ',' << csv_number(r.epsilon) << ','
            << csv_number(r.epsilon_prime) << ',' << r.agent << ',' << r.seed << ',' << r.status << ',' << r.trials
            << ',' << csv_bool(r.stopped) << ',';
        if (r.recommendation) out << *r.recommendation;
        out << ',' << csv_bool(r.recommendation_optimal) << ',' << csv_number(r.bound_B) << ','
            << csv_number(r.epsilon_prime_min) << ',' << r.wide_rounds << '\n';
    }
}

}  // namespace mbl
