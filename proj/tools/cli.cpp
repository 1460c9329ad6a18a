#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbl/agent.hpp"
#include "mbl/errors.hpp"
#include "mbl/harness.hpp"
#include "mbl/instances.hpp"
#include "mbl/serialize.hpp"
#include "mbl/verify.hpp"

namespace mbl::cli {

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level_from_env() {
    const char* raw = std::getenv("MBL_LOG");
    if (!raw) return LogLevel::info;
    const std::string v(raw);
    if (v == "error") return LogLevel::error;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::info;
}

struct Logger {
    std::ostream& sink;
    LogLevel level;
    void info(const std::string& msg) const {
        if (level >= LogLevel::info) sink << "[info] " << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level >= LogLevel::debug) sink << "[debug] " << msg << '\n';
    }
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidParam(std::string("cannot parse ") + what + " '" + s + "'");
    }
}

long long parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidParam(std::string("cannot parse ") + what + " '" + s + "'");
    }
}

// lo:hi:steps
LogRange parse_log_range(const std::string& s) {
    const auto p = split(s, ':');
    if (p.size() != 3) throw InvalidParam("range must be lo:hi:steps, got '" + s + "'");
    return {parse_double(p[0], "range"), parse_double(p[1], "range"), static_cast<int>(parse_int(p[2], "steps"))};
}

IntRange parse_int_range(const std::string& s) {
    const auto p = split(s, ':');
    if (p.size() != 3) throw InvalidParam("range must be lo:hi:steps, got '" + s + "'");
    return {static_cast<int>(parse_int(p[0], "range")), static_cast<int>(parse_int(p[1], "range")),
            static_cast<int>(parse_int(p[2], "steps"))};
}

// "3,5,9" or a half-open "lo:hi"
std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& items) {
    std::vector<std::uint64_t> seeds;
    for (const auto& item : items) {
        const auto p = split(item, ':');
        if (p.size() == 2) {
            const long long lo = parse_int(p[0], "seed");
            const long long hi = parse_int(p[1], "seed");
            if (lo < 0 || hi < lo) throw InvalidParam("bad seed range '" + item + "'");
            for (long long s = lo; s < hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
        } else {
            const long long s = parse_int(item, "seed");
            if (s < 0) throw InvalidParam("seeds must be nonnegative");
            seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    return seeds;
}

std::optional<double> parse_epsilon_prime(const std::string& s) {
    if (s == "min") return std::nullopt;
    return parse_double(s, "epsilon-prime");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

// ---------------------------------------------------------------------------

struct GenArgs {
    std::string kind;
    long long n_actions = 0;
    long long dim = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::optional<long long> x_star;
    int max_attempts = 64;
    std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
    if (a.n_actions < 2 || a.dim < 1) throw InvalidParam("--n-actions must be >= 2 and --dim >= 1");
    const InstanceKind kind = parse_instance_kind(a.kind);
    Instance inst;
    if (kind == InstanceKind::needle) {
        if (!a.x_star) throw InvalidParam("--x-star is required for needle instances");
        if (*a.x_star < 0) throw InvalidParam("--x-star must be nonnegative");
        inst = gen_needle_instance(static_cast<std::size_t>(a.n_actions), static_cast<Action>(*a.x_star),
                                   static_cast<int>(a.dim), a.epsilon, a.seed, a.max_attempts);
    } else {
        inst = gen_realizable_instance(static_cast<std::size_t>(a.n_actions), static_cast<int>(a.dim), a.epsilon,
                                       a.seed);
    }
    write_instance(a.out, inst);
    out << "wrote " << a.out << " (" << to_string(inst.kind) << ", n_actions=" << inst.n_actions()
        << ", dim=" << inst.dim() << ")\n"
        << "certificate_error " << format_number(inst.certificate.achieved_error, 17) << '\n'
        << "certificate_theta_norm " << format_number(inst.certificate.theta_norm, 17) << '\n';
    return kExitOk;
}

struct RunArgs {
    std::string instance;
    std::optional<double> epsilon;
    std::string epsilon_prime;
    std::string width_mode = "relaxed";
    std::size_t max_trials = 0;
    std::string out;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    const Instance inst = read_instance(a.instance);
    AgentConfig config;
    config.epsilon = a.epsilon ? *a.epsilon : inst.epsilon;
    if (!(config.epsilon >= 0.0)) throw InvalidParam("--epsilon must be nonnegative");
    const double eps_min = min_tolerance_or_zero(inst.dim(), config.epsilon);
    const auto eps_prime = parse_epsilon_prime(a.epsilon_prime);
    config.epsilon_prime = eps_prime ? *eps_prime : eps_min;
    if (!(config.epsilon_prime > 0.0)) throw InvalidParam("--epsilon-prime must be positive");
    config.width_mode = parse_width_mode(a.width_mode);
    config.max_trials = a.max_trials;

    if (config.epsilon_prime <= 2.0 * config.epsilon) {
        err << "warning: stopping rule unreachable (epsilon' <= 2 epsilon); running to the trial budget\n";
    }
    if (config.epsilon < inst.epsilon) {
        err << "warning: declared epsilon is below the instance's certified epsilon; no guarantee applies\n";
    }

    const Trace trace = run_episode(inst, config);
    if (!a.out.empty()) {
        auto file = open_output(a.out);
        write_trace_jsonl(file, inst, trace);
        if (!file) throw IoError("failed writing " + a.out);
    }
    const bool guarantee = config.epsilon > 0.0 && config.epsilon_prime >= eps_min && config.epsilon >= inst.epsilon;
    out << "trials " << trace.trials << '\n'
        << "stopped " << (trace.stopped ? "true" : "false") << '\n'
        << "recommendation " << (trace.recommendation ? std::to_string(*trace.recommendation) : "none") << '\n'
        << "recommendation_optimal " << (recommendation_optimal(inst, trace) ? "true" : "false") << '\n'
        << "bound_B " << format_number(trace.bound_B, 12) << '\n'
        << "epsilon_prime_min " << format_number(trace.epsilon_prime_min, 12) << '\n'
        << "wide_rounds " << trace.wide_round_count << '\n'
        << "guarantee_active " << (guarantee ? "true" : "false") << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::vector<std::string> kinds;
    std::vector<std::size_t> n_actions;
    std::vector<int> dims;
    std::vector<double> epsilons;
    std::vector<std::string> agents;
    std::vector<std::string> seeds;
    std::string epsilon_prime = "min";
    std::size_t max_trials = 0;
    int max_attempts = 64;
    int workers = 1;
    std::string out;
    bool no_timestamp = false;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, const Logger& log) {
    SweepSpec spec;
    for (const auto& k : a.kinds) spec.instance_kinds.push_back(parse_instance_kind(k));
    spec.n_actions_grid = a.n_actions;
    spec.dim_grid = a.dims;
    spec.epsilon_grid = a.epsilons;
    for (const auto& name : a.agents) spec.agents.push_back(parse_agent_spec(name));
    spec.seeds = parse_seeds(a.seeds);
    spec.epsilon_prime = parse_epsilon_prime(a.epsilon_prime);
    spec.max_trials = a.max_trials;
    spec.max_attempts = a.max_attempts;
    spec.workers = a.workers;
    spec.output_path = a.out;
    spec.timestamp = !a.no_timestamp;
    if (a.out.empty()) throw InvalidParam("--out is required");

    log.info("sweep over " + std::to_string(spec.seeds.size()) + " seeds with " + std::to_string(spec.workers) +
             " worker(s)");
    const auto rows = run_sweep(spec);
    std::size_t ok = 0, stopped = 0, failed = 0;
    for (const auto& r : rows) {
        ok += r.status == "ok";
        stopped += r.stopped;
        failed += r.status == "gen_failed";
    }
    out << "rows " << rows.size() << '\n'
        << "ok " << ok << '\n'
        << "stopped " << stopped << '\n'
        << "gen_failed " << failed << '\n'
        << "wrote " << a.out << '\n';
    return kExitOk;
}

struct RegimeArgs {
    long long n_actions = 0;
    std::string eps;
    std::string dim;
    std::string out;
};

int cmd_regime_map(const RegimeArgs& a, std::ostream& out) {
    if (a.n_actions < 2) throw InvalidParam("--n-actions must be >= 2");
    if (a.out.empty()) throw InvalidParam("--out is required");
    const auto cells = regime_map(static_cast<std::size_t>(a.n_actions), parse_log_range(a.eps),
                                  parse_int_range(a.dim));
    auto file = open_output(a.out);
    write_regime_csv(file, cells);
    if (!file) throw IoError("failed writing " + a.out);
    std::size_t lower = 0, upper = 0, exact = 0;
    for (const auto& c : cells) {
        lower += c.lower_regime;
        upper += c.upper_regime_simplified;
        exact += c.upper_condition_exact;
    }
    out << "rows " << cells.size() << '\n'
        << "lower_regime " << lower << '\n'
        << "upper_regime_simplified " << upper << '\n'
        << "upper_condition_exact " << exact << '\n'
        << "grey " << cells.size() - lower - upper << '\n'
        << "wrote " << a.out << '\n';
    return kExitOk;
}

int cmd_verify(std::uint64_t seed, std::ostream& out) {
    bool all = true;
    for (const auto& r : verify::run_all(seed)) {
        out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.violations << '/' << r.trials
            << " violations, worst " << format_number(r.worst, 6) << '\n';
        all = all && r.passed();
    }
    out << (all ? "verify: all checks passed\n" : "verify: violations found\n");
    return all ? kExitOk : kExitRuntime;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const Logger log{err, log_level_from_env()};
    CLI::App app{"Bandit learning with a misspecified linear representation"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate an instance and write it as JSON");
    gen_cmd->add_option("--kind", gen.kind, "needle | realizable")->required();
    gen_cmd->add_option("--n-actions", gen.n_actions)->required();
    gen_cmd->add_option("--dim", gen.dim)->required();
    gen_cmd->add_option("--epsilon", gen.epsilon)->required();
    gen_cmd->add_option("--seed", gen.seed)->required();
    gen_cmd->add_option("--x-star", gen.x_star, "rewarding action (needle only)");
    gen_cmd->add_option("--max-attempts", gen.max_attempts);
    gen_cmd->add_option("--out", gen.out)->required();

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run the width agent on an instance file");
    run_cmd->add_option("--instance", run_args.instance)->required();
    run_cmd->add_option("--epsilon", run_args.epsilon, "declared epsilon (default: the instance's)");
    run_cmd->add_option("--epsilon-prime", run_args.epsilon_prime, "tolerance, or 'min'")->required();
    run_cmd->add_option("--width-mode", run_args.width_mode, "relaxed | exact");
    run_cmd->add_option("--max-trials", run_args.max_trials, "0 means 4 * n_actions");
    run_cmd->add_option("--out", run_args.out, "trace JSONL path");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Seeded Monte Carlo sweep to CSV");
    sweep_cmd->add_option("--kinds", sweep.kinds)->delimiter(',');
    sweep_cmd->add_option("--n-actions", sweep.n_actions)->delimiter(',');
    sweep_cmd->add_option("--dims", sweep.dims)->delimiter(',');
    sweep_cmd->add_option("--epsilons", sweep.epsilons)->delimiter(',');
    sweep_cmd->add_option("--agents", sweep.agents, "width, width_exact, exhaustive, uniform_random, greedy_ls")
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep.seeds, "list and/or lo:hi ranges")->delimiter(',');
    sweep_cmd->add_option("--epsilon-prime", sweep.epsilon_prime, "tolerance, or 'min'");
    sweep_cmd->add_option("--max-trials", sweep.max_trials);
    sweep_cmd->add_option("--max-attempts", sweep.max_attempts);
    sweep_cmd->add_option("--workers", sweep.workers);
    sweep_cmd->add_option("--out", sweep.out);
    sweep_cmd->add_flag("--no-timestamp", sweep.no_timestamp);

    RegimeArgs regime;
    auto* regime_cmd = app.add_subcommand("regime-map", "Classify an (epsilon, d) grid into regimes");
    regime_cmd->add_option("--n-actions", regime.n_actions)->required();
    regime_cmd->add_option("--eps", regime.eps, "lo:hi:steps, log-spaced")->required();
    regime_cmd->add_option("--dim", regime.dim, "lo:hi:steps, integer-spaced")->required();
    regime_cmd->add_option("--out", regime.out)->required();

    std::uint64_t verify_seed = 0;
    auto* verify_cmd = app.add_subcommand("verify", "Run the brute-force oracle checks");
    verify_cmd->add_option("--seed", verify_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (*gen_cmd) return cmd_gen(gen, out);
        if (*run_cmd) return cmd_run(run_args, out, err);
        if (*sweep_cmd) return cmd_sweep(sweep, out, log);
        if (*regime_cmd) return cmd_regime_map(regime, out);
        if (*verify_cmd) return cmd_verify(verify_seed, out);
    } catch (const InvalidParam& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DimensionMismatch& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace mbl::cli
