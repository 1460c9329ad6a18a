#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mbl/errors.hpp"
#include "mbl/harness.hpp"

using namespace mbl;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mbl_test_harness_" + name);
}

}  // namespace

TEST_CASE("classify_regime boundary evaluations") {
    const RegimeCell a = classify_regime(0.5, 128, 16);
    CHECK(a.eps_sqrt_d == doctest::Approx(5.656854249492381));
    CHECK(a.lower_regime);  // >= sqrt(8 ln 16) = 4.7096
    CHECK_FALSE(a.upper_regime_simplified);

    const RegimeCell b = classify_regime(0.0005, 100, 16);
    CHECK(b.eps_sqrt_d == doctest::Approx(0.005));
    CHECK(b.upper_regime_simplified);
    CHECK_FALSE(b.lower_regime);

    const RegimeCell c = classify_regime(0.1, 4, 1024);
    CHECK(c.eps_sqrt_d == doctest::Approx(0.2));
    CHECK_FALSE(c.lower_regime);
    CHECK_FALSE(c.upper_regime_simplified);

    CHECK_THROWS_AS(classify_regime(0.0, 4, 16), InvalidParam);
}

TEST_CASE("lower regime threshold at N = 2") {
    const double threshold = std::sqrt(8.0 * std::log(2.0));  // 2.3548...
    CHECK(threshold == doctest::Approx(2.3548200450309493));
    CHECK(classify_regime(threshold * 1.0001, 1, 2).lower_regime);
    CHECK_FALSE(classify_regime(threshold * 0.9999, 1, 2).lower_regime);
}

TEST_CASE("regime_map shape and ordering") {
    const auto cells = regime_map(1024, {1e-6, 2e-6, 2}, {1, 4, 2});
    REQUIRE(cells.size() == 4);
    for (const auto& c : cells) CHECK(c.upper_regime_simplified);
    CHECK(cells[0].epsilon == 1e-6);
    CHECK(cells[0].dim == 1);
    CHECK(cells[1].dim == 4);
    CHECK(cells[2].epsilon == 2e-6);

    const auto big = regime_map(1024, {1e-4, 10, 60}, {1, 1024, 60});
    CHECK(big.size() == 3600);
    CHECK_THROWS_AS(regime_map(16, {1e-3, 1, 1}, {1, 4, 2}), InvalidParam);
}

TEST_CASE("regime disjointness and exact-condition containment") {
    for (std::size_t n : {std::size_t{2}, std::size_t{1} << 10, std::size_t{1} << 20}) {
        for (const auto& c : regime_map(n, {1e-6, 100, 60}, {1, 100000, 60})) {
            CHECK_FALSE((c.lower_regime && c.upper_regime_simplified));
            CHECK_FALSE((c.upper_condition_exact && c.lower_regime));
        }
    }
}

TEST_CASE("regime csv columns") {
    std::ostringstream out;
    write_regime_csv(out, {classify_regime(0.5, 128, 16)});
    const std::string text = out.str();
    CHECK(text.rfind("epsilon,dim,n_actions,eps_sqrt_d,lower_regime,upper_regime_simplified,upper_condition_exact\n", 0) == 0);
    CHECK(text.find("0.5,128,16,5.65685424949,true,false,false") != std::string::npos);
}

TEST_CASE("one cell, one seed, one agent gives one row") {
    SweepSpec spec;
    spec.instance_kinds = {InstanceKind::realizable};
    spec.n_actions_grid = {30};
    spec.dim_grid = {3};
    spec.epsilon_grid = {0.01};
    spec.agents = {parse_agent_spec("width")};
    spec.seeds = {4};
    spec.output_path = temp_file("one.csv");
    spec.timestamp = false;
    const auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    const std::string text = slurp(spec.output_path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("kind,n_actions,dim,epsilon,epsilon_prime,agent,seed,status,trials,stopped,recommendation,"
                     "recommendation_optimal,bound_B,epsilon_prime_min,wide_rounds\n",
                     0) == 0);
}

TEST_CASE("sweep validation") {
    SweepSpec spec;
    CHECK_THROWS_AS(run_sweep(spec), InvalidParam);
    spec.instance_kinds = {InstanceKind::realizable};
    spec.n_actions_grid = {10};
    spec.dim_grid = {2};
    spec.epsilon_grid = {0.01};
    spec.agents = {parse_agent_spec("width")};
    spec.seeds = {1, 1};
    CHECK_THROWS_AS(run_sweep(spec), InvalidParam);
    CHECK_THROWS_AS(parse_agent_spec("oracle"), InvalidParam);
}

TEST_CASE("realizable sweep respects the trial bound") {
    SweepSpec spec;
    spec.instance_kinds = {InstanceKind::realizable};
    spec.n_actions_grid = {200};
    spec.dim_grid = {4, 8, 16};
    spec.epsilon_grid = {0.001};
    spec.agents = {parse_agent_spec("width")};
    for (std::uint64_t s = 0; s < 10; ++s) spec.seeds.push_back(s);
    const auto rows = run_sweep(spec);
    CHECK(rows.size() == 30);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(r.stopped);
        CHECK(static_cast<double>(r.trials) <= std::ceil(r.bound_B));
        CHECK(r.recommendation_optimal);
    }
}

TEST_CASE("generation failures become rows") {
    SweepSpec spec;
    spec.instance_kinds = {InstanceKind::needle};
    spec.n_actions_grid = {300};
    spec.dim_grid = {3};
    spec.epsilon_grid = {0.05};
    spec.agents = {parse_agent_spec("width"), parse_agent_spec("exhaustive")};
    spec.seeds = {0};
    spec.max_attempts = 3;
    const auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) CHECK(r.status == "gen_failed");
}

TEST_CASE("sweep output is byte-identical across worker counts") {
    SweepSpec spec;
    spec.instance_kinds = {InstanceKind::needle, InstanceKind::realizable};
    spec.n_actions_grid = {16, 24};
    spec.dim_grid = {6};
    spec.epsilon_grid = {0.2, 0.01};
    spec.agents = {parse_agent_spec("width"), parse_agent_spec("exhaustive"), parse_agent_spec("uniform_random")};
    spec.seeds = {3, 1, 2};
    spec.timestamp = false;
    spec.workers = 1;
    spec.output_path = temp_file("w1.csv");
    const auto rows = run_sweep(spec);
    spec.workers = 4;
    spec.output_path = temp_file("w4.csv");
    run_sweep(spec);
    CHECK(slurp(temp_file("w1.csv")) == slurp(temp_file("w4.csv")));

    CHECK(rows.size() == 2 * 2 * 2 * 3 * 3);
    CHECK(rows.front().kind == InstanceKind::needle);
    CHECK(rows.front().seed == 1);
}

TEST_CASE("needle sweep with uninformative features: median trials at least N/4") {
    SweepSpec spec;
    spec.instance_kinds = {InstanceKind::needle};
    spec.n_actions_grid = {64};
    spec.dim_grid = {lemma_dimension(64, 0.49)};
    spec.epsilon_grid = {0.49};
    spec.epsilon_prime = 0.4;
    spec.agents = {parse_agent_spec("width")};
    for (std::uint64_t s = 0; s < 50; ++s) spec.seeds.push_back(s);
    const auto rows = run_sweep(spec);
    std::vector<std::size_t> trials;
    for (const auto& r : rows) {
        REQUIRE(r.status == "ok");
        trials.push_back(r.trials);
    }
    std::sort(trials.begin(), trials.end());
    CHECK(trials[trials.size() / 2] >= 16);
}
