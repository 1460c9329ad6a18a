#pragma once

// Brute-force oracles and self-check suites.
//
// Nothing here goes through the dual width solver or the Cholesky-based
// determinant path: feasibility is checked straight from the residual sum,
// determinants come from an LU factorization.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbl/geometry.hpp"
#include "mbl/rng.hpp"

namespace mbl::verify {

struct GridExtremes {
    double max_value = 0.0;
    double min_value = 0.0;
    bool feasible = false;
    [[nodiscard]] double width() const { return max_value - min_value; }
};

/// Extremes of theta^T phi over Theta_t by enumeration (dim 1 or 2): a grid of
/// 10^6 candidates over [-1, 1]^d filtered by the definition of Theta_t, then
/// (dim 2) pattern refinement around the best grid points.
GridExtremes brute_force_extremes(const ConfidenceState& state, const Eigen::VectorXd& phi);

/// log |det m| via partial-pivot LU.
double lu_log_det(const Eigen::MatrixXd& m);

struct SmallState {
    ConfidenceState state;
    Eigen::VectorXd witness;
    Eigen::VectorXd query;
};

/// Random noiseless-up-to-eps trajectory: witness drawn in the ball of radius
/// 0.9, unit features, observations witness^T phi plus uniform [-eps, eps].
SmallState random_small_state(Engine& engine, int dim, std::size_t t, double epsilon);

struct CheckReport {
    std::string name;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst = 0.0;  // largest observed discrepancy (check-specific units)
    [[nodiscard]] bool passed() const { return violations == 0; }
};

/// exact_width vs brute force (abs 1e-3) and exact <= relaxed + 1e-6, on
/// random states with dim <= 2, t <= 5, eps in {0.1, 0.5}.
std::vector<CheckReport> check_width_oracle(std::size_t n_states, std::uint64_t seed);

/// Matrix determinant lemma and the AM-GM cap det(Phi_t + lambda I) <= (lambda + t/d)^d,
/// each to relative error 1e-8, on random unit-feature sequences (dim <= 32, t <= 64).
std::vector<CheckReport> check_determinants(std::size_t n_trials, std::uint64_t seed);

/// Unit norms, pairwise inner products and the stored certificate of
/// generated needle instances.
CheckReport check_needle_certificates(std::size_t n_instances, std::uint64_t seed);

/// All suites at their default sizes.
std::vector<CheckReport> run_all(std::uint64_t seed = 0);

}  // namespace mbl::verify
