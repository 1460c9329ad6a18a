#pragma once

// Problem instances for bandit learning with a misspecified linear model.
//
// Two families are provided:
//   needle      one-hot rewards with near-orthogonal, reward-agnostic unit
//               features; accurate in sup-norm yet useless for search.
//   realizable  rewards within epsilon of a linear function of informative
//               features.
// Every instance carries a witness theta (norm <= 1) whose sup-norm error is
// at most the instance epsilon.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace mbl {

using Action = std::size_t;
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class InstanceKind { needle, realizable };

std::string_view to_string(InstanceKind kind);
InstanceKind parse_instance_kind(std::string_view text);

struct MisspecCertificate {
    Eigen::VectorXd theta;
    double achieved_error = 0.0;
    double theta_norm = 0.0;
};

struct Instance {
    InstanceKind kind = InstanceKind::needle;
    FeatureMatrix features;   // n_actions x dim, row x is phi(x)
    Eigen::VectorXd rewards;  // f*(x) in [0, 1]
    double epsilon = 0.0;     // certified misspecification bound
    std::optional<Action> x_star;
    std::uint64_t seed = 0;
    MisspecCertificate certificate;

    [[nodiscard]] std::size_t n_actions() const { return static_cast<std::size_t>(features.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(features.cols()); }
    [[nodiscard]] Eigen::VectorXd phi(Action x) const { return features.row(static_cast<Eigen::Index>(x)).transpose(); }
    [[nodiscard]] double best_reward() const { return rewards.maxCoeff(); }
};

inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kCertificateTolerance = 1e-12;

/// Smallest dimension for which near-orthogonal features with pairwise
/// inner products at most epsilon are guaranteed to exist: ceil(8 ln N / eps^2).
int lemma_dimension(std::size_t n_actions, double epsilon);

/// Needle-in-a-haystack instance. Rows are i.i.d. uniform on the unit sphere,
/// with offending rows redrawn until all pairwise |<phi(x), phi(y)>| <= epsilon.
/// When dim >= n_actions the standard basis is used instead.
Instance gen_needle_instance(std::size_t n_actions, Action x_star, int dim, double epsilon,
                             std::uint64_t seed, int max_attempts = 64);

/// Informative instance: rewards are theta*^T phi(x), confined to
/// [2 eps, 1 - 2 eps], plus an independent uniform perturbation in [-eps, eps].
/// The last feature coordinate is constant (it carries the affine offset).
Instance gen_realizable_instance(std::size_t n_actions, int dim, double epsilon, std::uint64_t seed);

/// Sup-norm error of theta over all actions together with ||theta||_2.
MisspecCertificate certify_misspecification(const Instance& instance, const Eigen::VectorXd& theta);

/// Projected subgradient descent on max_x |f*(x) - theta^T phi(x)| over the
/// unit ball. Starts from `warm_start` (the stored witness when omitted) and
/// never returns a certificate worse than the start.
MisspecCertificate min_misspec_oracle(const Instance& instance, double tolerance, int max_iters,
                                      std::optional<Eigen::VectorXd> warm_start = std::nullopt);

/// Largest |<phi(x), phi(y)>| over x != y, and largest | ||phi(x)|| - 1 |.
struct FeatureAudit {
    double max_abs_inner = 0.0;
    double max_norm_deviation = 0.0;
};
FeatureAudit audit_features(const FeatureMatrix& features);

/// f*(x) >= max f* - eps_prime.
bool is_eps_optimal(const Instance& instance, Action x, double eps_prime);

}  // namespace mbl
