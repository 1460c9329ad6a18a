#pragma once

// Confidence set over linear coefficients after noiseless observations:
//
//   Theta_t = { theta : ||theta||_2 <= 1,  sum_tau (y_tau - theta^T phi_tau)^2 <= eps^2 t }
//
// together with the width of an action (spread of theta^T phi over Theta_t),
// computed either exactly by a two-multiplier dual method or through the
// enclosing ellipsoid { rho : rho^T Psi_t rho <= 8 eps^2 t } with
// Psi_t = Phi_t + eps^2 t I.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mbl/instances.hpp"

namespace mbl {

inline constexpr double kWidthTolerance = 1e-6;
/// Smallest epsilon the relaxed (ellipsoidal) width accepts.
inline constexpr double kRelaxedEpsilonFloor = 1e-9;

struct Observation {
    Eigen::VectorXd phi;
    double y = 0.0;
};

class ConfidenceState {
public:
    ConfidenceState(int dim, double epsilon);

    [[nodiscard]] std::size_t t() const { return history_.size(); }
    [[nodiscard]] int dim() const { return static_cast<int>(xy_.size()); }
    [[nodiscard]] double epsilon() const { return epsilon_; }
    [[nodiscard]] const Eigen::MatrixXd& gram() const { return gram_; }
    [[nodiscard]] const Eigen::VectorXd& xy() const { return xy_; }
    [[nodiscard]] double sum_y_squared() const { return sum_y2_; }
    [[nodiscard]] const std::vector<Observation>& history() const { return history_; }

    /// eps^2 t: the squared residual budget.
    [[nodiscard]] double residual_budget() const;
    /// Sum of squared residuals of theta over the history.
    [[nodiscard]] double residual_sq(const Eigen::VectorXd& theta) const;

    /// Psi_t^{-1} and log det Psi_t; present for t >= 1 when Psi_t is numerically PD.
    [[nodiscard]] bool has_psi() const { return psi_inverse_.has_value(); }
    [[nodiscard]] const Eigen::MatrixXd& psi_inverse() const;
    [[nodiscard]] double log_det_psi() const { return log_det_psi_; }

private:
    friend ConfidenceState update(ConfidenceState state, const Eigen::VectorXd& phi, double y);

    double epsilon_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd xy_;
    double sum_y2_ = 0.0;
    std::vector<Observation> history_;
    double log_det_psi_ = 0.0;
    std::optional<Eigen::MatrixXd> psi_inverse_;
};

/// Returns the state after observing (phi, y). Pass an rvalue to avoid copying
/// the history; the argument is never modified through a const reference.
/// Throws NumericalFailure when epsilon > 0 and Psi cannot be factorized. With
/// epsilon = 0 a singular Psi only leaves the Psi cache empty.
ConfidenceState update(ConfidenceState state, const Eigen::VectorXd& phi, double y);

/// sqrt(8 eps^2 t phi^T Psi_t^{-1} phi) for t >= 1, 2 ||phi|| at t = 0.
double relaxed_width(const ConfidenceState& state, const Eigen::VectorXd& phi);
/// Relaxed width of every row of `features`.
Eigen::VectorXd relaxed_widths(const ConfidenceState& state, const FeatureMatrix& features);
/// phi^T Psi_t^{-1} phi; the counting argument triggers when this is >= 1/2.
double psi_quadratic_form(const ConfidenceState& state, const Eigen::VectorXd& phi);

struct WidthReport {
    Action action = 0;
    double relaxed = 0.0;  // +inf when Psi is unavailable (epsilon = 0)
    std::optional<double> exact;
    std::optional<Eigen::VectorXd> theta_max;
    std::optional<Eigen::VectorXd> theta_min;
};

struct DualSearchOptions {
    double multiplier_max = 1e6;
    int bisection_steps = 80;
    int max_outer = 100;
};

/// Exact extremes of theta^T phi over Theta_t.
///
/// Lagrangian dual with multipliers l1 (ball) and l2 (residual). For fixed
/// multipliers the inner maximizer solves (l1 I + l2 Phi) theta = (phi + 2 l2 b) / 2
/// and the partial derivatives of the dual are the two constraint slacks, so
/// the dual is minimized by nested bisection on their signs: l2 outside, l1
/// inside. Every dual iterate is pulled back into Theta_t along the segment
/// from a feasible center, which gives a primal lower bound; the search stops
/// once dual minus primal <= tol. Works in the eigenbasis of Phi so each dual
/// evaluation is O(d).
///
/// epsilon = 0 replaces the residual ball by the affine set of interpolants
/// (min-norm least squares plus the Gram null space); t = 0 is the unit ball.
class ExactWidthSolver {
public:
    explicit ExactWidthSolver(const ConfidenceState& state, DualSearchOptions options = {});

    struct Extremum {
        double value = 0.0;  // attained by a feasible theta
        double bound = 0.0;  // dual upper bound, value <= true max <= bound
        Eigen::VectorXd theta;
    };

    /// max over Theta_t of theta^T phi.
    [[nodiscard]] Extremum maximize(const Eigen::VectorXd& phi, double tol = kWidthTolerance) const;
    /// Both extremes; relaxed is left at 0 (callers fill it).
    [[nodiscard]] WidthReport width(const Eigen::VectorXd& phi, double tol = kWidthTolerance) const;
    /// A feasible point of Theta_t (least squares over the unit ball).
    [[nodiscard]] Eigen::VectorXd center() const;

private:
    enum class Mode { ball, residual, affine };

    [[nodiscard]] Extremum maximize_residual(const Eigen::VectorXd& phi_rot, double tol) const;
    [[nodiscard]] Extremum maximize_affine(const Eigen::VectorXd& phi_rot) const;
    [[nodiscard]] double residual_rot(const Eigen::VectorXd& theta_rot) const;

    Mode mode_ = Mode::ball;
    DualSearchOptions options_;
    Eigen::MatrixXd basis_;     // eigenvectors of Phi
    Eigen::VectorXd spectrum_;  // eigenvalues of Phi, clamped at 0
    Eigen::VectorXd b_rot_;     // basis^T xy
    Eigen::VectorXd null_mask_; // 1 on numerically null directions
    double c_ = 0.0;            // sum of y^2
    double budget_ = 0.0;       // eps^2 t
    Eigen::VectorXd center_rot_;
};

/// Exact width of phi with the relaxed width filled in for comparison.
WidthReport exact_width(const ConfidenceState& state, const Eigen::VectorXd& phi, double tol = kWidthTolerance);

/// ||theta|| <= 1 + 1e-9 and residual_sq(theta) <= eps^2 t (1 + 1e-9) + 1e-12.
bool membership(const ConfidenceState& state, const Eigen::VectorXd& theta);

struct DeterminantStep {
    double new_log_det = 0.0;
    double growth_factor = 1.0;  // 1 + phi^T psi^{-1} phi
};

/// Matrix determinant lemma: det(psi + phi phi^T) = (1 + phi^T psi^{-1} phi) det(psi).
DeterminantStep matrix_determinant_step(const Eigen::MatrixXd& psi, const Eigen::VectorXd& phi);

/// Phi + lambda I with a fixed regularizer, kept current by rank-one
/// (Sherman-Morrison) inverse updates and determinant-lemma log-det updates.
class FixedRegularizerGram {
public:
    FixedRegularizerGram(int dim, double lambda);

    [[nodiscard]] double quadratic_form(const Eigen::VectorXd& phi) const;
    DeterminantStep add(const Eigen::VectorXd& phi);

    [[nodiscard]] double lambda() const { return lambda_; }
    [[nodiscard]] std::size_t count() const { return count_; }
    [[nodiscard]] double log_det() const { return log_det_; }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
    [[nodiscard]] const Eigen::MatrixXd& inverse() const { return inverse_; }

private:
    double lambda_;
    std::size_t count_ = 0;
    double log_det_;
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd inverse_;
};

}  // namespace mbl
