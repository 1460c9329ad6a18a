#include "mbl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mbl/errors.hpp"

namespace mbl {

namespace {

void require_dim(const Eigen::VectorXd& v, int dim, const char* what) {
    if (v.size() != dim) {
        throw DimensionMismatch(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                                std::to_string(dim));
    }
}

// Largest s >= 0 with a s^2 + b s + c <= 0, given c <= 0. Infinity when the
// quadratic never becomes positive.
double largest_feasible_step(double a, double b, double c) {
    // A start that sits on the boundary up to rounding counts as on it.
    if (c > 1e-12) return 0.0;
    c = std::min(c, 0.0);
    if (a <= 0.0) {
        if (b <= 0.0) return std::numeric_limits<double>::infinity();
        return -c / b;
    }
    const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
    if (b >= 0.0) {
        const double denom = b + disc;
        return denom > 0.0 ? -2.0 * c / denom : 0.0;
    }
    return (-b + disc) / (2.0 * a);
}

}  // namespace

ConfidenceState::ConfidenceState(int dim, double epsilon)
    : epsilon_(epsilon), gram_(Eigen::MatrixXd::Zero(dim, dim)), xy_(Eigen::VectorXd::Zero(dim)) {
    if (dim < 1) throw InvalidParam("dim must be positive");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidParam("epsilon must be finite and nonnegative");
}

double ConfidenceState::residual_budget() const { return epsilon_ * epsilon_ * static_cast<double>(t()); }

double ConfidenceState::residual_sq(const Eigen::VectorXd& theta) const {
    require_dim(theta, dim(), "theta");
    double total = 0.0;
    for (const auto& obs : history_) {
        const double r = obs.y - obs.phi.dot(theta);
        total += r * r;
    }
    return total;
}

const Eigen::MatrixXd& ConfidenceState::psi_inverse() const {
    if (!psi_inverse_) throw NumericalFailure("Psi is not available (t = 0 or singular with epsilon = 0)");
    return *psi_inverse_;
}

ConfidenceState update(ConfidenceState state, const Eigen::VectorXd& phi, double y) {
    require_dim(phi, state.dim(), "phi");
    if (phi.norm() > 1.0 + kNormTolerance) throw InvalidParam("feature norm exceeds 1");
    if (!std::isfinite(y)) throw InvalidParam("observation must be finite");

    state.gram_.selfadjointView<Eigen::Lower>().rankUpdate(phi);
    state.gram_.triangularView<Eigen::StrictlyUpper>() = state.gram_.transpose();
    state.xy_ += y * phi;
    state.sum_y2_ += y * y;
    state.history_.push_back({phi, y});

    const int d = state.dim();
    const double reg = state.residual_budget();
    Eigen::MatrixXd psi = state.gram_;
    psi.diagonal().array() += reg;
    Eigen::LLT<Eigen::MatrixXd> llt(psi);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal();
        ok = pivots.allFinite() && pivots.minCoeff() > 0.0;
        if (ok && state.epsilon_ == 0.0) {
            // Without a regularizer a rank-deficient Gram can still factor with
            // roundoff-sized pivots; those are not a usable inverse.
            ok = pivots.minCoeff() * pivots.minCoeff() > 1e-12 * std::max(1.0, psi.diagonal().maxCoeff());
        }
        if (ok) {
            state.log_det_psi_ = 2.0 * pivots.array().log().sum();
            state.psi_inverse_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
        }
    }
    if (!ok) {
        state.psi_inverse_.reset();
        state.log_det_psi_ = -std::numeric_limits<double>::infinity();
        if (state.epsilon_ > 0.0) throw NumericalFailure("Cholesky factorization of Psi failed");
    }
    return state;
}

double psi_quadratic_form(const ConfidenceState& state, const Eigen::VectorXd& phi) {
    require_dim(phi, state.dim(), "phi");
    return std::max(0.0, phi.dot(state.psi_inverse() * phi));
}

double relaxed_width(const ConfidenceState& state, const Eigen::VectorXd& phi) {
    require_dim(phi, state.dim(), "phi");
    if (phi.norm() > 1.0 + kNormTolerance) throw InvalidParam("feature norm exceeds 1");
    if (state.t() == 0) return 2.0 * phi.norm();
    return std::sqrt(8.0 * state.residual_budget() * psi_quadratic_form(state, phi));
}

Eigen::VectorXd relaxed_widths(const ConfidenceState& state, const FeatureMatrix& features) {
    if (features.cols() != state.dim()) throw DimensionMismatch("feature matrix has the wrong number of columns");
    if (state.t() == 0) return 2.0 * features.rowwise().norm();
    const Eigen::MatrixXd projected = features * state.psi_inverse();
    const Eigen::VectorXd q = projected.cwiseProduct(features).rowwise().sum().cwiseMax(0.0);
    return (8.0 * state.residual_budget() * q).cwiseSqrt();
}

// ---------------------------------------------------------------------------
// Exact widths

ExactWidthSolver::ExactWidthSolver(const ConfidenceState& state, DualSearchOptions options) : options_(options) {
    const int d = state.dim();
    basis_ = Eigen::MatrixXd::Identity(d, d);
    spectrum_ = Eigen::VectorXd::Zero(d);
    b_rot_ = Eigen::VectorXd::Zero(d);
    null_mask_ = Eigen::VectorXd::Ones(d);
    center_rot_ = Eigen::VectorXd::Zero(d);
    if (state.t() == 0) {
        mode_ = Mode::ball;
        return;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state.gram());
    if (eig.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of the Gram matrix failed");
    basis_ = eig.eigenvectors();
    spectrum_ = eig.eigenvalues().cwiseMax(0.0);
    b_rot_ = basis_.transpose() * state.xy();
    c_ = state.sum_y_squared();
    budget_ = state.residual_budget();
    const double threshold = 1e-10 * std::max(1.0, spectrum_.maxCoeff());
    for (int i = 0; i < d; ++i) null_mask_[i] = spectrum_[i] <= threshold ? 1.0 : 0.0;

    // Min-norm least squares, then shrink onto the unit ball if needed.
    auto ls_at = [&](double mu) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = (null_mask_[i] > 0.0 && mu == 0.0) ? 0.0 : b_rot_[i] / (spectrum_[i] + mu);
        return v;
    };
    center_rot_ = ls_at(0.0);

    if (state.epsilon() == 0.0) {
        mode_ = Mode::affine;
        const double norm = center_rot_.norm();
        if (norm > 1.0 + kNormTolerance || residual_rot(center_rot_) > 1e-9 * (1.0 + c_)) {
            throw InfeasibleSet("no unit-norm coefficient vector interpolates the observations");
        }
        if (norm > 1.0) center_rot_ /= norm;
        return;
    }

    mode_ = Mode::residual;
    if (center_rot_.norm() > 1.0) {
        double lo = 0.0;
        double hi = std::max(1.0, b_rot_.norm());
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (ls_at(mid).norm() > 1.0) lo = mid; else hi = mid;
        }
        center_rot_ = ls_at(hi);
    }
    if (residual_rot(center_rot_) > budget_ * (1.0 + 1e-9) + 1e-12) {
        throw InfeasibleSet("the residual constraint excludes the whole unit ball");
    }
}

double ExactWidthSolver::residual_rot(const Eigen::VectorXd& theta_rot) const {
    return c_ - 2.0 * b_rot_.dot(theta_rot) + theta_rot.cwiseProduct(spectrum_).dot(theta_rot);
}

Eigen::VectorXd ExactWidthSolver::center() const { return basis_ * center_rot_; }

ExactWidthSolver::Extremum ExactWidthSolver::maximize(const Eigen::VectorXd& phi, double tol) const {
    require_dim(phi, static_cast<int>(spectrum_.size()), "phi");
    if (!(tol > 0.0)) throw InvalidParam("tolerance must be positive");

    if (mode_ == Mode::ball) {
        const double norm = phi.norm();
        Extremum out;
        out.value = out.bound = norm;
        out.theta = norm > 0.0 ? Eigen::VectorXd(phi / norm) : Eigen::VectorXd::Zero(phi.size());
        return out;
    }
    const Eigen::VectorXd phi_rot = basis_.transpose() * phi;
    Extremum out = mode_ == Mode::affine ? maximize_affine(phi_rot) : maximize_residual(phi_rot, tol);
    out.theta = basis_ * out.theta;
    return out;
}

ExactWidthSolver::Extremum ExactWidthSolver::maximize_affine(const Eigen::VectorXd& phi_rot) const {
    const Eigen::VectorXd free = phi_rot.cwiseProduct(null_mask_);
    const double free_norm = free.norm();
    const double room = std::sqrt(std::max(0.0, 1.0 - center_rot_.squaredNorm()));
    Extremum out;
    out.theta = center_rot_;
    if (free_norm > 0.0) out.theta += (room / free_norm) * free;
    out.value = out.bound = phi_rot.dot(out.theta);
    return out;
}

ExactWidthSolver::Extremum ExactWidthSolver::maximize_residual(const Eigen::VectorXd& phi_rot, double tol) const {
    const Eigen::Index d = phi_rot.size();
    Extremum out;

    // Residual constraint inactive: the ball maximizer is already feasible.
    const double phi_norm = phi_rot.norm();
    if (phi_norm == 0.0) {
        out.theta = center_rot_;
        return out;
    }
    const Eigen::VectorXd ball_max = phi_rot / phi_norm;
    if (residual_rot(ball_max) <= budget_) {
        out.theta = ball_max;
        out.value = out.bound = phi_norm;
        return out;
    }

    Eigen::VectorXd theta(d);
    auto solve_inner = [&](double l1, double l2) {
        for (Eigen::Index i = 0; i < d; ++i) {
            theta[i] = (phi_rot[i] + 2.0 * l2 * b_rot_[i]) / (2.0 * (l1 + l2 * spectrum_[i]));
        }
    };
    auto dual_value = [&](double l1, double l2) {
        // sum h_i^2 / (4 a_i) = sum h_i theta_i / 2 with h = phi + 2 l2 b.
        return 0.5 * (phi_rot + 2.0 * l2 * b_rot_).dot(theta) + l1 + l2 * (budget_ - c_);
    };
    auto best_ball_multiplier = [&](double l2) {
        double lo = 0.0;
        double hi = options_.multiplier_max;
        for (int k = 0; k < options_.bisection_steps; ++k) {
            const double mid = 0.5 * (lo + hi);
            solve_inner(mid, l2);
            if (theta.squaredNorm() > 1.0) lo = mid; else hi = mid;
        }
        return hi;
    };

    const double center_res = residual_rot(center_rot_);
    auto pull_back = [&](const Eigen::VectorXd& candidate) {
        const Eigen::VectorXd dir = candidate - center_rot_;
        const double s_ball = largest_feasible_step(dir.squaredNorm(), 2.0 * center_rot_.dot(dir),
                                                    center_rot_.squaredNorm() - 1.0);
        const double s_res = largest_feasible_step(
            dir.cwiseProduct(spectrum_).dot(dir),
            2.0 * (center_rot_.cwiseProduct(spectrum_) - b_rot_).dot(dir), center_res - budget_);
        const double s = std::clamp(std::min({1.0, s_ball, s_res}), 0.0, 1.0);
        return Eigen::VectorXd(center_rot_ + s * dir);
    };

    double best_upper = std::numeric_limits<double>::infinity();
    double best_lower = phi_rot.dot(center_rot_);
    Eigen::VectorXd best_theta = center_rot_;

    double lo2 = 0.0;
    double hi2 = options_.multiplier_max;
    for (int k = 0; k < options_.max_outer; ++k) {
        const double l2 = 0.5 * (lo2 + hi2);
        const double l1 = best_ball_multiplier(l2);
        solve_inner(l1, l2);
        best_upper = std::min(best_upper, dual_value(l1, l2));

        const Eigen::VectorXd feasible = pull_back(theta);
        const double value = phi_rot.dot(feasible);
        if (value > best_lower) {
            best_lower = value;
            best_theta = feasible;
        }
        if (best_upper - best_lower <= tol) break;
        if (residual_rot(theta) > budget_) lo2 = l2; else hi2 = l2;
    }
    if (best_upper - best_lower > tol) {
        throw NoConvergence("dual bisection stalled with gap " + std::to_string(best_upper - best_lower));
    }
    out.value = best_lower;
    out.bound = best_upper;
    out.theta = best_theta;
    return out;
}

WidthReport ExactWidthSolver::width(const Eigen::VectorXd& phi, double tol) const {
    const Extremum hi = maximize(phi, tol);
    const Extremum lo = maximize(-phi, tol);
    WidthReport report;
    report.exact = std::max(0.0, hi.value + lo.value);
    report.theta_max = hi.theta;
    report.theta_min = lo.theta;
    return report;
}

WidthReport exact_width(const ConfidenceState& state, const Eigen::VectorXd& phi, double tol) {
    WidthReport report = ExactWidthSolver(state).width(phi, tol);
    report.relaxed = (state.t() == 0 || state.has_psi()) ? relaxed_width(state, phi)
                                                          : std::numeric_limits<double>::infinity();
    return report;
}

bool membership(const ConfidenceState& state, const Eigen::VectorXd& theta) {
    require_dim(theta, state.dim(), "theta");
    if (theta.norm() > 1.0 + kNormTolerance) return false;
    return state.residual_sq(theta) <= state.residual_budget() * (1.0 + kNormTolerance) + 1e-12;
}

// ---------------------------------------------------------------------------
// Determinant tools

DeterminantStep matrix_determinant_step(const Eigen::MatrixXd& psi, const Eigen::VectorXd& phi) {
    if (psi.rows() != psi.cols() || psi.rows() != phi.size()) throw DimensionMismatch("psi and phi disagree");
    Eigen::LLT<Eigen::MatrixXd> llt(psi);
    if (llt.info() != Eigen::Success) throw NumericalFailure("psi is not positive definite");
    const Eigen::MatrixXd lower = llt.matrixL();
    const double log_det = 2.0 * lower.diagonal().array().log().sum();
    const Eigen::VectorXd w = lower.triangularView<Eigen::Lower>().solve(phi);
    const double q = w.squaredNorm();
    return {log_det + std::log1p(q), 1.0 + q};
}

FixedRegularizerGram::FixedRegularizerGram(int dim, double lambda)
    : lambda_(lambda),
      log_det_(dim * std::log(lambda)),
      matrix_(lambda * Eigen::MatrixXd::Identity(dim, dim)),
      inverse_(Eigen::MatrixXd::Identity(dim, dim) / lambda) {
    if (dim < 1) throw InvalidParam("dim must be positive");
    if (!(lambda > 0.0)) throw InvalidParam("lambda must be positive");
}

double FixedRegularizerGram::quadratic_form(const Eigen::VectorXd& phi) const {
    return phi.dot(inverse_ * phi);
}

DeterminantStep FixedRegularizerGram::add(const Eigen::VectorXd& phi) {
    require_dim(phi, static_cast<int>(matrix_.rows()), "phi");
    const Eigen::VectorXd u = inverse_ * phi;
    const double q = phi.dot(u);
    inverse_ -= (u * u.transpose()) / (1.0 + q);
    log_det_ += std::log1p(q);
    matrix_ += phi * phi.transpose();
    ++count_;
    return {log_det_, 1.0 + q};
}

}  // namespace mbl
