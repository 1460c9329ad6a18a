#include "mbl/instances.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "mbl/errors.hpp"
#include "mbl/rng.hpp"

namespace mbl {

std::string_view to_string(InstanceKind kind) {
    switch (kind) {
        case InstanceKind::needle: return "needle";
        case InstanceKind::realizable: return "realizable";
    }
    return "unknown";
}

InstanceKind parse_instance_kind(std::string_view text) {
    if (text == "needle") return InstanceKind::needle;
    if (text == "realizable") return InstanceKind::realizable;
    throw InvalidParam("unknown instance kind '" + std::string(text) + "'");
}

int lemma_dimension(std::size_t n_actions, double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidParam("epsilon must be positive");
    if (n_actions < 2) throw InvalidParam("n_actions must be at least 2");
    return static_cast<int>(std::ceil(8.0 * std::log(static_cast<double>(n_actions)) / (epsilon * epsilon)));
}

namespace {

// Rows of `features` listed in `rows` that have an inner product above
// epsilon in absolute value with any other row.
std::vector<Eigen::Index> offending_rows(const FeatureMatrix& features, const std::vector<Eigen::Index>& rows,
                                         double epsilon) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index r : rows) {
        Eigen::VectorXd dots = features * features.row(r).transpose();
        dots[r] = 0.0;
        if (dots.cwiseAbs().maxCoeff() > epsilon) out.push_back(r);
    }
    return out;
}

void check_needle_params(std::size_t n_actions, Action x_star, int dim, double epsilon, int max_attempts) {
    if (n_actions < 2) throw InvalidParam("n_actions must be at least 2");
    if (x_star >= n_actions) throw InvalidParam("x_star must be below n_actions");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParam("needle epsilon must lie in (0, 1)");
    if (dim < 2) throw InvalidParam("needle dim must be at least 2");
    if (max_attempts < 1) throw InvalidParam("max_attempts must be positive");
}

}  // namespace

Instance gen_needle_instance(std::size_t n_actions, Action x_star, int dim, double epsilon, std::uint64_t seed,
                             int max_attempts) {
    check_needle_params(n_actions, x_star, dim, epsilon, max_attempts);

    const auto n = static_cast<Eigen::Index>(n_actions);
    Instance inst;
    inst.kind = InstanceKind::needle;
    inst.epsilon = epsilon;
    inst.x_star = x_star;
    inst.seed = seed;
    inst.features = FeatureMatrix::Zero(n, dim);

    if (dim >= n) {
        for (Eigen::Index r = 0; r < n; ++r) inst.features(r, r) = 1.0;
    } else {
        auto draw_row = [&](Eigen::Index r, int attempt) {
            Engine engine = make_engine(seed, StreamTag::feature_row, static_cast<std::uint64_t>(r),
                                        static_cast<std::uint64_t>(attempt));
            inst.features.row(r) = uniform_on_sphere(engine, dim).transpose();
        };
        for (Eigen::Index r = 0; r < n; ++r) draw_row(r, 0);

        // Initial sweep: for each violating pair, the later row is redrawn.
        std::vector<Eigen::Index> pending;
        const Eigen::Index block = 512;
        for (Eigen::Index start = 0; start < n; start += block) {
            const Eigen::Index len = std::min(block, n - start);
            Eigen::MatrixXd dots = inst.features.middleRows(start, len) * inst.features.transpose();
            for (Eigen::Index i = 0; i < len; ++i) {
                const Eigen::Index row = start + i;
                for (Eigen::Index j = 0; j < row; ++j) {
                    if (std::abs(dots(i, j)) > epsilon) {
                        pending.push_back(row);
                        break;
                    }
                }
            }
        }

        int attempt = 1;
        while (!pending.empty()) {
            if (attempt > max_attempts) {
                std::ostringstream msg;
                msg << "could not draw " << n_actions << " unit features in dimension " << dim
                    << " with pairwise |inner product| <= " << epsilon << " after " << max_attempts
                    << " resampling rounds; existence is guaranteed once dim >= 8 ln(n_actions)/epsilon^2 = "
                    << lemma_dimension(n_actions, epsilon);
                throw AttemptsExhausted(msg.str());
            }
            for (Eigen::Index r : pending) draw_row(r, attempt);
            pending = offending_rows(inst.features, pending, epsilon);
            ++attempt;
        }
    }

    inst.rewards = Eigen::VectorXd::Zero(n);
    inst.rewards[static_cast<Eigen::Index>(x_star)] = 1.0;
    inst.certificate = certify_misspecification(inst, inst.phi(x_star));
    return inst;
}

Instance gen_realizable_instance(std::size_t n_actions, int dim, double epsilon, std::uint64_t seed) {
    if (n_actions < 2) throw InvalidParam("n_actions must be at least 2");
    if (dim < 1) throw InvalidParam("dim must be positive");
    if (!(epsilon >= 0.0 && epsilon <= 0.25)) throw InvalidParam("realizable epsilon must lie in [0, 0.25]");

    const auto n = static_cast<Eigen::Index>(n_actions);
    const int free_dim = dim - 1;
    const double half_range = 0.5 - 2.0 * epsilon;

    Instance inst;
    inst.kind = InstanceKind::realizable;
    inst.epsilon = epsilon;
    inst.seed = seed;
    inst.features = FeatureMatrix::Zero(n, dim);

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    if (free_dim == 0) {
        inst.features.col(0).setOnes();
        theta[0] = 0.5;
    } else {
        const double c = std::sqrt(0.5);
        FeatureMatrix directions(n, free_dim);
        for (Eigen::Index r = 0; r < n; ++r) {
            Engine engine = make_engine(seed, StreamTag::feature_row, static_cast<std::uint64_t>(r));
            directions.row(r) = uniform_on_sphere(engine, free_dim).transpose();
        }
        Engine theta_engine = make_engine(seed, StreamTag::theta);
        const Eigen::VectorXd raw = uniform_in_ball(theta_engine, free_dim);

        // Shrink theta only as far as needed to fit the reward range.
        const double spread = (directions * raw).cwiseAbs().maxCoeff();
        double scale = c;
        if (spread > 0.0) scale = std::min(scale, half_range / (c * spread));

        inst.features.leftCols(free_dim) = c * directions;
        inst.features.col(free_dim).setConstant(c);
        theta.head(free_dim) = scale * raw;
        theta[free_dim] = 0.5 / c;
    }

    const Eigen::VectorXd linear = inst.features * theta;
    inst.rewards = linear;
    if (epsilon > 0.0) {
        Engine engine = make_engine(seed, StreamTag::perturbation);
        std::uniform_real_distribution<double> noise(-epsilon, epsilon);
        for (Eigen::Index r = 0; r < n; ++r) inst.rewards[r] += noise(engine);
    }
    inst.certificate = certify_misspecification(inst, theta);
    return inst;
}

MisspecCertificate certify_misspecification(const Instance& instance, const Eigen::VectorXd& theta) {
    if (theta.size() != instance.dim()) {
        throw DimensionMismatch("theta has length " + std::to_string(theta.size()) + ", instance dim is " +
                                std::to_string(instance.dim()));
    }
    MisspecCertificate cert;
    cert.theta = theta;
    cert.achieved_error = (instance.rewards - instance.features * theta).cwiseAbs().maxCoeff();
    cert.theta_norm = theta.norm();
    return cert;
}

MisspecCertificate min_misspec_oracle(const Instance& instance, double tolerance, int max_iters,
                                      std::optional<Eigen::VectorXd> warm_start) {
    if (!(tolerance > 0.0)) throw InvalidParam("tolerance must be positive");
    Eigen::VectorXd theta = warm_start ? *warm_start : instance.certificate.theta;
    if (theta.size() != instance.dim()) throw DimensionMismatch("warm start has the wrong length");
    if (theta.norm() > 1.0) theta.normalize();

    MisspecCertificate best = certify_misspecification(instance, theta);
    for (int k = 0; k < max_iters && best.achieved_error > tolerance; ++k) {
        const Eigen::VectorXd residual = instance.rewards - instance.features * theta;
        Eigen::Index worst = 0;
        residual.cwiseAbs().maxCoeff(&worst);
        // d/dtheta |r - theta^T phi| = -sign(r - theta^T phi) phi
        Eigen::VectorXd grad = instance.features.row(worst).transpose();
        if (residual[worst] > 0.0) grad = -grad;
        const double gnorm = grad.norm();
        if (gnorm == 0.0) break;
        theta -= (1.0 / (k + 1.0)) * grad / gnorm;
        const double norm = theta.norm();
        if (norm > 1.0) theta /= norm;

        MisspecCertificate cand = certify_misspecification(instance, theta);
        if (cand.achieved_error < best.achieved_error) best = std::move(cand);
    }
    return best;
}

FeatureAudit audit_features(const FeatureMatrix& features) {
    FeatureAudit audit;
    const Eigen::Index n = features.rows();
    for (Eigen::Index r = 0; r < n; ++r) {
        audit.max_norm_deviation = std::max(audit.max_norm_deviation, std::abs(features.row(r).norm() - 1.0));
    }
    const Eigen::Index block = 512;
    for (Eigen::Index start = 0; start < n; start += block) {
        const Eigen::Index len = std::min(block, n - start);
        Eigen::MatrixXd dots = features.middleRows(start, len) * features.transpose();
        for (Eigen::Index i = 0; i < len; ++i) dots(i, start + i) = 0.0;
        audit.max_abs_inner = std::max(audit.max_abs_inner, dots.cwiseAbs().maxCoeff());
    }
    return audit;
}

bool is_eps_optimal(const Instance& instance, Action x, double eps_prime) {
    if (x >= instance.n_actions()) return false;
    return instance.rewards[static_cast<Eigen::Index>(x)] >= instance.best_reward() - eps_prime;
}

}  // namespace mbl
