#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace mbl {

/// Stream tags keep independent random draws of one generator apart.
enum class StreamTag : std::uint64_t {
    feature_row = 1,
    theta = 2,
    perturbation = 3,
    needle_position = 4,
    baseline = 5,
    state_sampler = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based seed derivation: the stream for (seed, tag, a, b) does not
/// depend on how many other streams were consumed before it.
std::uint64_t stream_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0);

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0) {
    return Engine(stream_seed(seed, tag, a, b));
}

/// Uniform draw from the unit sphere in R^dim (normalized Gaussian).
Eigen::VectorXd uniform_on_sphere(Engine& engine, int dim);

/// Uniform draw from the closed unit ball in R^dim.
Eigen::VectorXd uniform_in_ball(Engine& engine, int dim);

}  // namespace mbl
