#include "mbl/rng.hpp"

#include <cmath>

namespace mbl {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

Eigen::VectorXd uniform_on_sphere(Engine& engine, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(dim);
    double norm = 0.0;
    // A zero draw has probability zero but would make the direction undefined.
    while (norm == 0.0) {
        for (int i = 0; i < dim; ++i) v[i] = normal(engine);
        norm = v.norm();
    }
    return v / norm;
}

Eigen::VectorXd uniform_in_ball(Engine& engine, int dim) {
    if (dim == 0) return Eigen::VectorXd(0);
    Eigen::VectorXd direction = uniform_on_sphere(engine, dim);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double radius = std::pow(unit(engine), 1.0 / dim);
    return radius * direction;
}

}  // namespace mbl
