#pragma once

#include "qbench/data.hpp"

#include <random>

namespace qbench::test {

/// Two gaussian blobs; rows are shuffled by construction.
inline LabeledData blobs(std::size_t n, int d, double separation, std::uint64_t seed, double positive_share = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabeledData out;
    out.X.resize(static_cast<Eigen::Index>(n), d);
    out.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = u(rng) < positive_share ? 1 : 0;
        out.y[i] = y;
        for (int j = 0; j < d; ++j) out.X(static_cast<Eigen::Index>(i), j) = g(rng) + (y ? separation : -separation) / 2;
    }
    return out;
}

inline FeatureMatrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    FeatureMatrix X(rows, cols);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
    return X;
}

}  // namespace qbench::test
