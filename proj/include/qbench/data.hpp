#pragma once

#include "qbench/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace qbench {

/// Samples in rows; row-major so each sample is a contiguous span.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary-labelled samples, labels in {0, 1}.
struct LabeledData {
    FeatureMatrix X;
    std::vector<int> y;

    std::size_t size() const noexcept { return y.size(); }
    int n_features() const noexcept { return static_cast<int>(X.cols()); }

    std::span<const double> row(std::size_t i) const {
        return {X.data() + static_cast<Eigen::Index>(i) * X.cols(), static_cast<std::size_t>(X.cols())};
    }

    std::size_t count(int label) const {
        std::size_t c = 0;
        for (int v : y) c += (v == label);
        return c;
    }

    void check() const {
        if (static_cast<std::size_t>(X.rows()) != y.size()) throw UsageError("LabeledData: rows and labels differ in length");
        for (int v : y)
            if (v != 0 && v != 1) throw UsageError("LabeledData: labels must be 0 or 1");
    }
};

/// Rows `idx` of `d`, in the given order.
inline LabeledData subset(const LabeledData& d, std::span<const std::size_t> idx) {
    LabeledData out;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), d.X.cols());
    out.y.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.X.row(static_cast<Eigen::Index>(r)) = d.X.row(static_cast<Eigen::Index>(idx[r]));
        out.y.push_back(d.y[idx[r]]);
    }
    return out;
}

/// Class weights indexed by class label.
using ClassWeights = std::array<double, 2>;

}  // namespace qbench
