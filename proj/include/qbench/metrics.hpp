#pragma once

#include "qbench/errors.hpp"

#include <cstddef>
#include <span>

namespace qbench {

/// Fraction of predicted positives that are true positives; 0 when nothing is predicted positive.
constexpr double precision(long long tp, long long fp) {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

/// Fraction of actual positives detected; 0 when there are none.
constexpr double recall(long long tp, long long fn) {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

constexpr double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

/// Confusion counts for the positive class (label 1).
struct Metrics {
    long long tp = 0, fp = 0, fn = 0, tn = 0;

    double precision() const { return qbench::precision(tp, fp); }
    double recall() const { return qbench::recall(tp, fn); }
    double f1() const { return qbench::f1(precision(), recall()); }
    long long total() const { return tp + fp + fn + tn; }

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

inline Metrics confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw UsageError("confusion: length mismatch");
    Metrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == 1, p = predicted[i] == 1;
        if (t && p) ++m.tp;
        else if (!t && p) ++m.fp;
        else if (t && !p) ++m.fn;
        else ++m.tn;
    }
    return m;
}

}  // namespace qbench
