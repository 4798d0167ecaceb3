/**
 * @file baselines.hpp
 * @brief Classical comparison models, all class-weighted.
 */
#pragma once

#include "qbench/data.hpp"
#include "qbench/errors.hpp"
#include "qbench/parallel.hpp"
#include "qbench/seed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace qbench {

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    int iterations = 0;

    double decision(std::span<const double> x) const {
        double z = bias;
        for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
        return z;
    }
    /// Class 1 when the logit is >= 0.
    int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : 0; }
};

struct LogisticOptions {
    double learning_rate = 0.1;
    int iterations = 1000;
};

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

/// Mean over samples of w_y * BCE(sigmoid(w.x + b), y).
inline LossAndGradient logistic_loss(const LabeledData& d, const ClassWeights& cw, std::span<const double> w, double b) {
    const std::size_t n = d.size();
    const auto p = static_cast<std::size_t>(d.n_features());
    LossAndGradient out;
    out.grad_w.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = d.row(i);
        double z = b;
        for (std::size_t k = 0; k < p; ++k) z += w[k] * x[k];
        const double wy = cw[static_cast<std::size_t>(d.y[i])];
        // log(1 + e^z) - y z, stable for both signs
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        out.loss += wy * (softplus - d.y[i] * z);
        const double sig = 1.0 / (1.0 + std::exp(-z));
        const double r = wy * (sig - d.y[i]);
        for (std::size_t k = 0; k < p; ++k) out.grad_w[k] += r * x[k];
        out.grad_b += r;
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.loss *= inv;
    for (auto& g : out.grad_w) g *= inv;
    out.grad_b *= inv;
    return out;
}

/// Counts consecutive loss increases; `update` returns false once `limit` is hit.
struct DivergenceGuard {
    int limit = 10;
    int rising = 0;
    double prev = std::numeric_limits<double>::infinity();

    bool update(double loss) {
        rising = loss > prev ? rising + 1 : 0;
        prev = loss;
        return rising < limit;
    }
};

/// Full-batch gradient descent from zero. Throws TrainingError if the loss
/// rises for 10 consecutive iterations.
inline LogisticModel fit_logistic(const LabeledData& d, const ClassWeights& cw, const LogisticOptions& opt = {}) {
    if (d.size() == 0) throw UsageError("fit_logistic: empty training set");
    if (opt.iterations < 1 || !(opt.learning_rate > 0)) throw ConfigError("fit_logistic: bad options");
    d.check();
    LogisticModel m;
    m.weights.assign(static_cast<std::size_t>(d.n_features()), 0.0);
    DivergenceGuard guard;
    for (int it = 0; it < opt.iterations; ++it) {
        const auto lg = logistic_loss(d, cw, m.weights, m.bias);
        if (!std::isfinite(lg.loss)) throw TrainingError("fit_logistic: non-finite loss");
        if (!guard.update(lg.loss)) throw TrainingError("fit_logistic: loss increased for 10 consecutive iterations");
        for (std::size_t k = 0; k < m.weights.size(); ++k) m.weights[k] -= opt.learning_rate * lg.grad_w[k];
        m.bias -= opt.learning_rate * lg.grad_b;
        m.iterations = it + 1;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Decision tree (CART, weighted Gini)

struct TreeNode {
    int feature = -1;  ///< -1 for leaves
    double threshold = 0.0;
    std::array<double, 2> weighted_counts{0.0, 0.0};
    int left = -1;
    int right = -1;
    int leaf_class = 1;

    bool is_leaf() const noexcept { return left < 0; }
};

/// 1 - sum_c p_c^2 over class-weighted counts.
inline double weighted_gini(const std::array<double, 2>& counts) {
    const double total = counts[0] + counts[1];
    if (total <= 0.0) return 0.0;
    const double p0 = counts[0] / total, p1 = counts[1] / total;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeOptions {
    int min_leaf = 1;
    int max_features = 0;  ///< candidate features per split; 0 = all
    std::uint64_t seed = 0;
};

class DecisionTree {
public:
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    int depth() const { return nodes_.empty() ? 0 : depth_of(0); }

    int predict(std::span<const double> x) const {
        int at = 0;
        while (!nodes_[static_cast<std::size_t>(at)].is_leaf()) {
            const auto& nd = nodes_[static_cast<std::size_t>(at)];
            at = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(at)].leaf_class;
    }

    /// Grows on rows `idx` of `d` (repeats allowed, as in a bootstrap sample).
    static DecisionTree fit(const LabeledData& d, std::vector<std::size_t> idx, const ClassWeights& cw,
                            const TreeOptions& opt = {}) {
        if (opt.min_leaf < 1) throw ConfigError("fit_tree: min_leaf must be >= 1");
        DecisionTree t;
        std::mt19937_64 rng(opt.seed);
        t.grow(d, idx, cw, opt, rng);
        return t;
    }

private:
    int depth_of(int at) const {
        const auto& nd = nodes_[static_cast<std::size_t>(at)];
        return nd.is_leaf() ? 0 : 1 + std::max(depth_of(nd.left), depth_of(nd.right));
    }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = std::numeric_limits<double>::infinity();  ///< weighted child impurity
    };

    static Split best_split_on(const LabeledData& d, std::span<const std::size_t> idx, const ClassWeights& cw, int f,
                               int min_leaf) {
        std::vector<std::size_t> order(idx.begin(), idx.end());
        const auto val = [&](std::size_t i) { return d.X(static_cast<Eigen::Index>(i), f); };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val(a) < val(b); });
        std::array<double, 2> total{0.0, 0.0}, left{0.0, 0.0};
        for (std::size_t i : order) total[static_cast<std::size_t>(d.y[i])] += cw[static_cast<std::size_t>(d.y[i])];
        Split best;
        best.feature = f;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const std::size_t i = order[k];
            left[static_cast<std::size_t>(d.y[i])] += cw[static_cast<std::size_t>(d.y[i])];
            const double a = val(order[k]), b = val(order[k + 1]);
            if (!(a < b)) continue;
            const auto n_left = static_cast<int>(k + 1), n_right = static_cast<int>(order.size() - k - 1);
            if (n_left < min_leaf || n_right < min_leaf) continue;
            const std::array<double, 2> right{total[0] - left[0], total[1] - left[1]};
            const double wl = left[0] + left[1], wr = right[0] + right[1];
            const double score = wl * weighted_gini(left) + wr * weighted_gini(right);
            if (score < best.score) {
                best.score = score;
                best.threshold = a + (b - a) / 2.0;
            }
        }
        return best;
    }

    int grow(const LabeledData& d, std::span<const std::size_t> idx, const ClassWeights& cw, const TreeOptions& opt,
             std::mt19937_64& rng) {
        TreeNode node;
        for (std::size_t i : idx) node.weighted_counts[static_cast<std::size_t>(d.y[i])] += cw[static_cast<std::size_t>(d.y[i])];
        // raw counts break weighted ties so zero-weight classes still matter
        std::array<std::size_t, 2> raw{0, 0};
        for (std::size_t i : idx) ++raw[static_cast<std::size_t>(d.y[i])];
        node.leaf_class = node.weighted_counts[1] > node.weighted_counts[0]   ? 1
                          : node.weighted_counts[1] < node.weighted_counts[0] ? 0
                          : raw[0] > raw[1]                                   ? 0
                                                                              : 1;
        const int at = static_cast<int>(nodes_.size());
        nodes_.push_back(node);

        const bool pure = raw[0] == 0 || raw[1] == 0;
        if (pure || static_cast<int>(idx.size()) < 2 * opt.min_leaf) return at;

        const int n_feat = d.n_features();
        std::vector<int> features(static_cast<std::size_t>(n_feat));
        std::iota(features.begin(), features.end(), 0);
        const int k = opt.max_features > 0 ? std::min(opt.max_features, n_feat) : n_feat;
        if (k < n_feat) std::shuffle(features.begin(), features.end(), rng);

        // Scan the sampled features first; fall back to the rest when none of them splits.
        Split best;
        for (int pass = 0; pass < 2 && best.feature < 0; ++pass) {
            const int from = pass == 0 ? 0 : k, to = pass == 0 ? k : n_feat;
            for (int fi = from; fi < to; ++fi) {
                const Split s = best_split_on(d, idx, cw, features[static_cast<std::size_t>(fi)], opt.min_leaf);
                if (std::isfinite(s.score) && (best.feature < 0 || s.score < best.score)) best = s;
            }
        }
        if (best.feature < 0) return at;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx)
            (d.X(static_cast<Eigen::Index>(i), best.feature) <= best.threshold ? left_idx : right_idx).push_back(i);
        nodes_[static_cast<std::size_t>(at)].feature = best.feature;
        nodes_[static_cast<std::size_t>(at)].threshold = best.threshold;
        const int l = grow(d, left_idx, cw, opt, rng);
        const int r = grow(d, right_idx, cw, opt, rng);
        nodes_[static_cast<std::size_t>(at)].left = l;
        nodes_[static_cast<std::size_t>(at)].right = r;
        return at;
    }

    std::vector<TreeNode> nodes_;
};

inline DecisionTree fit_tree(const LabeledData& d, const ClassWeights& cw, int min_leaf = 1) {
    d.check();
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return DecisionTree::fit(d, std::move(idx), cw, {min_leaf, 0, 0});
}

// ---------------------------------------------------------------------------
// Random forest

struct ForestOptions {
    int n_trees = 100;
    int max_features = 0;  ///< 0 = ceil(sqrt(d))
    bool bootstrap = true;
    int min_leaf = 1;
    unsigned workers = 1;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> tree_seeds;
    int features_per_split = 0;

    /// Majority vote; ties go to class 1.
    int predict(std::span<const double> x) const {
        std::size_t ones = 0;
        for (const auto& t : trees) ones += static_cast<std::size_t>(t.predict(x));
        return 2 * ones >= trees.size() ? 1 : 0;
    }
};

inline ForestModel fit_forest(const LabeledData& d, const ClassWeights& cw, std::uint64_t seed,
                              const ForestOptions& opt = {}) {
    if (opt.n_trees < 1) throw ConfigError("fit_forest: need at least one tree");
    if (d.size() == 0) throw UsageError("fit_forest: empty training set");
    d.check();
    ForestModel f;
    f.features_per_split = opt.max_features > 0 ? opt.max_features
                                                : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d.n_features()))));
    f.trees.resize(static_cast<std::size_t>(opt.n_trees));
    for (int t = 0; t < opt.n_trees; ++t) f.tree_seeds.push_back(splitmix64(seed + static_cast<std::uint64_t>(t)));
    parallel_for(f.trees.size(), opt.workers, [&](std::size_t t) {
        std::mt19937_64 rng(f.tree_seeds[t]);
        std::vector<std::size_t> idx(d.size());
        if (opt.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
            for (auto& i : idx) i = pick(rng);
        } else {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        f.trees[t] = DecisionTree::fit(d, std::move(idx), cw, {opt.min_leaf, f.features_per_split, rng()});
    });
    return f;
}

}  // namespace qbench
