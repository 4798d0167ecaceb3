#include "qbench/baselines.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace qbench;

namespace {

double accuracy(const LabeledData& d, auto&& predict) {
    int ok = 0;
    for (std::size_t i = 0; i < d.size(); ++i) ok += predict(d.row(i)) == d.y[i];
    return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace

TEST(Logistic, GradientMatchesFiniteDifferences) {
    const LabeledData d = test::blobs(30, 3, 1.0, 2);
    const std::vector<double> w{0.3, -0.2, 0.1};
    const double b = 0.05;
    const ClassWeights cw{0.3, 0.7};
    const auto lg = logistic_loss(d, cw, w, b);
    for (std::size_t k = 0; k < w.size(); ++k) {
        auto wp = w, wm = w;
        wp[k] += 1e-6;
        wm[k] -= 1e-6;
        EXPECT_NEAR(lg.grad_w[k], (logistic_loss(d, cw, wp, b).loss - logistic_loss(d, cw, wm, b).loss) / 2e-6, 1e-8);
    }
    EXPECT_NEAR(lg.grad_b, (logistic_loss(d, cw, w, b + 1e-6).loss - logistic_loss(d, cw, w, b - 1e-6).loss) / 2e-6, 1e-8);
}

TEST(Logistic, LearnsBlobs) {
    const LabeledData d = test::blobs(100, 2, 3.0, 3);
    const auto m = fit_logistic(d, {0.5, 0.5});
    EXPECT_EQ(m.iterations, 1000);
    EXPECT_GT(accuracy(d, [&](auto x) { return m.predict(x); }), 0.9);
}

TEST(Logistic, DivergenceGuardNeedsTenConsecutiveRises) {
    DivergenceGuard g;
    double loss = 1.0;
    for (int i = 0; i < 9; ++i) EXPECT_TRUE(g.update(loss += 0.1));
    EXPECT_TRUE(g.update(0.5));  // a drop resets the count
    for (int i = 0; i < 9; ++i) EXPECT_TRUE(g.update(loss += 0.1));
    EXPECT_FALSE(g.update(loss += 0.1));
}

TEST(Logistic, RejectsBadOptions) {
    const LabeledData d = test::blobs(20, 2, 1.0, 4);
    EXPECT_THROW(fit_logistic(d, {0.5, 0.5}, {0.0, 10}), ConfigError);
    EXPECT_THROW(fit_logistic(d, {0.5, 0.5}, {0.1, 0}), ConfigError);
}

TEST(Gini, WeightedImpurity) {
    EXPECT_DOUBLE_EQ(weighted_gini({1.0, 1.0}), 0.5);
    EXPECT_DOUBLE_EQ(weighted_gini({3.0, 0.0}), 0.0);
    EXPECT_DOUBLE_EQ(weighted_gini({0.0, 0.0}), 0.0);
}

TEST(Tree, FitsTrainingDataExactly) {
    const LabeledData d = test::blobs(60, 3, 0.5, 5);
    const auto t = fit_tree(d, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(accuracy(d, [&](auto x) { return t.predict(x); }), 1.0);
    EXPECT_GT(t.depth(), 0);
}

TEST(Tree, MidpointThreshold) {
    LabeledData d;
    d.X.resize(4, 1);
    d.X << 0, 1, 3, 4;
    d.y = {0, 0, 1, 1};
    const auto t = fit_tree(d, {0.5, 0.5});
    ASSERT_EQ(t.nodes().size(), 3u);
    EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, 2.0);
}

TEST(Tree, MinLeafLimitsGrowth) {
    const LabeledData d = test::blobs(60, 3, 0.5, 6);
    const auto t = fit_tree(d, {0.5, 0.5}, 10);
    for (const auto& n : t.nodes())
        if (n.is_leaf()) {
            EXPECT_GE(n.weighted_counts[0] / 0.5 + n.weighted_counts[1] / 0.5, 10.0 - 1e-9);
        }
    EXPECT_THROW(fit_tree(d, {0.5, 0.5}, 0), ConfigError);
}

TEST(Tree, WeightsDecideLeafClass) {
    LabeledData d;
    d.X.resize(3, 1);
    d.X << 1, 1, 1;  // unsplittable
    d.y = {0, 0, 1};
    EXPECT_EQ(fit_tree(d, {0.2, 0.8}).predict(d.row(0)), 1);
    EXPECT_EQ(fit_tree(d, {0.5, 0.5}).predict(d.row(0)), 0);
    EXPECT_EQ(fit_tree(d, {0.25, 0.5}).predict(d.row(0)), 0);  // weighted tie -> raw majority
}

TEST(TreeProperty, InvariantUnderMonotoneFeatureTransform) {
    // a strictly increasing map preserves the split structure; predictions on
    // the training points themselves are therefore unchanged
    const LabeledData d = test::blobs(50, 2, 0.8, 7);
    LabeledData t = d;
    for (Eigen::Index i = 0; i < t.X.size(); ++i) t.X.data()[i] = std::exp(t.X.data()[i]) * 3 + 1;
    const auto a = fit_tree(d, {0.4, 0.6}), b = fit_tree(t, {0.4, 0.6});
    EXPECT_EQ(a.nodes().size(), b.nodes().size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(a.predict(d.row(i)), b.predict(t.row(i)));
}

TEST(Forest, DeterministicForSeedAndWorkers) {
    const LabeledData d = test::blobs(80, 4, 1.0, 8);
    ForestOptions o;
    o.n_trees = 20;
    const auto a = fit_forest(d, {0.5, 0.5}, 3, o);
    o.workers = 4;
    const auto b = fit_forest(d, {0.5, 0.5}, 3, o);
    EXPECT_EQ(a.tree_seeds, b.tree_seeds);
    EXPECT_EQ(a.features_per_split, 2);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(a.predict(d.row(i)), b.predict(d.row(i)));
    const auto c = fit_forest(d, {0.5, 0.5}, 4, o);
    EXPECT_NE(a.tree_seeds, c.tree_seeds);
}

TEST(Forest, BeatsChanceOnHeldOut) {
    const LabeledData train = test::blobs(150, 4, 1.5, 9), hold = test::blobs(100, 4, 1.5, 10);
    ForestOptions o;
    o.n_trees = 30;
    const auto f = fit_forest(train, {0.5, 0.5}, 1, o);
    EXPECT_GT(accuracy(hold, [&](auto x) { return f.predict(x); }), 0.75);
}

TEST(Forest, VoteTieGoesToPositive) {
    ForestModel f;
    LabeledData d;
    d.X.resize(2, 1);
    d.X << 0, 0;
    d.y = {0, 1};
    // two single-leaf trees voting 0 and 1
    LabeledData zero = d, one = d;
    zero.y = {0, 0};
    one.y = {1, 1};
    f.trees.push_back(fit_tree(zero, {0.5, 0.5}));
    f.trees.push_back(fit_tree(one, {0.5, 0.5}));
    EXPECT_EQ(f.predict(d.row(0)), 1);
}
