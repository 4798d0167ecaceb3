#include "qbench/circuit.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>

using namespace qbench;
using std::numbers::pi;

namespace {

double max_diff(const StateVector& a, const StateVector& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

std::vector<EncodingSpec> every_encoding() {
    std::vector<EncodingSpec> out;
    for (EncodingKind k : {EncodingKind::Angle, EncodingKind::ZFeatureMap, EncodingKind::ZZVariantA, EncodingKind::ZZVariantB})
        for (int r = 1; r <= 3; ++r) out.push_back({k, {Axis::X, Axis::Y}, r});
    return out;
}

}  // namespace

TEST(Axes, FifteenOrderedNonRepeatingSequences) {
    const auto all = all_axis_sequences();
    ASSERT_EQ(all.size(), 15u);
    std::set<std::string> names;
    for (const auto& s : all) names.insert(axes_to_string(s));
    EXPECT_EQ(names.size(), 15u);
    EXPECT_TRUE(names.count("YXZ"));
    EXPECT_TRUE(names.count("X"));
}

TEST(Axes, ParseAndValidate) {
    EXPECT_EQ(axes_to_string(parse_axes("XZY")), "XZY");
    EXPECT_THROW(validate_axes(parse_axes("XX")), ConfigError);
    EXPECT_THROW(parse_axes("Q"), ConfigError);
    EXPECT_THROW(validate_axes(std::vector<Axis>{}), ConfigError);
}

TEST(AngleEncoding, QubitMajorWithPiScale) {
    const std::vector<Axis> seq{Axis::Y, Axis::X};
    const CircuitSpec c = angle_encoding(2, seq);
    ASSERT_EQ(c.size(), 4u);
    EXPECT_EQ(c.ops()[0].kind, GateKind::RY);
    EXPECT_EQ(c.ops()[0].q0, 0);
    EXPECT_EQ(c.ops()[1].kind, GateKind::RX);
    EXPECT_EQ(c.ops()[1].q0, 0);
    EXPECT_EQ(c.ops()[2].q0, 1);
    const double x[] = {0.25, -0.5};
    const auto gates = qbench::bind(c, x, {});
    EXPECT_DOUBLE_EQ(gates[0].angle, pi * 0.25);
    EXPECT_DOUBLE_EQ(gates[3].angle, -pi * 0.5);
}

TEST(FeatureMaps, ZMapStructure) {
    const CircuitSpec c = z_feature_map(3, 2);
    EXPECT_EQ(c.size(), 12u);
    const double x[] = {0.1, 0.2, 0.3};
    const auto gates = qbench::bind(c, x, {});
    EXPECT_EQ(gates[0].kind, GateKind::H);
    EXPECT_EQ(gates[3].kind, GateKind::RZ);
    EXPECT_DOUBLE_EQ(gates[4].angle, 0.4);
}

TEST(FeatureMaps, ZzVariantsPairwiseAngles) {
    const double x[] = {0.3, -0.6, 0.9};
    const auto a = qbench::bind(zz_feature_map_variant_a(3, 1), x, {});
    const auto b = qbench::bind(zz_feature_map_variant_b(3, 1), x, {});
    // H x3, rot x3, then (CNOT, rot, CNOT) per adjacent pair
    ASSERT_EQ(a.size(), 12u);
    EXPECT_EQ(a[6].kind, GateKind::CNOT);
    EXPECT_EQ(a[7].kind, GateKind::RZ);
    EXPECT_EQ(a[7].q0, 1);
    EXPECT_NEAR(a[7].angle, 2 * 0.3 * -0.6, 1e-15);
    EXPECT_EQ(b[7].kind, GateKind::PHASE);
    EXPECT_NEAR(b[7].angle, 2 * (pi - 0.3) * (pi + 0.6), 1e-12);
    EXPECT_NEAR(b[10].angle, 2 * (pi + 0.6) * (pi - 0.9), 1e-12);
    EXPECT_THROW(zz_feature_map_variant_a(1, 1), ConfigError);
}

TEST(FeatureMaps, RepetitionsRepeatTheBlock) {
    for (EncodingKind k : {EncodingKind::Angle, EncodingKind::ZFeatureMap, EncodingKind::ZZVariantA}) {
        const auto one = encode({k, {Axis::Y}, 1}, 3).size();
        EXPECT_EQ(encode({k, {Axis::Y}, 3}, 3).size(), 3 * one);
    }
    EXPECT_THROW(encode({EncodingKind::Angle, {Axis::Y}, 0}, 2), ConfigError);
}

TEST(Encoding, NamesRoundTrip) {
    for (EncodingKind k : {EncodingKind::Angle, EncodingKind::ZFeatureMap, EncodingKind::ZZVariantA, EncodingKind::ZZVariantB})
        EXPECT_EQ(parse_encoding(encoding_name(k)), k);
    EXPECT_EQ(parse_encoding("ZZ"), EncodingKind::ZZVariantA);
    EXPECT_THROW(parse_encoding("YY"), ConfigError);
    EXPECT_EQ((EncodingSpec{EncodingKind::Angle, {Axis::Y}, 2}.label()), "Angle");
    EXPECT_EQ((EncodingSpec{EncodingKind::Angle, {Axis::X, Axis::Z}, 1}.label()), "Angle[XZ]");
}

TEST(Ansatz, ParameterCountsAndFreshIndices) {
    const CircuitSpec b0 = basic_entangling_layer(3, 0), b1 = basic_entangling_layer(3, 1);
    EXPECT_EQ(b0.n_trainable(), 3);
    EXPECT_EQ(b1.n_trainable(), 6);
    EXPECT_EQ(b1.ops()[0].binding->index, 3);
    const CircuitSpec s1 = strongly_entangling_layer(4, 1);
    EXPECT_EQ(s1.n_trainable(), 24);
    EXPECT_EQ(s1.ops()[0].binding->index, 12);
    EXPECT_EQ(s1.ops()[0].kind, GateKind::RZ);
    EXPECT_EQ(s1.ops()[1].kind, GateKind::RY);
}

TEST(Ansatz, CnotRing) {
    const CircuitSpec c = basic_entangling_layer(3, 0);
    ASSERT_EQ(c.size(), 6u);
    EXPECT_EQ(c.ops()[5].q0, 2);
    EXPECT_EQ(c.ops()[5].q1, 0);
    const CircuitSpec two = basic_entangling_layer(2, 0);
    ASSERT_EQ(two.size(), 3u);
    EXPECT_EQ(two.ops()[2].kind, GateKind::CNOT);
    EXPECT_EQ(two.ops()[2].q0, 0);
    EXPECT_EQ(two.ops()[2].q1, 1);
    EXPECT_THROW(basic_entangling_layer(1, 0), ConfigError);
}

TEST(Adjoint, RefusesTrainableFragments) {
    EXPECT_THROW(adjoint(basic_entangling_layer(2, 0)), UsageError);
}

TEST(AdjointProperty, EncodeThenAdjointIsIdentity) {
    const FeatureMatrix X = test::uniform_matrix(10, 3, 21);
    for (const auto& e : every_encoding()) {
        const CircuitSpec c = encode(e, 3);
        const CircuitSpec inv = adjoint(c);
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            std::span<const double> x(X.data() + r * 3, 3);
            StateVector s(3);
            s.apply_all(qbench::bind(c, x, {}));
            s.apply_all(qbench::bind(inv, x, {}));
            EXPECT_NEAR(std::norm(s[0]), 1.0, 1e-12) << e.label();
        }
    }
}

TEST(AdjointProperty, DoubleAdjointIsOriginal) {
    const FeatureMatrix X = test::uniform_matrix(5, 3, 22);
    for (const auto& e : every_encoding()) {
        const CircuitSpec c = encode(e, 3);
        const CircuitSpec cc = adjoint(adjoint(c));
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            std::span<const double> x(X.data() + r * 3, 3);
            EXPECT_LT(max_diff(run(c, x), run(cc, x)), 1e-12);
        }
    }
}

TEST(Bind, DimensionMismatchThrows) {
    const CircuitSpec c = angle_encoding(3, std::vector<Axis>{Axis::Y});
    const double short_x[] = {0.1, 0.2};
    EXPECT_THROW(qbench::bind(c, short_x, {}), UsageError);
    CircuitSpec t = basic_entangling_layer(2, 0);
    const double theta[] = {0.1};
    EXPECT_THROW(qbench::bind(t, {}, theta), UsageError);
}

TEST(CircuitSpec, AddValidatesTargetsAndBindings) {
    CircuitSpec c(2);
    EXPECT_THROW(c.add(GateKind::RX, 2), UsageError);
    EXPECT_THROW(c.add(GateKind::RX, 0), UsageError);  // missing binding
    EXPECT_THROW(c.add(GateKind::H, 0, -1, ParamBinding::constant(1.0)), UsageError);
    EXPECT_THROW(c.add(GateKind::CNOT, 1, 1), UsageError);
    EXPECT_NO_THROW(c.add(GateKind::CNOT, 1, 0));
}

TEST(CircuitSpec, DiagramListsEveryQubit) {
    const std::string d = to_diagram(zz_feature_map_variant_a(2, 1));
    EXPECT_NE(d.find("q0"), std::string::npos);
    EXPECT_NE(d.find("q1"), std::string::npos);
}
