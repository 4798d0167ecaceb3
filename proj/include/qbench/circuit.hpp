/**
 * @file circuit.hpp
 * @brief Parameterised circuit IR, data encodings and ansatz layers.
 *
 * A CircuitSpec is an immutable recipe: each op carries an optional
 * ParamBinding telling `bind()` where its angle comes from (a feature, a
 * pairwise feature product, a trainable slot, or a constant).
 */
#pragma once

#include "qbench/errors.hpp"
#include "qbench/statevec.hpp"

#include <algorithm>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace qbench {

struct ParamBinding {
    enum class Source {
        Data,         ///< x[index]
        DataProduct,  ///< (shift - x[index]) * (shift - x[index2])
        Train,        ///< theta[index]
        Const         ///< value
    };

    Source source = Source::Const;
    int index = 0;
    int index2 = 0;
    double value = 0.0;  ///< constant for Const, shift for DataProduct
    double scale = 1.0;
    double offset = 0.0;

    static ParamBinding data(int i, double scale = 1.0, double offset = 0.0) {
        return {Source::Data, i, 0, 0.0, scale, offset};
    }
    static ParamBinding data_product(int i, int j, double shift, double scale) {
        return {Source::DataProduct, i, j, shift, scale, 0.0};
    }
    static ParamBinding train(int k, double scale = 1.0, double offset = 0.0) {
        return {Source::Train, k, 0, 0.0, scale, offset};
    }
    static ParamBinding constant(double v) { return {Source::Const, 0, 0, v, 1.0, 0.0}; }

    double resolve(std::span<const double> x, std::span<const double> theta) const {
        double v = 0.0;
        switch (source) {
            case Source::Data: v = x[static_cast<std::size_t>(index)]; break;
            case Source::DataProduct:
                v = (value - x[static_cast<std::size_t>(index)]) * (value - x[static_cast<std::size_t>(index2)]);
                break;
            case Source::Train: v = theta[static_cast<std::size_t>(index)]; break;
            case Source::Const: v = value; break;
        }
        return scale * v + offset;
    }

    friend bool operator==(const ParamBinding&, const ParamBinding&) = default;
};

struct CircuitOp {
    GateKind kind = GateKind::H;
    int q0 = 0;
    int q1 = -1;
    std::optional<ParamBinding> binding;

    friend bool operator==(const CircuitOp&, const CircuitOp&) = default;
};

class CircuitSpec {
public:
    CircuitSpec() = default;
    explicit CircuitSpec(int n_qubits, int n_features = 0) : n_qubits_(n_qubits), n_features_(n_features) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) throw ConfigError("CircuitSpec: bad qubit count " + std::to_string(n_qubits));
    }

    int n_qubits() const noexcept { return n_qubits_; }
    int n_features() const noexcept { return n_features_; }
    int n_trainable() const noexcept { return n_trainable_; }
    const std::vector<CircuitOp>& ops() const noexcept { return ops_; }
    std::size_t size() const noexcept { return ops_.size(); }

    CircuitSpec& add(GateKind kind, int q0, int q1 = -1, std::optional<ParamBinding> b = std::nullopt) {
        if (q0 < 0 || q0 >= n_qubits_ || (is_two_qubit(kind) && (q1 < 0 || q1 >= n_qubits_ || q1 == q0)))
            throw UsageError("CircuitSpec::add: invalid target for " + std::string(gate_name(kind)));
        if (is_parameterized(kind) != b.has_value())
            throw UsageError("CircuitSpec::add: " + std::string(gate_name(kind)) + " binding mismatch");
        if (b) {
            using S = ParamBinding::Source;
            if (b->source == S::Train) n_trainable_ = std::max(n_trainable_, b->index + 1);
            if (b->source == S::Data) n_features_ = std::max(n_features_, b->index + 1);
            if (b->source == S::DataProduct) n_features_ = std::max({n_features_, b->index + 1, b->index2 + 1});
        }
        ops_.push_back({kind, q0, q1, b});
        return *this;
    }

    CircuitSpec& append(const CircuitSpec& other) {
        if (other.n_qubits_ != n_qubits_) throw UsageError("CircuitSpec::append: qubit count mismatch");
        for (const auto& op : other.ops_) add(op.kind, op.q0, op.q1, op.binding);
        n_features_ = std::max(n_features_, other.n_features_);
        n_trainable_ = std::max(n_trainable_, other.n_trainable_);
        return *this;
    }

    friend bool operator==(const CircuitSpec&, const CircuitSpec&) = default;

private:
    int n_qubits_ = 1;
    int n_features_ = 0;
    int n_trainable_ = 0;
    std::vector<CircuitOp> ops_;
};

// ---------------------------------------------------------------------------
// Encodings

enum class Axis { X, Y, Z };

inline GateKind rotation_for(Axis a) {
    switch (a) {
        case Axis::X: return GateKind::RX;
        case Axis::Y: return GateKind::RY;
        case Axis::Z: return GateKind::RZ;
    }
    return GateKind::RY;
}

inline std::string axes_to_string(std::span<const Axis> seq) {
    std::string s;
    for (Axis a : seq) s += a == Axis::X ? 'X' : a == Axis::Y ? 'Y' : 'Z';
    return s;
}

inline std::vector<Axis> parse_axes(std::string_view s) {
    std::vector<Axis> out;
    for (char c : s) {
        switch (c) {
            case 'X': case 'x': out.push_back(Axis::X); break;
            case 'Y': case 'y': out.push_back(Axis::Y); break;
            case 'Z': case 'z': out.push_back(Axis::Z); break;
            default: throw ConfigError("unknown rotation axis '" + std::string(1, c) + "'");
        }
    }
    return out;
}

inline void validate_axes(std::span<const Axis> seq) {
    if (seq.empty()) throw ConfigError("angle encoding: empty axis sequence");
    if (seq.size() > 3) throw ConfigError("angle encoding: at most 3 axes");
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] == seq[j]) throw ConfigError("angle encoding: repeated axis in " + axes_to_string(seq));
}

/// All 15 ordered non-repeating axis sequences of length 1..3.
inline std::vector<std::vector<Axis>> all_axis_sequences() {
    const Axis all[] = {Axis::X, Axis::Y, Axis::Z};
    std::vector<std::vector<Axis>> out;
    for (Axis a : all) out.push_back({a});
    for (Axis a : all)
        for (Axis b : all)
            if (a != b) out.push_back({a, b});
    for (Axis a : all)
        for (Axis b : all)
            for (Axis c : all)
                if (a != b && b != c && a != c) out.push_back({a, b, c});
    return out;
}

inline constexpr double kAngleScale = std::numbers::pi;

/// One rotation per (qubit, axis), qubit-major, angle pi * x_i.
inline CircuitSpec angle_encoding(int n_features, std::span<const Axis> sequence) {
    validate_axes(sequence);
    if (n_features < 1) throw ConfigError("angle encoding: n_features must be >= 1");
    CircuitSpec c(n_features, n_features);
    for (int q = 0; q < n_features; ++q)
        for (Axis a : sequence) c.add(rotation_for(a), q, -1, ParamBinding::data(q, kAngleScale));
    return c;
}

inline CircuitSpec z_feature_map(int n_features, int repetitions) {
    if (repetitions < 1) throw ConfigError("z feature map: repetitions must be >= 1");
    CircuitSpec c(n_features, n_features);
    for (int r = 0; r < repetitions; ++r) {
        for (int q = 0; q < n_features; ++q) c.add(GateKind::H, q);
        for (int q = 0; q < n_features; ++q) c.add(GateKind::RZ, q, -1, ParamBinding::data(q, 2.0));
    }
    return c;
}

namespace detail {
inline CircuitSpec zz_feature_map(int n, int repetitions, GateKind rot, double shift) {
    if (n < 2) throw ConfigError("zz feature map: needs at least 2 qubits");
    if (repetitions < 1) throw ConfigError("zz feature map: repetitions must be >= 1");
    CircuitSpec c(n, n);
    for (int r = 0; r < repetitions; ++r) {
        for (int q = 0; q < n; ++q) c.add(GateKind::H, q);
        for (int q = 0; q < n; ++q) c.add(rot, q, -1, ParamBinding::data(q, 2.0));
        for (int q = 0; q + 1 < n; ++q) {
            c.add(GateKind::CNOT, q, q + 1);
            c.add(rot, q + 1, -1, ParamBinding::data_product(q, q + 1, shift, 2.0));
            c.add(GateKind::CNOT, q, q + 1);
        }
    }
    return c;
}
}  // namespace detail

/// RZ-based ZZ map; pairwise angle 2 x_i x_j on adjacent pairs.
inline CircuitSpec zz_feature_map_variant_a(int n_features, int repetitions) {
    return detail::zz_feature_map(n_features, repetitions, GateKind::RZ, 0.0);
}

/// PHASE-based ZZ map; pairwise angle 2 (pi - x_i)(pi - x_j) on adjacent pairs.
inline CircuitSpec zz_feature_map_variant_b(int n_features, int repetitions) {
    return detail::zz_feature_map(n_features, repetitions, GateKind::PHASE, std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Ansatz layers

enum class Ansatz { Basic, Strongly };

inline std::string_view ansatz_name(Ansatz a) { return a == Ansatz::Basic ? "basic" : "strongly"; }

inline Ansatz parse_ansatz(std::string_view s) {
    if (s == "basic") return Ansatz::Basic;
    if (s == "strongly") return Ansatz::Strongly;
    throw ConfigError("unknown ansatz '" + std::string(s) + "'");
}

constexpr int params_per_qubit(Ansatz a) { return a == Ansatz::Strongly ? 3 : 1; }

namespace detail {
// CNOT(i -> i+1 mod n); the n = 2 ring collapses to a single CNOT(0 -> 1).
inline void cnot_ring(CircuitSpec& c) {
    const int n = c.n_qubits();
    if (n == 2) {
        c.add(GateKind::CNOT, 0, 1);
        return;
    }
    for (int q = 0; q < n; ++q) c.add(GateKind::CNOT, q, (q + 1) % n);
}
}  // namespace detail

inline CircuitSpec basic_entangling_layer(int n_qubits, int layer_index) {
    if (n_qubits < 2) throw ConfigError("entangling layer: needs at least 2 qubits");
    CircuitSpec c(n_qubits);
    const int base = layer_index * n_qubits;
    for (int q = 0; q < n_qubits; ++q) c.add(GateKind::RX, q, -1, ParamBinding::train(base + q));
    detail::cnot_ring(c);
    return c;
}

inline CircuitSpec strongly_entangling_layer(int n_qubits, int layer_index) {
    if (n_qubits < 2) throw ConfigError("entangling layer: needs at least 2 qubits");
    CircuitSpec c(n_qubits);
    const int base = 3 * layer_index * n_qubits;
    for (int q = 0; q < n_qubits; ++q) {
        c.add(GateKind::RZ, q, -1, ParamBinding::train(base + 3 * q));
        c.add(GateKind::RY, q, -1, ParamBinding::train(base + 3 * q + 1));
        c.add(GateKind::RZ, q, -1, ParamBinding::train(base + 3 * q + 2));
    }
    detail::cnot_ring(c);
    return c;
}

inline CircuitSpec entangling_layer(Ansatz a, int n_qubits, int layer_index) {
    return a == Ansatz::Strongly ? strongly_entangling_layer(n_qubits, layer_index)
                                 : basic_entangling_layer(n_qubits, layer_index);
}

enum class EncodingKind { Angle, ZFeatureMap, ZZVariantA, ZZVariantB };

inline std::string_view encoding_name(EncodingKind k) {
    switch (k) {
        case EncodingKind::Angle: return "Angle";
        case EncodingKind::ZFeatureMap: return "Z";
        case EncodingKind::ZZVariantA: return "ZZ";
        case EncodingKind::ZZVariantB: return "ZZ-qiskit";
    }
    return "?";
}

inline EncodingKind parse_encoding(std::string_view s) {
    if (s == "Angle" || s == "angle") return EncodingKind::Angle;
    if (s == "Z" || s == "z") return EncodingKind::ZFeatureMap;
    if (s == "ZZ" || s == "zz" || s == "ZZ-a") return EncodingKind::ZZVariantA;
    if (s == "ZZ-qiskit" || s == "zz-qiskit" || s == "ZZ-b") return EncodingKind::ZZVariantB;
    throw ConfigError("unknown encoding '" + std::string(s) + "'");
}

struct EncodingSpec {
    EncodingKind kind = EncodingKind::Angle;
    std::vector<Axis> axes{Axis::Y};  ///< only used by Angle
    int repetitions = 1;

    std::string label() const {
        std::string s(encoding_name(kind));
        if (kind == EncodingKind::Angle && !(axes.size() == 1 && axes[0] == Axis::Y)) s += "[" + axes_to_string(axes) + "]";
        return s;
    }

    friend bool operator==(const EncodingSpec&, const EncodingSpec&) = default;
};

/// The full (repeated) encoding block for `n_features` qubits.
inline CircuitSpec encode(const EncodingSpec& e, int n_features) {
    if (e.repetitions < 1) throw ConfigError("encoding: repetitions must be >= 1");
    switch (e.kind) {
        case EncodingKind::Angle: {
            CircuitSpec block = angle_encoding(n_features, e.axes);
            CircuitSpec c(n_features, n_features);
            for (int r = 0; r < e.repetitions; ++r) c.append(block);
            return c;
        }
        case EncodingKind::ZFeatureMap: return z_feature_map(n_features, e.repetitions);
        case EncodingKind::ZZVariantA: return zz_feature_map_variant_a(n_features, e.repetitions);
        case EncodingKind::ZZVariantB: return zz_feature_map_variant_b(n_features, e.repetitions);
    }
    throw ConfigError("encoding: unknown kind");
}

// ---------------------------------------------------------------------------

/// Inverse of a data-only fragment: reversed order, angles negated.
inline CircuitSpec adjoint(const CircuitSpec& fragment) {
    CircuitSpec out(fragment.n_qubits(), fragment.n_features());
    const auto& ops = fragment.ops();
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        auto b = it->binding;
        if (b) {
            if (b->source == ParamBinding::Source::Train)
                throw UsageError("adjoint: fragment contains trainable bindings");
            b->scale = -b->scale;
            b->offset = -b->offset;
        }
        out.add(it->kind, it->q0, it->q1, b);
    }
    return out;
}

/// Resolves every binding into a concrete gate list.
inline std::vector<Gate> bind(const CircuitSpec& c, std::span<const double> x, std::span<const double> theta) {
    if (static_cast<int>(x.size()) < c.n_features())
        throw UsageError("bind: expected " + std::to_string(c.n_features()) + " features, got " + std::to_string(x.size()));
    if (static_cast<int>(theta.size()) != c.n_trainable())
        throw UsageError("bind: expected " + std::to_string(c.n_trainable()) + " parameters, got " +
                         std::to_string(theta.size()));
    std::vector<Gate> gates;
    gates.reserve(c.size());
    for (const auto& op : c.ops()) gates.push_back({op.kind, op.q0, op.q1, op.binding ? op.binding->resolve(x, theta) : 0.0});
    return gates;
}

inline StateVector run(const CircuitSpec& c, std::span<const double> x, std::span<const double> theta = {}) {
    StateVector s(c.n_qubits());
    s.apply_all(qbench::bind(c, x, theta));
    return s;
}

/// Plain-text diagram, one line per qubit. Debug aid only.
inline std::string to_diagram(const CircuitSpec& c) {
    std::vector<std::string> lines(static_cast<std::size_t>(c.n_qubits()));
    for (int q = 0; q < c.n_qubits(); ++q) lines[static_cast<std::size_t>(q)] = "q" + std::to_string(q) + ": ";
    auto binding_text = [](const ParamBinding& b) {
        std::ostringstream os;
        switch (b.source) {
            case ParamBinding::Source::Data: os << b.scale << "*x" << b.index; break;
            case ParamBinding::Source::DataProduct:
                os << b.scale << "*(" << b.value << "-x" << b.index << ")(" << b.value << "-x" << b.index2 << ")";
                break;
            case ParamBinding::Source::Train: os << "t" << b.index; break;
            case ParamBinding::Source::Const: os << b.value; break;
        }
        if (b.offset != 0.0) os << "+" << b.offset;
        return os.str();
    };
    for (const auto& op : c.ops()) {
        std::vector<std::string> cell(lines.size(), "");
        if (is_two_qubit(op.kind)) {
            cell[static_cast<std::size_t>(op.q0)] = "*";
            cell[static_cast<std::size_t>(op.q1)] = op.kind == GateKind::CNOT ? "X" : "Z";
        } else {
            std::string s(gate_name(op.kind));
            if (op.binding) s += "(" + binding_text(*op.binding) + ")";
            cell[static_cast<std::size_t>(op.q0)] = s;
        }
        std::size_t w = 1;
        for (const auto& s : cell) w = std::max(w, s.size());
        for (std::size_t q = 0; q < lines.size(); ++q) {
            const auto& s = cell[q];
            lines[q] += "-" + s + std::string(w - s.size(), '-');
        }
    }
    std::string out;
    for (const auto& l : lines) out += l + "-\n";
    return out;
}

}  // namespace qbench
