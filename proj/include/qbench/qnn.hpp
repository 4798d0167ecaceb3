/**
 * @file qnn.hpp
 * @brief Variational quantum classifier.
 *
 * Circuit: angle encoding (once, or before every layer when re-uploading)
 * followed by `n_layers` entangling layers. The readout is the softmax of
 * <Z_0>, <Z_1>; qubit c stands for class c. Training minimises the
 * class-weighted cross entropy with Adam on parameter-shift gradients and
 * early-stops on validation loss. `grow_layers` searches the depth.
 */
#pragma once

#include "qbench/circuit.hpp"
#include "qbench/data.hpp"
#include "qbench/kv.hpp"
#include "qbench/metrics.hpp"
#include "qbench/seed.hpp"
#include "qbench/statevec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qbench {

struct QnnConfig {
    int n_features = 2;
    std::vector<Axis> encoding{Axis::Y};
    bool reupload = false;
    Ansatz ansatz = Ansatz::Strongly;
    int n_layers = 2;
    std::uint64_t seed = 0;

    int n_parameters() const { return params_per_qubit(ansatz) * n_features * n_layers; }

    void validate() const {
        if (n_features < 2) throw ConfigError("QnnConfig: binary readout needs at least 2 qubits");
        if (n_features > kMaxQubits) throw ConfigError("QnnConfig: too many qubits");
        if (n_layers < 1) throw ConfigError("QnnConfig: n_layers must be >= 1");
        validate_axes(encoding);
    }

    friend bool operator==(const QnnConfig&, const QnnConfig&) = default;
};

struct TrainOptions {
    int epochs = 100;
    int patience = 5;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 32;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Encoding/ansatz stack for a config. `n_layers` may be 0 (encoding only).
inline CircuitSpec build_qnn_circuit(const QnnConfig& cfg) {
    validate_axes(cfg.encoding);
    const CircuitSpec block = angle_encoding(cfg.n_features, cfg.encoding);
    CircuitSpec c(cfg.n_features, cfg.n_features);
    if (!cfg.reupload || cfg.n_layers == 0) c.append(block);
    for (int l = 0; l < cfg.n_layers; ++l) {
        if (cfg.reupload) c.append(block);
        c.append(entangling_layer(cfg.ansatz, cfg.n_features, l));
    }
    return c;
}

class QnnModel {
public:
    QnnModel(QnnConfig cfg, std::vector<double> parameters, ClassWeights weights = {1.0, 1.0})
        : config_(std::move(cfg)), parameters_(std::move(parameters)), weights_(weights) {
        config_.validate();
        if (static_cast<int>(parameters_.size()) != config_.n_parameters())
            throw UsageError("QnnModel: expected " + std::to_string(config_.n_parameters()) + " parameters, got " +
                             std::to_string(parameters_.size()));
        if (weights_[0] < 0 || weights_[1] < 0) throw ConfigError("QnnModel: class weights must be nonnegative");
        circuit_ = build_qnn_circuit(config_);
    }

    /// Parameters drawn uniformly from (-pi, pi) using the config seed.
    static QnnModel initialized(const QnnConfig& cfg, ClassWeights weights = {1.0, 1.0}) {
        cfg.validate();
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(-std::numbers::pi, std::numbers::pi);
        std::vector<double> p(static_cast<std::size_t>(cfg.n_parameters()));
        for (auto& v : p) v = dist(rng);
        return QnnModel(cfg, std::move(p), weights);
    }

    const QnnConfig& config() const noexcept { return config_; }
    const std::vector<double>& parameters() const noexcept { return parameters_; }
    std::vector<double>& mutable_parameters() noexcept { return parameters_; }
    const ClassWeights& class_weights() const noexcept { return weights_; }
    void set_class_weights(ClassWeights w) { weights_ = w; }
    const CircuitSpec& circuit() const noexcept { return circuit_; }

private:
    QnnConfig config_;
    std::vector<double> parameters_;
    ClassWeights weights_;
    CircuitSpec circuit_;
};

inline std::array<double, 2> softmax2(double a, double b) {
    const double m = std::max(a, b);
    const double ea = std::exp(a - m), eb = std::exp(b - m);
    return {ea / (ea + eb), eb / (ea + eb)};
}

/// Numerically stable softmax over an arbitrary logit vector.
inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    if (out.empty()) return out;
    const double m = *std::max_element(out.begin(), out.end());
    double s = 0.0;
    for (auto& v : out) s += (v = std::exp(v - m));
    for (auto& v : out) v /= s;
    return out;
}

namespace detail {
inline std::array<double, 2> readout(const StateVector& s) { return {expectation_z(s, 0), expectation_z(s, 1)}; }

inline void check_input(const QnnModel& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.config().n_features)
        throw UsageError("qnn: expected " + std::to_string(m.config().n_features) + " features, got " +
                         std::to_string(x.size()));
}
}  // namespace detail

/// <Z_0>, <Z_1> after the bound circuit.
inline std::array<double, 2> expectations(const QnnModel& m, std::span<const double> x) {
    detail::check_input(m, x);
    return detail::readout(run(m.circuit(), x, m.parameters()));
}

inline std::array<double, 2> forward(const QnnModel& m, std::span<const double> x) {
    const auto e = expectations(m, x);
    return softmax2(e[0], e[1]);
}

/// Class 1 wins ties.
inline int predict(const QnnModel& m, std::span<const double> x) {
    const auto p = forward(m, x);
    return p[1] >= p[0] ? 1 : 0;
}

inline std::vector<int> predict_all(const QnnModel& m, const LabeledData& d) {
    std::vector<int> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = predict(m, d.row(i));
    return out;
}

inline double weighted_cross_entropy(std::span<const double> probs, int label, const ClassWeights& w) {
    if (label < 0 || label > 1 || probs.size() != 2) throw UsageError("weighted_cross_entropy: binary labels only");
    return -w[static_cast<std::size_t>(label)] * std::log(std::max(probs[static_cast<std::size_t>(label)], kProbabilityFloor));
}

/// Mean weighted cross entropy over `d` (or the rows `idx` of it).
inline double dataset_loss(const QnnModel& m, const LabeledData& d, std::span<const std::size_t> idx = {}) {
    const std::size_t n = idx.empty() ? d.size() : idx.size();
    if (n == 0) throw UsageError("dataset_loss: empty set");
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = idx.empty() ? k : idx[k];
        const auto p = forward(m, d.row(i));
        s += weighted_cross_entropy(p, d.y[i], m.class_weights());
    }
    return s / static_cast<double>(n);
}

/// d<Z_q>/d theta_k for q in {0, 1} via the shift rule, one row per parameter.
inline std::vector<std::array<double, 2>> expectation_jacobian(const QnnModel& m, std::span<const double> x) {
    detail::check_input(m, x);
    const CircuitSpec& c = m.circuit();
    const auto gates = qbench::bind(c, x, m.parameters());
    std::vector<std::array<double, 2>> jac(m.parameters().size(), {0.0, 0.0});
    constexpr double shift = std::numbers::pi / 2.0;

    StateVector prefix(c.n_qubits());
    for (std::size_t k = 0; k < gates.size(); ++k) {
        const auto& b = c.ops()[k].binding;
        if (b && b->source == ParamBinding::Source::Train) {
            std::array<double, 2> e_plus{}, e_minus{};
            for (int sign : {+1, -1}) {
                StateVector s = prefix;
                Gate g = gates[k];
                g.angle += sign * shift;
                s.apply(g);
                for (std::size_t j = k + 1; j < gates.size(); ++j) s.apply(gates[j]);
                (sign > 0 ? e_plus : e_minus) = detail::readout(s);
            }
            auto& row = jac[static_cast<std::size_t>(b->index)];
            for (int q = 0; q < 2; ++q) row[static_cast<std::size_t>(q)] += b->scale * (e_plus[static_cast<std::size_t>(q)] - e_minus[static_cast<std::size_t>(q)]) / 2.0;
        }
        prefix.apply(gates[k]);
    }
    return jac;
}

/// Gradient of the mean weighted cross entropy over `batch` rows of `d`.
inline std::vector<double> parameter_shift_gradient(const QnnModel& m, const LabeledData& d,
                                                    std::span<const std::size_t> batch) {
    std::vector<double> grad(m.parameters().size(), 0.0);
    if (batch.empty()) return grad;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) {
        const auto x = d.row(i);
        const int y = d.y[i];
        const auto e = expectations(m, x);
        const auto p = softmax2(e[0], e[1]);
        // d/de_q of -w_y log p_y = -w_y (delta_qy - p_q)
        const double w = m.class_weights()[static_cast<std::size_t>(y)];
        const std::array<double, 2> dl_de{-w * ((y == 0 ? 1.0 : 0.0) - p[0]), -w * ((y == 1 ? 1.0 : 0.0) - p[1])};
        const auto jac = expectation_jacobian(m, x);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += inv_n * (dl_de[0] * jac[k][0] + dl_de[1] * jac[k][1]);
    }
    return grad;
}

inline std::vector<double> parameter_shift_gradient(const QnnModel& m, const LabeledData& d) {
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return parameter_shift_gradient(m, d, all);
}

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> val_f1;
    int stopped_epoch = 0;  ///< 1-based index of the last epoch run
    int best_epoch = 0;     ///< 1-based; 0 if no epoch ran
    double best_val_loss = std::numeric_limits<double>::infinity();
};

struct TrainResult {
    QnnModel model;
    TrainReport report;
};

/// Mini-batch Adam with early stopping on validation loss. The returned model
/// carries the parameters of the best validation epoch.
inline TrainResult train(QnnModel model, const LabeledData& train_set, const LabeledData& val_set,
                         const TrainOptions& opt = {}) {
    if (train_set.size() == 0 || val_set.size() == 0) throw UsageError("train: empty split");
    if (opt.epochs < 1 || opt.patience < 1 || opt.batch_size < 1) throw ConfigError("train: bad options");
    train_set.check();
    val_set.check();

    std::mt19937_64 rng(splitmix64(model.config().seed ^ 0x5452414eULL));
    const std::size_t n_params = model.parameters().size();
    std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainReport rep;
    std::vector<double> best_params = model.parameters();
    long long step = 0;
    int since_best = 0;

    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
            std::span<const std::size_t> batch(order.data() + start, end - start);
            epoch_loss += dataset_loss(model, train_set, batch) * static_cast<double>(batch.size());
            const auto g = parameter_shift_gradient(model, train_set, batch);
            ++step;
            const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
            auto& p = model.mutable_parameters();
            for (std::size_t k = 0; k < n_params; ++k) {
                m1[k] = opt.beta1 * m1[k] + (1.0 - opt.beta1) * g[k];
                m2[k] = opt.beta2 * m2[k] + (1.0 - opt.beta2) * g[k] * g[k];
                p[k] -= opt.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + opt.epsilon);
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        const double vl = dataset_loss(model, val_set);
        if (!std::isfinite(epoch_loss) || !std::isfinite(vl))
            throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                " (learning rate " + format_real(opt.learning_rate) + " too large?)");
        const auto pred = predict_all(model, val_set);
        rep.train_loss.push_back(epoch_loss);
        rep.val_loss.push_back(vl);
        rep.val_f1.push_back(confusion(val_set.y, pred).f1());
        rep.stopped_epoch = epoch;

        if (vl < rep.best_val_loss) {
            rep.best_val_loss = vl;
            rep.best_epoch = epoch;
            best_params = model.parameters();
            since_best = 0;
        } else if (++since_best >= opt.patience) {
            break;
        }
    }
    model.mutable_parameters() = std::move(best_params);
    return {std::move(model), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Depth search

struct GrowthStep {
    int layers = 0;
    double val_loss = 0.0;
    bool improved = false;
};

struct GrowthTrace {
    int best_layers = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<GrowthStep> steps;
};

/// Tries L = min_layers, min_layers+1, ... calling `evaluate(L)` (which must
/// return the validation loss reached at depth L). Stops after `patience`
/// consecutive non-improving depths or once L would exceed `max_layers`.
template <class Evaluate>
GrowthTrace grow_layers_search(Evaluate&& evaluate, int patience, int min_layers = 2, int max_layers = 100) {
    if (patience < 1) throw ConfigError("grow_layers: patience must be >= 1");
    if (min_layers < 1 || max_layers < min_layers) throw ConfigError("grow_layers: bad layer range");
    GrowthTrace trace;
    int stale = 0;
    for (int layers = min_layers; layers <= max_layers; ++layers) {
        const double loss = evaluate(layers);
        const bool improved = loss < trace.best_val_loss;
        trace.steps.push_back({layers, loss, improved});
        if (improved) {
            trace.best_val_loss = loss;
            trace.best_layers = layers;
            stale = 0;
        } else if (++stale >= patience) {
            break;
        }
    }
    return trace;
}

struct GrowthOptions {
    int min_layers = 2;
    int max_layers = 100;
    int patience = 0;  ///< 0 means "number of qubits"
};

struct GrowthResult {
    GrowthTrace trace;
    TrainResult best;
};

/// Seed used for a fresh model of depth `layers`.
inline std::uint64_t layer_seed(std::uint64_t base, int layers) {
    return splitmix64(base + static_cast<std::uint64_t>(layers));
}

/// Full-training depth search; every candidate depth starts from a fresh
/// initialisation. `base.n_layers` is ignored.
inline GrowthResult grow_layers(const QnnConfig& base, const LabeledData& train_set, const LabeledData& val_set,
                                ClassWeights weights, const TrainOptions& topt = {}, const GrowthOptions& gopt = {}) {
    std::optional<TrainResult> best;
    auto evaluate = [&](int layers) {
        QnnConfig cfg = base;
        cfg.n_layers = layers;
        cfg.seed = layer_seed(base.seed, layers);
        auto result = train(QnnModel::initialized(cfg, weights), train_set, val_set, topt);
        const double loss = result.report.best_val_loss;
        if (!best || loss < best->report.best_val_loss) best.emplace(std::move(result));
        return loss;
    };
    const int patience = gopt.patience > 0 ? gopt.patience : base.n_features;
    GrowthTrace trace = grow_layers_search(evaluate, patience, gopt.min_layers, gopt.max_layers);
    return {std::move(trace), std::move(*best)};
}

// ---------------------------------------------------------------------------
// Checkpoints

inline KeyValueDoc to_checkpoint(const QnnModel& m) {
    KeyValueDoc doc;
    const auto& c = m.config();
    doc.set("model", "qnn");
    doc.set("n_features", c.n_features);
    doc.set("encoding", axes_to_string(c.encoding));
    doc.set("reupload", c.reupload);
    doc.set("ansatz", std::string(ansatz_name(c.ansatz)));
    doc.set("n_layers", c.n_layers);
    doc.set("seed", static_cast<unsigned long long>(c.seed));
    doc.set_list<double>("class_weights", m.class_weights());
    doc.set_list<double>("parameters", m.parameters());
    return doc;
}

inline QnnModel qnn_from_checkpoint(const KeyValueDoc& doc) {
    if (doc.get("model", "") != "qnn") throw IngestionError("checkpoint is not a qnn model");
    QnnConfig c;
    c.n_features = static_cast<int>(doc.get_int("n_features"));
    c.encoding = parse_axes(doc.at("encoding"));
    c.reupload = doc.get_bool("reupload");
    c.ansatz = parse_ansatz(doc.at("ansatz"));
    c.n_layers = static_cast<int>(doc.get_int("n_layers"));
    c.seed = doc.get_u64("seed");
    const auto w = doc.get_reals("class_weights");
    if (w.size() != 2) throw IngestionError("checkpoint: class_weights must have 2 entries");
    return QnnModel(c, doc.get_reals("parameters"), {w[0], w[1]});
}

}  // namespace qbench
