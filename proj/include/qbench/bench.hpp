/**
 * @file bench.hpp
 * @brief Experiment records, model selection, grid orchestration and reports.
 *
 * Record store: one JSON object per line, appended in grid order by a single
 * writer so that a fixed master seed reproduces the file byte for byte.
 * Wall-clock timings are kept out of the store (see RecordStore).
 */
#pragma once

#include "qbench/baselines.hpp"
#include "qbench/circuit.hpp"
#include "qbench/kv.hpp"
#include "qbench/metrics.hpp"
#include "qbench/parallel.hpp"
#include "qbench/pipeline.hpp"
#include "qbench/qkernel.hpp"
#include "qbench/qnn.hpp"
#include "qbench/seed.hpp"
#include "qbench/svm.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qbench {

enum class SplitName { Train = 0, Validation = 1, Test = 2 };

struct ExperimentRecord {
    std::string dataset;
    std::string family;  ///< "qnn", "qsvm" or "classical"
    std::string model;   ///< "QNN", "QSVM", "LogisticRegression", "DecisionTree", "RandomForest", "svm"
    int n_features = 0;
    std::uint64_t split_seed = 0;
    std::uint64_t cell_seed = 0;
    std::map<std::string, std::string> config;
    long long n_params = 0;
    std::array<Metrics, 3> metrics{};
    // training history (QNN only)
    int layers = 0;
    int epochs_run = 0;
    int best_epoch = 0;
    std::vector<std::pair<int, double>> layer_losses;
    double seconds = 0.0;
    std::string error;

    const Metrics& at(SplitName s) const { return metrics[static_cast<std::size_t>(s)]; }
    bool ok() const noexcept { return error.empty(); }

    std::string config_string() const {
        std::string s;
        for (const auto& [k, v] : config) s += (s.empty() ? "" : ";") + k + "=" + v;
        return s;
    }

    /// Identity of the grid cell; the store skips cells whose key it has seen.
    std::string key() const {
        return dataset + "|" + family + "|" + model + "|k" + std::to_string(n_features) + "|s" + std::to_string(split_seed) +
               "|" + config_string();
    }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["tn"] = m.tn;
    j["precision"] = m.precision();
    j["recall"] = m.recall();
    j["f1"] = m.f1();
    return j;
}

inline nlohmann::ordered_json to_json(const ExperimentRecord& r, bool with_timing = false) {
    nlohmann::ordered_json j;
    j["dataset"] = r.dataset;
    j["family"] = r.family;
    j["model"] = r.model;
    j["n_features"] = r.n_features;
    j["split_seed"] = r.split_seed;
    j["cell_seed"] = r.cell_seed;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;
    j["n_params"] = r.n_params;
    j["train"] = metrics_json(r.metrics[0]);
    j["validation"] = metrics_json(r.metrics[1]);
    j["test"] = metrics_json(r.metrics[2]);
    j["layers"] = r.layers;
    j["epochs_run"] = r.epochs_run;
    j["best_epoch"] = r.best_epoch;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& [l, loss] : r.layer_losses) layers.push_back({l, loss});
    j["layer_losses"] = layers;
    if (with_timing) j["seconds"] = r.seconds;
    j["error"] = r.error;
    return j;
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
    ExperimentRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.family = j.at("family").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.n_features = j.at("n_features").get<int>();
    r.split_seed = j.at("split_seed").get<std::uint64_t>();
    r.cell_seed = j.value("cell_seed", std::uint64_t{0});
    for (const auto& [k, v] : j.at("config").items()) r.config[k] = v.get<std::string>();
    r.n_params = j.value("n_params", 0LL);
    const char* names[] = {"train", "validation", "test"};
    for (std::size_t s = 0; s < 3; ++s) {
        const auto& m = j.at(names[s]);
        r.metrics[s] = {m.at("tp").get<long long>(), m.at("fp").get<long long>(), m.at("fn").get<long long>(),
                        m.at("tn").get<long long>()};
    }
    r.layers = j.value("layers", 0);
    r.epochs_run = j.value("epochs_run", 0);
    r.best_epoch = j.value("best_epoch", 0);
    if (j.contains("layer_losses"))
        for (const auto& e : j.at("layer_losses")) r.layer_losses.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
    r.seconds = j.value("seconds", 0.0);
    r.error = j.value("error", std::string{});
    return r;
}

/// Append-only line-delimited store. Timings go to a sidecar file
/// `<store>.timing` so the store itself stays reproducible.
class RecordStore {
public:
    explicit RecordStore(std::filesystem::path path) : path_(std::move(path)) {
        for (const auto& r : load(path_)) keys_.insert(r.key());
    }

    static std::vector<ExperimentRecord> load(const std::filesystem::path& path) {
        std::vector<ExperimentRecord> out;
        std::ifstream in(path);
        if (!in) return out;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (trim(line).empty()) continue;
            try {
                out.push_back(record_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw IngestionError(path.string() + ": line " + std::to_string(n) + ": " + e.what());
            }
        }
        return out;
    }

    bool contains(const std::string& key) const {
        std::lock_guard lock(mutex_);
        return keys_.count(key) != 0;
    }

    void append(const ExperimentRecord& r) {
        std::lock_guard lock(mutex_);
        {
            std::ofstream out(path_, std::ios::app);
            if (!out) throw IoError("cannot append to " + path_.string());
            out << to_json(r).dump() << '\n';
            if (!out) throw IoError("write failed for " + path_.string());
        }
        std::ofstream timing(path_.string() + ".timing", std::ios::app);
        if (timing) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
            timing << r.key() << '\t' << buf << '\n';
        }
        keys_.insert(r.key());
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::set<std::string> keys_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Selection

struct SelectionPolicy {
    double train_f1_threshold = 0.0;
    std::set<std::string> filtered_families{"qnn"};  ///< families subject to the train-F1 filter
};

/// Default train-F1 thresholds by dataset name; 0 for unknown datasets.
inline double default_threshold(std::string_view dataset) {
    if (dataset == "heart_failure") return 0.50;
    if (dataset == "diabetes") return 0.65;
    if (dataset == "prostate") return 0.75;
    return 0.0;
}

namespace detail {
// true if a should be preferred over b
inline bool better(const ExperimentRecord& a, const ExperimentRecord& b) {
    const double fa = a.at(SplitName::Validation).f1(), fb = b.at(SplitName::Validation).f1();
    if (fa != fb) return fa > fb;
    if (a.n_params != b.n_params) return a.n_params < b.n_params;
    if (a.model != b.model) return a.model < b.model;
    return a.config_string() < b.config_string();
}
}  // namespace detail

/// Drops failed records and, for filtered families, those under the train-F1
/// threshold; returns the best validation F1 (ties: fewer parameters, then
/// lexicographic model/config). Returns nullopt when nothing survives.
inline std::optional<ExperimentRecord> select_best(const std::vector<ExperimentRecord>& records,
                                                   const SelectionPolicy& policy) {
    const ExperimentRecord* best = nullptr;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        if (policy.filtered_families.count(r.family) && r.at(SplitName::Train).f1() < policy.train_f1_threshold) continue;
        if (!best || detail::better(r, *best)) best = &r;
    }
    if (!best) return std::nullopt;
    return *best;
}

// ---------------------------------------------------------------------------
// Grid configuration

struct GridOptions {
    std::set<std::string> families{"qnn", "qsvm", "classical"};
    unsigned workers = 1;
    std::uint64_t master_seed = 0;

    TrainOptions qnn_train;
    GrowthOptions qnn_growth;
    std::vector<std::vector<Axis>> qnn_sequences = all_axis_sequences();
    std::vector<Ansatz> qnn_ansatz{Ansatz::Basic, Ansatz::Strongly};
    std::vector<bool> qnn_reupload{true, false};

    std::vector<EncodingKind> qsvm_encodings{EncodingKind::Angle, EncodingKind::ZFeatureMap, EncodingKind::ZZVariantA,
                                             EncodingKind::ZZVariantB};
    std::vector<int> qsvm_reps{1, 2, 3};
    std::vector<Axis> qsvm_angle_axes{Axis::Y};

    std::vector<double> svm_C{1.0};
    double svm_gamma = 0.0;  ///< 0 = 1 / n_features
    double svm_coef0 = 0.0;
    SolverOptions solver;
    std::vector<ClassicalKernel> svm_kernels{ClassicalKernel::Linear, ClassicalKernel::Poly3, ClassicalKernel::Rbf,
                                             ClassicalKernel::Sigmoid};

    LogisticOptions logistic;
    int tree_min_leaf = 1;
    ForestOptions forest;
};

/// Documented defaults as a config document (the `run --config` format).
inline KeyValueDoc default_config() {
    KeyValueDoc d;
    d.set("seed", 0);
    d.set("workers", 1);
    d.set("families", "qnn qsvm classical");
    d.set("pipeline.scaler", "standard");
    d.set("qnn.epochs", 100);
    d.set("qnn.patience", 5);
    d.set("qnn.learning_rate", 0.01);
    d.set("qnn.beta1", 0.9);
    d.set("qnn.beta2", 0.999);
    d.set("qnn.epsilon", 1e-8);
    d.set("qnn.batch_size", 32);
    d.set("qnn.min_layers", 2);
    d.set("qnn.max_layers", 100);
    d.set("qnn.growth_patience", 0);
    d.set("qnn.sequences", "all");
    d.set("qnn.ansatz", "basic strongly");
    d.set("qnn.reupload", "true false");
    d.set("qsvm.encodings", "Angle Z ZZ ZZ-qiskit");
    d.set("qsvm.reps", "1 2 3");
    d.set("qsvm.angle_axes", "Y");
    d.set("svm.C", "1");
    d.set("svm.gamma", 0.0);
    d.set("svm.coef0", 0.0);
    d.set("svm.tol", 1e-4);
    d.set("svm.max_iter", 10'000'000LL);
    d.set("svm.kernels", "linear poly rbf sigmoid");
    d.set("logistic.learning_rate", 0.1);
    d.set("logistic.iterations", 1000);
    d.set("tree.min_leaf", 1);
    d.set("forest.n_trees", 100);
    d.set("forest.max_features", 0);
    d.set("selection.filter_families", "qnn");
    d.set("selection.threshold.heart_failure", 0.50);
    d.set("selection.threshold.diabetes", 0.65);
    d.set("selection.threshold.prostate", 0.75);
    return d;
}

inline GridOptions grid_options_from(const KeyValueDoc& doc) {
    GridOptions o;
    const KeyValueDoc def = default_config();
    auto str = [&](const char* k) { return doc.get(k, def.at(k)); };
    auto real = [&](const char* k) { return parse_real(str(k), k); };
    auto integer = [&](const char* k) { return parse_int(str(k), k); };

    o.families.clear();
    for (const auto& f : split_words(str("families"))) {
        if (f != "qnn" && f != "qsvm" && f != "classical") throw ConfigError("unknown model family '" + f + "'");
        o.families.insert(f);
    }
    o.workers = static_cast<unsigned>(std::max(1LL, integer("workers")));
    {
        const auto s = str("seed");
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("seed: expected an unsigned integer");
        o.master_seed = v;
    }
    o.qnn_train.epochs = static_cast<int>(integer("qnn.epochs"));
    o.qnn_train.patience = static_cast<int>(integer("qnn.patience"));
    o.qnn_train.learning_rate = real("qnn.learning_rate");
    o.qnn_train.beta1 = real("qnn.beta1");
    o.qnn_train.beta2 = real("qnn.beta2");
    o.qnn_train.epsilon = real("qnn.epsilon");
    o.qnn_train.batch_size = static_cast<int>(integer("qnn.batch_size"));
    o.qnn_growth.min_layers = static_cast<int>(integer("qnn.min_layers"));
    o.qnn_growth.max_layers = static_cast<int>(integer("qnn.max_layers"));
    o.qnn_growth.patience = static_cast<int>(integer("qnn.growth_patience"));
    if (str("qnn.sequences") != "all") {
        o.qnn_sequences.clear();
        for (const auto& w : split_words(str("qnn.sequences"))) {
            auto axes = parse_axes(w);
            validate_axes(axes);
            o.qnn_sequences.push_back(std::move(axes));
        }
    }
    o.qnn_ansatz.clear();
    for (const auto& w : split_words(str("qnn.ansatz"))) o.qnn_ansatz.push_back(parse_ansatz(w));
    o.qnn_reupload.clear();
    for (const auto& w : split_words(str("qnn.reupload"))) {
        if (w != "true" && w != "false") throw ConfigError("qnn.reupload: expected true/false");
        o.qnn_reupload.push_back(w == "true");
    }
    o.qsvm_encodings.clear();
    for (const auto& w : split_words(str("qsvm.encodings"))) o.qsvm_encodings.push_back(parse_encoding(w));
    o.qsvm_reps.clear();
    for (const auto& w : split_words(str("qsvm.reps"))) {
        const auto r = parse_int(w, "qsvm.reps");
        if (r < 1) throw ConfigError("qsvm.reps must be >= 1");
        o.qsvm_reps.push_back(static_cast<int>(r));
    }
    o.qsvm_angle_axes = parse_axes(str("qsvm.angle_axes"));
    validate_axes(o.qsvm_angle_axes);
    o.svm_C.clear();
    for (const auto& w : split_words(str("svm.C"))) {
        const double c = parse_real(w, "svm.C");
        if (!(c > 0)) throw ConfigError("svm.C must be positive");
        o.svm_C.push_back(c);
    }
    o.svm_gamma = real("svm.gamma");
    o.svm_coef0 = real("svm.coef0");
    o.solver.tol = real("svm.tol");
    o.solver.max_iter = integer("svm.max_iter");
    o.svm_kernels.clear();
    for (const auto& w : split_words(str("svm.kernels"))) o.svm_kernels.push_back(parse_kernel(w));
    o.logistic.learning_rate = real("logistic.learning_rate");
    o.logistic.iterations = static_cast<int>(integer("logistic.iterations"));
    o.tree_min_leaf = static_cast<int>(integer("tree.min_leaf"));
    o.forest.n_trees = static_cast<int>(integer("forest.n_trees"));
    o.forest.max_features = static_cast<int>(integer("forest.max_features"));
    return o;
}

inline SelectionPolicy selection_policy_from(const KeyValueDoc& doc, const std::string& dataset) {
    SelectionPolicy p;
    p.train_f1_threshold = doc.get_real("selection.threshold." + dataset, default_threshold(dataset));
    p.filtered_families.clear();
    for (const auto& f : split_words(doc.get("selection.filter_families", "qnn"))) p.filtered_families.insert(f);
    return p;
}

// ---------------------------------------------------------------------------
// Cells

struct GridCell {
    std::string family;
    std::string model;
    int n_features = 0;
    std::map<std::string, std::string> config;
    // family-specific settings
    QnnConfig qnn;
    KernelSpec qkernel;
    ClassicalKernelFn ckernel;
    double C = 1.0;
};

namespace detail {
inline std::string fmt_c(double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", c);
    return buf;
}
}  // namespace detail

/// Cells for one feature count, in a fixed order.
inline std::vector<GridCell> enumerate_cells(int k, const GridOptions& o) {
    std::vector<GridCell> cells;
    if (o.families.count("qnn") && k >= 2) {
        for (const auto& seq : o.qnn_sequences)
            for (bool reup : o.qnn_reupload)
                for (Ansatz a : o.qnn_ansatz) {
                    GridCell c;
                    c.family = "qnn";
                    c.model = "QNN";
                    c.n_features = k;
                    c.qnn.n_features = k;
                    c.qnn.encoding = seq;
                    c.qnn.reupload = reup;
                    c.qnn.ansatz = a;
                    c.config = {{"encoding", axes_to_string(seq)}, {"reupload", reup ? "True" : "False"},
                                {"ansatz", std::string(ansatz_name(a))}};
                    cells.push_back(std::move(c));
                }
    }
    if (o.families.count("qsvm")) {
        for (EncodingKind e : o.qsvm_encodings) {
            if ((e == EncodingKind::ZZVariantA || e == EncodingKind::ZZVariantB) && k < 2) continue;
            for (int rep : o.qsvm_reps)
                for (double C : o.svm_C) {
                    GridCell c;
                    c.family = "qsvm";
                    c.model = "QSVM";
                    c.n_features = k;
                    c.qkernel = {EncodingSpec{e, o.qsvm_angle_axes, rep}, k};
                    c.C = C;
                    c.config = {{"encoding", c.qkernel.encoding.label()}, {"rep", std::to_string(rep)}, {"C", detail::fmt_c(C)}};
                    cells.push_back(std::move(c));
                }
        }
    }
    if (o.families.count("classical")) {
        for (const char* m : {"LogisticRegression", "DecisionTree", "RandomForest"}) {
            GridCell c;
            c.family = "classical";
            c.model = m;
            c.n_features = k;
            c.config = {{"kernel", "-"}};
            cells.push_back(std::move(c));
        }
        for (ClassicalKernel kk : o.svm_kernels)
            for (double C : o.svm_C) {
                GridCell c;
                c.family = "classical";
                c.model = "svm";
                c.n_features = k;
                c.ckernel = {kk, o.svm_gamma > 0 ? o.svm_gamma : 1.0 / k, o.svm_coef0};
                c.C = C;
                c.config = {{"kernel", std::string(kernel_name(kk))}, {"C", detail::fmt_c(C)}};
                cells.push_back(std::move(c));
            }
    }
    return cells;
}

namespace detail {
template <class Predict>
std::array<Metrics, 3> evaluate_splits(const PreparedSplit& p, Predict&& predict_row) {
    std::array<Metrics, 3> out{};
    const LabeledData* sets[] = {&p.train, &p.validation, &p.test};
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<int> pred(sets[s]->size());
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = predict_row(*sets[s], i);
        out[s] = confusion(sets[s]->y, pred);
    }
    return out;
}

/// Train an SVM on a precomputed train Gram and score all three splits.
template <class Kernel>
std::array<Metrics, 3> svm_evaluate(const PreparedSplit& p, const GramMatrix& K, const Kernel& k, double C,
                                    const SolverOptions& solver, long long& n_params) {
    SvmProblem prob{&K, to_pm1(p.train.y), C, p.weights};
    const SvmModel m = solve_dual(prob, solver);
    n_params = static_cast<long long>(m.support().size());
    const GramMatrix kv = cross_gram(p.validation.X, p.train.X, k);
    const GramMatrix kt = cross_gram(p.test.X, p.train.X, k);
    std::array<Metrics, 3> out{};
    const GramMatrix* rows[] = {&K, &kv, &kt};
    const LabeledData* sets[] = {&p.train, &p.validation, &p.test};
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<int> pred(sets[s]->size());
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = predict(m, rows[s]->row(i)).label > 0 ? 1 : 0;
        out[s] = confusion(sets[s]->y, pred);
    }
    return out;
}
}  // namespace detail

/// Trains and scores one cell. Exceptions are captured into `error`.
inline ExperimentRecord run_cell(const std::string& dataset, std::uint64_t split_seed, const GridCell& cell,
                                 const PreparedSplit& p, const GridOptions& o) {
    ExperimentRecord r;
    r.dataset = dataset;
    r.family = cell.family;
    r.model = cell.model;
    r.n_features = cell.n_features;
    r.split_seed = split_seed;
    r.config = cell.config;
    r.cell_seed = derive_seed(o.master_seed, r.key());
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (cell.family == "qnn") {
            QnnConfig cfg = cell.qnn;
            cfg.seed = r.cell_seed;
            auto g = grow_layers(cfg, p.train, p.validation, p.weights, o.qnn_train, o.qnn_growth);
            const QnnModel& m = g.best.model;
            r.metrics = detail::evaluate_splits(p, [&](const LabeledData& d, std::size_t i) { return predict(m, d.row(i)); });
            r.n_params = static_cast<long long>(m.parameters().size());
            r.layers = m.config().n_layers;
            r.epochs_run = g.best.report.stopped_epoch;
            r.best_epoch = g.best.report.best_epoch;
            for (const auto& s : g.trace.steps) r.layer_losses.emplace_back(s.layers, s.val_loss);
        } else if (cell.family == "qsvm") {
            const FidelityKernel k(cell.qkernel);
            const GramMatrix K = cached_gram_matrix(p.train.X, cell.qkernel, p.split_hash);
            r.metrics = detail::svm_evaluate(p, K, k, cell.C, o.solver, r.n_params);
        } else if (cell.model == "svm") {
            const GramMatrix K = gram_matrix(p.train.X, cell.ckernel, 1, false);
            r.metrics = detail::svm_evaluate(p, K, cell.ckernel, cell.C, o.solver, r.n_params);
        } else if (cell.model == "LogisticRegression") {
            const auto m = fit_logistic(p.train, p.weights, o.logistic);
            r.n_params = static_cast<long long>(m.weights.size()) + 1;
            r.metrics = detail::evaluate_splits(p, [&](const LabeledData& d, std::size_t i) { return m.predict(d.row(i)); });
        } else if (cell.model == "DecisionTree") {
            const auto t = fit_tree(p.train, p.weights, o.tree_min_leaf);
            r.n_params = static_cast<long long>(t.nodes().size());
            r.metrics = detail::evaluate_splits(p, [&](const LabeledData& d, std::size_t i) { return t.predict(d.row(i)); });
        } else if (cell.model == "RandomForest") {
            ForestOptions fo = o.forest;
            fo.min_leaf = o.tree_min_leaf;
            fo.workers = 1;
            const auto f = fit_forest(p.train, p.weights, r.cell_seed, fo);
            r.n_params = 0;
            for (const auto& t : f.trees) r.n_params += static_cast<long long>(t.nodes().size());
            r.metrics = detail::evaluate_splits(p, [&](const LabeledData& d, std::size_t i) { return f.predict(d.row(i)); });
        } else {
            throw ConfigError("unknown cell model " + cell.model);
        }
    } catch (const std::exception& e) {
        r.error = e.what();
        r.metrics = {};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Runs every cell for each feature count in `ks`. Cells already present in
/// `store` are skipped (and not returned). Records are appended to the store
/// in enumeration order regardless of which worker finishes first.
inline std::vector<ExperimentRecord> run_grid(const std::string& dataset, const SplitBundle& bundle, std::span<const int> ks,
                                              const GridOptions& o, RecordStore* store = nullptr,
                                              const std::function<void(const ExperimentRecord&)>& progress = {}) {
    struct Job {
        GridCell cell;
        const PreparedSplit* split;
    };
    std::vector<PreparedSplit> prepared;
    prepared.reserve(ks.size());
    for (int k : ks) {
        if (k < 1 || k > bundle.max_features())
            throw UsageError("run_grid: feature count " + std::to_string(k) + " outside 1.." + std::to_string(bundle.max_features()));
        prepared.push_back(bundle.prepare(k));
    }
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (auto& c : enumerate_cells(ks[i], o)) {
            ExperimentRecord probe;
            probe.dataset = dataset;
            probe.family = c.family;
            probe.model = c.model;
            probe.n_features = c.n_features;
            probe.split_seed = bundle.seed;
            probe.config = c.config;
            if (store && store->contains(probe.key())) continue;
            jobs.push_back({std::move(c), &prepared[i]});
        }

    std::vector<std::optional<ExperimentRecord>> results(jobs.size());
    std::mutex write_mutex;
    std::size_t next_to_write = 0;
    parallel_for(jobs.size(), o.workers, [&](std::size_t j) {
        ExperimentRecord r = run_cell(dataset, bundle.seed, jobs[j].cell, *jobs[j].split, o);
        std::lock_guard lock(write_mutex);
        results[j] = std::move(r);
        while (next_to_write < results.size() && results[next_to_write]) {
            if (store) store->append(*results[next_to_write]);
            if (progress) progress(*results[next_to_write]);
            ++next_to_write;
        }
    });
    std::vector<ExperimentRecord> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {
inline std::string fmt(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed for " + p.string());
}

inline std::string pr_cells(const ExperimentRecord& r, int decimals) {
    std::string s;
    for (std::size_t k = 0; k < 3; ++k)
        s += "," + fmt(r.metrics[k].precision(), decimals) + "," + fmt(r.metrics[k].recall(), decimals);
    return s;
}

inline std::string cfg(const ExperimentRecord& r, const std::string& key) {
    auto it = r.config.find(key);
    return it == r.config.end() ? "-" : it->second;
}
}  // namespace detail

inline constexpr int kReportDecimals = 4;
inline constexpr int kTableDecimals = 2;

/// Best record per feature count for one dataset and family.
inline std::map<int, ExperimentRecord> best_per_feature_count(const std::vector<ExperimentRecord>& records,
                                                              const std::string& dataset, const std::string& family,
                                                              const SelectionPolicy& policy) {
    std::map<int, std::vector<ExperimentRecord>> by_k;
    for (const auto& r : records)
        if (r.dataset == dataset && r.family == family) by_k[r.n_features].push_back(r);
    std::map<int, ExperimentRecord> out;
    for (auto& [k, rs] : by_k)
        if (auto b = select_best(rs, policy)) out.emplace(k, *b);
    return out;
}

struct PcaCurve {
    std::string dataset;
    std::vector<double> cumulative_ratio;
};

struct ReportFiles {
    std::vector<std::filesystem::path> written;
};

/// Writes, per dataset: <ds>_qnn.csv, <ds>_qsvm.csv, <ds>_classical.csv,
/// <ds>_comparison.csv (plus .txt renderings at 2 decimals) and, when a PCA
/// curve is supplied, <ds>_pca.csv.
inline ReportFiles emit_reports(const std::vector<ExperimentRecord>& records, const std::filesystem::path& out_dir,
                                const std::function<SelectionPolicy(const std::string&)>& policy_for,
                                const std::vector<PcaCurve>& pca = {}, std::vector<std::string> datasets = {}) {
    std::filesystem::create_directories(out_dir);
    for (const auto& r : records)
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    for (const auto& c : pca)
        if (std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end()) datasets.push_back(c.dataset);
    std::sort(datasets.begin(), datasets.end());

    ReportFiles files;
    const std::string pr_header = ",Train_P,Train_R,Val_P,Val_R,Test_P,Test_R\n";
    for (const auto& ds : datasets) {
        const SelectionPolicy policy = policy_for(ds);
        const auto qnn = best_per_feature_count(records, ds, "qnn", policy);
        const auto qsvm = best_per_feature_count(records, ds, "qsvm", policy);
        const auto classical = best_per_feature_count(records, ds, "classical", policy);

        for (int decimals : {kReportDecimals, kTableDecimals}) {
            const std::string ext = decimals == kReportDecimals ? ".csv" : ".txt";
            std::string t = "Feat,Enc,Reup,Ansatz,Layers" + pr_header;
            for (const auto& [k, r] : qnn)
                t += std::to_string(k) + "," + detail::cfg(r, "encoding") + "," + detail::cfg(r, "reupload") + "," +
                     detail::cfg(r, "ansatz") + "," + std::to_string(r.layers) + detail::pr_cells(r, decimals) + "\n";
            detail::write_file(out_dir / (ds + "_qnn" + ext), t);
            files.written.push_back(out_dir / (ds + "_qnn" + ext));

            t = "Feat,Enc,Rep" + pr_header;
            for (const auto& [k, r] : qsvm)
                t += std::to_string(k) + "," + detail::cfg(r, "encoding") + "," + detail::cfg(r, "rep") +
                     detail::pr_cells(r, decimals) + "\n";
            detail::write_file(out_dir / (ds + "_qsvm" + ext), t);
            files.written.push_back(out_dir / (ds + "_qsvm" + ext));

            t = "Feat,Model,Kernel" + pr_header;
            for (const auto& [k, r] : classical)
                t += std::to_string(k) + "," + r.model + "," + detail::cfg(r, "kernel") + detail::pr_cells(r, decimals) + "\n";
            detail::write_file(out_dir / (ds + "_classical" + ext), t);
            files.written.push_back(out_dir / (ds + "_classical" + ext));

            std::set<int> ks;
            for (const auto* m : {&qnn, &qsvm, &classical})
                for (const auto& [k, r] : *m) ks.insert(k);
            t = "Feat,QNN_P,QNN_R,QSVM_P,QSVM_R,Classical_P,Classical_R\n";
            for (int k : ks) {
                t += std::to_string(k);
                for (const auto* m : {&qnn, &qsvm, &classical}) {
                    auto it = m->find(k);
                    if (it == m->end()) t += ",,";
                    else
                        t += "," + detail::fmt(it->second.at(SplitName::Test).precision(), decimals) + "," +
                             detail::fmt(it->second.at(SplitName::Test).recall(), decimals);
                }
                t += "\n";
            }
            detail::write_file(out_dir / (ds + "_comparison" + ext), t);
            files.written.push_back(out_dir / (ds + "_comparison" + ext));
        }

        for (const auto& c : pca) {
            if (c.dataset != ds) continue;
            std::string t = "component,cumulative_ratio\n";
            for (std::size_t i = 0; i < c.cumulative_ratio.size(); ++i)
                t += std::to_string(i + 1) + "," + detail::fmt(c.cumulative_ratio[i], kReportDecimals) + "\n";
            detail::write_file(out_dir / (ds + "_pca.csv"), t);
            files.written.push_back(out_dir / (ds + "_pca.csv"));
        }
    }
    return files;
}

}  // namespace qbench
