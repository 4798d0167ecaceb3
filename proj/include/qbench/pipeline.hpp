/**
 * @file pipeline.hpp
 * @brief Dataset ingestion and preprocessing.
 *
 * Order: stratified split -> scale (fit on train) -> PCA (fit on train) ->
 * per-component min-max to [-1, 1] (fit on train, val/test clipped).
 */
#pragma once

#include "qbench/data.hpp"
#include "qbench/errors.hpp"
#include "qbench/kv.hpp"
#include "qbench/seed.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace qbench {

struct Dataset {
    std::string name;
    LabeledData data;
    std::vector<std::string> feature_names;
    std::string label_column;
    std::string positive_value;

    std::size_t size() const noexcept { return data.size(); }
    double positive_share() const {
        return data.size() ? static_cast<double>(data.count(1)) / static_cast<double>(data.size()) : 0.0;
    }
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}
}  // namespace detail

/// Reads a headered CSV. Every column other than the label and `drop` is a
/// numeric feature; the label becomes 1 where the cell equals `positive_value`.
inline Dataset load_csv(const std::string& path, const std::string& label_column, const std::string& positive_value,
                        const std::vector<std::string>& drop = {}) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
    if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF && line.size() >= 3) line = line.substr(3);  // BOM
    const auto header = detail::split_csv_line(line);

    int label_col = -1;
    std::vector<int> feature_cols;
    Dataset ds;
    ds.label_column = label_column;
    ds.positive_value = positive_value;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == label_column) label_col = static_cast<int>(c);
        else if (std::find(drop.begin(), drop.end(), header[c]) == drop.end()) {
            feature_cols.push_back(static_cast<int>(c));
            ds.feature_names.push_back(header[c]);
        }
    }
    if (label_col < 0) throw IngestionError(path + ": label column '" + label_column + "' not found");
    if (feature_cols.empty()) throw IngestionError(path + ": no feature columns");

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw IngestionError(path + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                                 " cells, header has " + std::to_string(header.size()));
        const auto& lab = cells[static_cast<std::size_t>(label_col)];
        if (lab.empty()) throw IngestionError(path + ": row " + std::to_string(row_no) + ": missing label");
        std::vector<double> r;
        r.reserve(feature_cols.size());
        for (int c : feature_cols) {
            const auto& cell = cells[static_cast<std::size_t>(c)];
            try {
                r.push_back(parse_real(cell));
            } catch (const IngestionError&) {
                throw IngestionError(path + ": row " + std::to_string(row_no) + ", column '" + header[static_cast<std::size_t>(c)] +
                                     "': cannot parse '" + cell + "'");
            }
        }
        rows.push_back(std::move(r));
        ds.data.y.push_back(lab == positive_value ? 1 : 0);
    }
    ds.data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) ds.data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return ds;
}

// ---------------------------------------------------------------------------
// Scaling

enum class ScalerKind { Standard, MinMax };

/// Per-feature affine map x -> (x - shift) / scale fitted on train.
/// Standard: shift = mean, scale = population std (1 for constant columns).
/// MinMax:   shift = min, scale = max - min (1 for constant columns).
struct Scaler {
    ScalerKind kind = ScalerKind::Standard;
    std::vector<double> shift;
    std::vector<double> scale;

    static Scaler fit(const FeatureMatrix& X, ScalerKind kind = ScalerKind::Standard) {
        if (X.rows() == 0) throw UsageError("scaler: empty training set");
        Scaler s;
        s.kind = kind;
        const auto n = static_cast<double>(X.rows());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const auto col = X.col(j);
            if (kind == ScalerKind::Standard) {
                const double mean = col.sum() / n;
                const double var = (col.array() - mean).square().sum() / n;
                const double sd = std::sqrt(var);
                s.shift.push_back(mean);
                s.scale.push_back(sd > 0.0 ? sd : 1.0);
            } else {
                const double lo = col.minCoeff(), hi = col.maxCoeff();
                s.shift.push_back(lo);
                s.scale.push_back(hi > lo ? hi - lo : 1.0);
            }
        }
        return s;
    }

    FeatureMatrix apply(const FeatureMatrix& X) const {
        if (static_cast<std::size_t>(X.cols()) != shift.size()) throw UsageError("scaler: feature count mismatch");
        FeatureMatrix out(X.rows(), X.cols());
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            for (Eigen::Index j = 0; j < X.cols(); ++j)
                out(i, j) = (X(i, j) - shift[static_cast<std::size_t>(j)]) / scale[static_cast<std::size_t>(j)];
        return out;
    }
};

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
    std::vector<double> mean;
    FeatureMatrix components;  ///< one orthonormal component per row, by decreasing variance
    std::vector<double> eigenvalues;
    std::vector<double> cumulative_ratio;

    int n_components() const noexcept { return static_cast<int>(components.rows()); }

    /// Fraction of variance captured by the first k components.
    double ratio(int k) const {
        if (k < 1 || k > n_components()) throw UsageError("pca ratio: k out of range");
        return cumulative_ratio[static_cast<std::size_t>(k - 1)];
    }
};

/// Eigendecomposition of the sample covariance (n - 1 denominator).
/// Component signs are fixed so the largest-magnitude loading is positive.
inline PcaModel pca_fit(const FeatureMatrix& X) {
    if (X.rows() < 2) throw UsageError("pca_fit: need at least two samples");
    const Eigen::Index d = X.cols();
    PcaModel m;
    const Eigen::RowVectorXd mu = X.colwise().mean();
    m.mean.assign(mu.data(), mu.data() + d);
    const Eigen::MatrixXd centered = X.rowwise() - mu;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(X.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw TrainingError("pca_fit: eigendecomposition failed");

    m.components.resize(d, d);
    double total = 0.0;
    for (Eigen::Index r = 0; r < d; ++r) {
        const Eigen::Index src = d - 1 - r;  // Eigen sorts ascending
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        m.components.row(r) = v.transpose();
        const double lam = std::max(0.0, es.eigenvalues()(src));
        m.eigenvalues.push_back(lam);
        total += lam;
    }
    double run = 0.0;
    for (double lam : m.eigenvalues) {
        run += lam;
        m.cumulative_ratio.push_back(total > 0.0 ? run / total : 1.0);
    }
    if (!m.cumulative_ratio.empty()) m.cumulative_ratio.back() = 1.0;
    return m;
}

inline FeatureMatrix pca_transform(const PcaModel& m, const FeatureMatrix& X, int k) {
    if (k < 1) throw UsageError("pca_transform: k must be >= 1");
    if (k > m.n_components()) throw UsageError("pca_transform: k exceeds the number of components");
    if (X.cols() != m.components.cols()) throw UsageError("pca_transform: feature count mismatch");
    const Eigen::Map<const Eigen::RowVectorXd> mu(m.mean.data(), static_cast<Eigen::Index>(m.mean.size()));
    FeatureMatrix out = (X.rowwise() - mu) * m.components.topRows(k).transpose();
    return out;
}

// ---------------------------------------------------------------------------
// Min-max to [-1, 1]

struct UnitIntervalScaler {
    std::vector<double> lo;
    std::vector<double> hi;

    static UnitIntervalScaler fit(const FeatureMatrix& X) {
        if (X.rows() == 0) throw UsageError("minmax: empty training set");
        UnitIntervalScaler s;
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            s.lo.push_back(X.col(j).minCoeff());
            s.hi.push_back(X.col(j).maxCoeff());
        }
        return s;
    }

    /// Train min -> -1, train max -> +1, clipped; a zero-width range maps to 0.
    FeatureMatrix apply(const FeatureMatrix& X) const {
        if (static_cast<std::size_t>(X.cols()) > lo.size()) throw UsageError("minmax: feature count mismatch");
        FeatureMatrix out(X.rows(), X.cols());
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            for (Eigen::Index j = 0; j < X.cols(); ++j) {
                const double a = lo[static_cast<std::size_t>(j)], b = hi[static_cast<std::size_t>(j)];
                out(i, j) = b > a ? std::clamp(2.0 * (X(i, j) - a) / (b - a) - 1.0, -1.0, 1.0) : 0.0;
            }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Splits and weights

struct SplitIndices {
    std::vector<std::size_t> train, validation, test;
};

/// Per-class shuffle, then round(test_fraction * n_c) to test and
/// round(val_fraction * remainder_c) to validation. Indices are sorted.
inline SplitIndices stratified_split(std::span<const int> labels, std::uint64_t seed, double test_fraction = 0.2,
                                     double val_fraction = 0.2) {
    SplitIndices s;
    std::mt19937_64 rng(seed);
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) members.push_back(i);
        if (members.size() < 3)
            throw UsageError("stratified_split: class " + std::to_string(cls) + " has fewer than 3 samples");
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(members.size())));
        const auto rest = members.size() - n_test;
        const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(rest)));
        s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        s.validation.insert(s.validation.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test),
                            members.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
        s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), members.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

/// Each class is weighted by the other class's share of the training labels.
inline ClassWeights class_weights(std::span<const int> train_labels) {
    std::array<double, 2> count{0.0, 0.0};
    for (int v : train_labels) {
        if (v != 0 && v != 1) throw UsageError("class_weights: labels must be 0 or 1");
        count[static_cast<std::size_t>(v)] += 1.0;
    }
    if (count[0] == 0.0 || count[1] == 0.0) throw UsageError("class_weights: both classes must be present");
    const double n = count[0] + count[1];
    return {count[1] / n, count[0] / n};
}

// ---------------------------------------------------------------------------
// Fitted chain

struct Preprocessor {
    Scaler scaler;
    PcaModel pca;
    UnitIntervalScaler minmax;  ///< over all PCA components of the train split

    static Preprocessor fit(const FeatureMatrix& train, ScalerKind kind = ScalerKind::Standard) {
        Preprocessor p;
        p.scaler = Scaler::fit(train, kind);
        const FeatureMatrix z = p.scaler.apply(train);
        p.pca = pca_fit(z);
        p.minmax = UnitIntervalScaler::fit(pca_transform(p.pca, z, p.pca.n_components()));
        return p;
    }

    FeatureMatrix transform(const FeatureMatrix& X, int k) const {
        return minmax.apply(pca_transform(pca, scaler.apply(X), k));
    }
};

struct PreparedSplit {
    int n_features = 0;
    LabeledData train, validation, test;
    ClassWeights weights{0.5, 0.5};
    std::uint64_t split_hash = 0;  ///< identifies (membership, k); used for kernel caching
};

/// A seeded split of a dataset plus the transforms fitted on its train part.
struct SplitBundle {
    std::uint64_t seed = 0;
    SplitIndices indices;
    Preprocessor preprocessor;
    LabeledData raw_train, raw_validation, raw_test;

    static SplitBundle make(const Dataset& ds, std::uint64_t seed, ScalerKind kind = ScalerKind::Standard) {
        return make(ds, seed, stratified_split(ds.data.y, seed), kind);
    }

    static SplitBundle make(const Dataset& ds, std::uint64_t seed, SplitIndices idx, ScalerKind kind = ScalerKind::Standard) {
        SplitBundle b;
        b.seed = seed;
        b.indices = std::move(idx);
        b.raw_train = subset(ds.data, b.indices.train);
        b.raw_validation = subset(ds.data, b.indices.validation);
        b.raw_test = subset(ds.data, b.indices.test);
        b.preprocessor = Preprocessor::fit(b.raw_train.X, kind);
        return b;
    }

    int max_features() const noexcept { return preprocessor.pca.n_components(); }

    PreparedSplit prepare(int k) const {
        PreparedSplit p;
        p.n_features = k;
        p.train = {preprocessor.transform(raw_train.X, k), raw_train.y};
        p.validation = {preprocessor.transform(raw_validation.X, k), raw_validation.y};
        p.test = {preprocessor.transform(raw_test.X, k), raw_test.y};
        p.weights = class_weights(raw_train.y);
        // content hash: identical train matrices share cached Gram matrices
        const auto* bytes = reinterpret_cast<const char*>(p.train.X.data());
        p.split_hash = fnv1a(std::string_view(bytes, static_cast<std::size_t>(p.train.X.size()) * sizeof(double)));
        return p;
    }
};

// ---------------------------------------------------------------------------
// Split manifest

inline KeyValueDoc to_manifest(const Dataset& ds, const std::string& csv_path, const std::vector<std::string>& drop,
                               const SplitBundle& b) {
    KeyValueDoc doc;
    doc.set("dataset.name", ds.name);
    doc.set("dataset.path", csv_path);
    doc.set("dataset.label", ds.label_column);
    doc.set("dataset.positive", ds.positive_value);
    std::string drops;
    for (const auto& d : drop) drops += (drops.empty() ? "" : " ") + d;
    doc.set("dataset.drop", drops);
    doc.set("dataset.rows", ds.size());
    doc.set("dataset.features", ds.feature_names.size());
    doc.set("dataset.positive_share", ds.positive_share());
    doc.set("split.seed", static_cast<unsigned long long>(b.seed));
    doc.set_list<std::size_t>("split.train", b.indices.train);
    doc.set_list<std::size_t>("split.validation", b.indices.validation);
    doc.set_list<std::size_t>("split.test", b.indices.test);
    const auto& p = b.preprocessor;
    doc.set("scaler.kind", p.scaler.kind == ScalerKind::Standard ? "standard" : "minmax");
    doc.set_list<double>("scaler.shift", p.scaler.shift);
    doc.set_list<double>("scaler.scale", p.scaler.scale);
    doc.set_list<double>("pca.mean", p.pca.mean);
    doc.set_list<double>("pca.eigenvalues", p.pca.eigenvalues);
    doc.set_list<double>("pca.cumulative_ratio", p.pca.cumulative_ratio);
    for (int r = 0; r < p.pca.n_components(); ++r) {
        std::vector<double> row(p.pca.components.row(r).data(), p.pca.components.row(r).data() + p.pca.components.cols());
        doc.set_list<double>("pca.component." + std::to_string(r), row);
    }
    doc.set_list<double>("minmax.lo", p.minmax.lo);
    doc.set_list<double>("minmax.hi", p.minmax.hi);
    return doc;
}

inline std::vector<std::size_t> manifest_indices(const KeyValueDoc& doc, std::string_view key) {
    std::vector<std::size_t> out;
    for (long long v : doc.get_ints(key)) {
        if (v < 0) throw IngestionError("manifest: negative index in " + std::string(key));
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

struct LoadedManifest {
    Dataset dataset;
    SplitBundle bundle;
    KeyValueDoc doc;
};

/// Re-reads the CSV named in a manifest and rebuilds the recorded split.
/// Fails if the data no longer matches the recorded row count.
inline LoadedManifest load_manifest(const KeyValueDoc& doc) {
    LoadedManifest m;
    m.doc = doc;
    m.dataset = load_csv(doc.at("dataset.path"), doc.at("dataset.label"), doc.at("dataset.positive"),
                         split_words(doc.get("dataset.drop", "")));
    m.dataset.name = doc.get("dataset.name", "dataset");
    if (static_cast<long long>(m.dataset.size()) != doc.get_int("dataset.rows"))
        throw IngestionError("manifest: dataset row count changed");
    SplitIndices idx{manifest_indices(doc, "split.train"), manifest_indices(doc, "split.validation"),
                     manifest_indices(doc, "split.test")};
    for (auto* v : {&idx.train, &idx.validation, &idx.test})
        for (std::size_t i : *v)
            if (i >= m.dataset.size()) throw IngestionError("manifest: split index out of range");
    const auto kind = doc.get("scaler.kind", "standard") == "minmax" ? ScalerKind::MinMax : ScalerKind::Standard;
    m.bundle = SplitBundle::make(m.dataset, doc.get_u64("split.seed"), std::move(idx), kind);
    return m;
}

}  // namespace qbench
