/**
 * @file qkernel.hpp
 * @brief Fidelity quantum kernel k(x, y) = |<phi(y)|phi(x)>|^2.
 *
 * Evaluated as the ground-state probability after encode(x) followed by
 * adjoint(encode)(y). Repetitions belong to the encode block; the adjoint
 * inverts the whole repeated block at once.
 */
#pragma once

#include "qbench/circuit.hpp"
#include "qbench/data.hpp"
#include "qbench/errors.hpp"
#include "qbench/parallel.hpp"
#include "qbench/seed.hpp"
#include "qbench/statevec.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace qbench {

struct KernelSpec {
    EncodingSpec encoding;
    int n_features = 1;

    std::string label() const { return encoding.label() + "/rep" + std::to_string(encoding.repetitions); }

    /// Stable identity used for cache keys.
    std::uint64_t hash() const {
        return fnv1a(label() + "/n" + std::to_string(n_features) + "/" + axes_to_string(encoding.axes));
    }
};

/// Dense kernel matrix, row-major. `row_ids` identifies the samples behind rows.
struct GramMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::size_t> row_ids;

    GramMatrix() = default;
    GramMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    bool square() const { return rows == cols; }
};

class FidelityKernel {
public:
    explicit FidelityKernel(KernelSpec spec) : spec_(std::move(spec)) {
        if (spec_.n_features < 1) throw ConfigError("kernel: n_features must be >= 1");
        encode_ = encode(spec_.encoding, spec_.n_features);
        unencode_ = adjoint(encode_);
    }

    const KernelSpec& spec() const noexcept { return spec_; }

    double operator()(std::span<const double> x, std::span<const double> y) const {
        const auto n = static_cast<std::size_t>(spec_.n_features);
        if (x.size() != n || y.size() != n)
            throw UsageError("kernel_value: expected " + std::to_string(n) + " features");
        StateVector s(spec_.n_features);
        s.apply_all(qbench::bind(encode_, x, {}));
        s.apply_all(qbench::bind(unencode_, y, {}));
        return std::clamp(ground_state_probability(s), 0.0, 1.0);
    }

    /// |<phi(y)|phi(x)>|^2 from two prepared states. Independent route used to
    /// cross-check the adjoint construction.
    double overlap(std::span<const double> x, std::span<const double> y) const {
        const StateVector a = run(encode_, x), b = run(encode_, y);
        Complex ip{0.0, 0.0};
        for (std::size_t i = 0; i < a.dim(); ++i) ip += std::conj(b[i]) * a[i];
        return std::norm(ip);
    }

private:
    KernelSpec spec_;
    CircuitSpec encode_;
    CircuitSpec unencode_;
};

inline double kernel_value(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
    return FidelityKernel(spec)(x, y);
}

/// Symmetric Gram matrix of `k` over the rows of X. Upper triangle is
/// evaluated (rows handed to workers), mirrored, and the diagonal set to 1.
template <class Kernel>
GramMatrix gram_matrix(const FeatureMatrix& X, const Kernel& k, unsigned workers = 1, bool unit_diagonal = true) {
    if (X.rows() == 0) throw UsageError("gram_matrix: empty sample set");
    const auto n = static_cast<std::size_t>(X.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    GramMatrix g(n, n);
    auto row = [&](std::size_t i) { return std::span<const double>(X.data() + i * d, d); };
    parallel_for(n, workers, [&](std::size_t i) {
        g(i, i) = unit_diagonal ? 1.0 : k(row(i), row(i));
        for (std::size_t j = i + 1; j < n; ++j) g(i, j) = k(row(i), row(j));
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g(j, i) = g(i, j);
    g.row_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.row_ids[i] = i;
    return g;
}

inline GramMatrix gram_matrix(const FeatureMatrix& X, const KernelSpec& spec, unsigned workers = 1) {
    return gram_matrix(X, FidelityKernel(spec), workers, true);
}

/// values(i, j) = k(X_test[i], X_train[j]).
template <class Kernel>
GramMatrix cross_gram(const FeatureMatrix& X_test, const FeatureMatrix& X_train, const Kernel& k, unsigned workers = 1) {
    if (X_test.rows() == 0 || X_train.rows() == 0) throw UsageError("cross_gram: empty sample set");
    if (X_test.cols() != X_train.cols()) throw UsageError("cross_gram: feature dimension mismatch");
    const auto m = static_cast<std::size_t>(X_test.rows()), n = static_cast<std::size_t>(X_train.rows());
    const auto d = static_cast<std::size_t>(X_train.cols());
    GramMatrix g(m, n);
    parallel_for(m, workers, [&](std::size_t i) {
        std::span<const double> a(X_test.data() + i * d, d);
        for (std::size_t j = 0; j < n; ++j) g(i, j) = k(a, std::span<const double>(X_train.data() + j * d, d));
    });
    g.row_ids.resize(m);
    for (std::size_t i = 0; i < m; ++i) g.row_ids[i] = i;
    return g;
}

inline GramMatrix cross_gram(const FeatureMatrix& X_test, const FeatureMatrix& X_train, const KernelSpec& spec,
                             unsigned workers = 1) {
    return cross_gram(X_test, X_train, FidelityKernel(spec), workers);
}

// ---------------------------------------------------------------------------
// On-disk cache. Layout (little-endian host order):
//   char[4] "QKGM" | u64 n | u64 spec hash | f64 lower triangle, row-major

inline constexpr char kGramMagic[4] = {'Q', 'K', 'G', 'M'};
inline constexpr const char* kCacheEnvVar = "QBENCH_CACHE_DIR";

inline void save_gram(const std::filesystem::path& path, const GramMatrix& g, std::uint64_t spec_hash) {
    if (!g.square()) throw UsageError("save_gram: matrix is not square");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const std::uint64_t n = g.rows;
    out.write(kGramMagic, 4);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&spec_hash), sizeof spec_hash);
    for (std::size_t i = 0; i < g.rows; ++i)
        out.write(reinterpret_cast<const char*>(g.values.data() + i * g.cols), static_cast<std::streamsize>((i + 1) * sizeof(double)));
    if (!out) throw IoError("write failed for " + path.string());
}

/// Returns nullopt when the file is absent, malformed, or for another spec.
inline std::optional<GramMatrix> load_gram(const std::filesystem::path& path, std::uint64_t spec_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[4];
    std::uint64_t n = 0, h = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!in || std::memcmp(magic, kGramMagic, 4) != 0 || h != spec_hash || n == 0 || n > (1u << 20)) return std::nullopt;
    GramMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) in.read(reinterpret_cast<char*>(g.values.data() + i * n), static_cast<std::streamsize>((i + 1) * sizeof(double)));
    if (!in) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g(i, j) = g(j, i);
    g.row_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.row_ids[i] = i;
    return g;
}

/// Cache directory from QBENCH_CACHE_DIR, or nullopt when unset.
inline std::optional<std::filesystem::path> cache_dir() {
    const char* v = std::getenv(kCacheEnvVar);
    if (!v || !*v) return std::nullopt;
    return std::filesystem::path(v);
}

inline std::filesystem::path gram_cache_path(const std::filesystem::path& dir, std::uint64_t split_hash, const KernelSpec& spec) {
    char name[64];
    std::snprintf(name, sizeof name, "gram_%016llx_%016llx.bin", static_cast<unsigned long long>(split_hash),
                  static_cast<unsigned long long>(spec.hash()));
    return dir / name;
}

/// Gram matrix through the cache when one is configured.
inline GramMatrix cached_gram_matrix(const FeatureMatrix& X, const KernelSpec& spec, std::uint64_t split_hash,
                                     unsigned workers = 1) {
    const auto dir = cache_dir();
    if (!dir) return gram_matrix(X, spec, workers);
    const auto path = gram_cache_path(*dir, split_hash, spec);
    if (auto g = load_gram(path, spec.hash()); g && g->rows == static_cast<std::size_t>(X.rows())) return *g;
    GramMatrix g = gram_matrix(X, spec, workers);
    std::filesystem::create_directories(*dir);
    // write-then-rename so concurrent readers never see a partial file
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    save_gram(tmp, g, spec.hash());
    std::filesystem::rename(tmp, path);
    return g;
}

}  // namespace qbench
