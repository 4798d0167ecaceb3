/**
 * @file svm.hpp
 * @brief Weighted soft-margin SVM on a precomputed kernel.
 *
 * Dual:  min 1/2 a'Qa - e'a   s.t.  y'a = 0,  0 <= a_i <= C_i,
 * with Q_ij = y_i y_j K_ij and C_i = C * w[class of i]. Solved by SMO with
 * second-order working-set selection. Shared by the quantum-kernel and the
 * classical-kernel SVMs.
 */
#pragma once

#include "qbench/data.hpp"
#include "qbench/errors.hpp"
#include "qbench/kv.hpp"
#include "qbench/qkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qbench {

enum class ClassicalKernel { Linear, Poly3, Rbf, Sigmoid };

inline std::string_view kernel_name(ClassicalKernel k) {
    switch (k) {
        case ClassicalKernel::Linear: return "linear";
        case ClassicalKernel::Poly3: return "poly";
        case ClassicalKernel::Rbf: return "rbf";
        case ClassicalKernel::Sigmoid: return "sigmoid";
    }
    return "?";
}

inline ClassicalKernel parse_kernel(std::string_view s) {
    if (s == "linear") return ClassicalKernel::Linear;
    if (s == "poly" || s == "poly3") return ClassicalKernel::Poly3;
    if (s == "rbf") return ClassicalKernel::Rbf;
    if (s == "sigmoid") return ClassicalKernel::Sigmoid;
    throw ConfigError("unknown kernel '" + std::string(s) + "'");
}

inline double classical_kernel(ClassicalKernel kind, std::span<const double> x, std::span<const double> y, double gamma,
                               double coef0 = 0.0) {
    if (x.size() != y.size()) throw UsageError("classical_kernel: dimension mismatch");
    if (!(gamma > 0.0)) throw ConfigError("classical_kernel: gamma must be positive");
    double dot = 0.0, dist2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        dist2 += (x[i] - y[i]) * (x[i] - y[i]);
    }
    switch (kind) {
        case ClassicalKernel::Linear: return dot;
        case ClassicalKernel::Poly3: {
            const double b = gamma * dot + coef0;
            return b * b * b;
        }
        case ClassicalKernel::Rbf: return std::exp(-gamma * dist2);
        case ClassicalKernel::Sigmoid: return std::tanh(gamma * dot + coef0);
    }
    return 0.0;
}

/// Kernel functor over spans, so it plugs into gram_matrix / cross_gram.
struct ClassicalKernelFn {
    ClassicalKernel kind = ClassicalKernel::Rbf;
    double gamma = 1.0;
    double coef0 = 0.0;

    double operator()(std::span<const double> x, std::span<const double> y) const {
        return classical_kernel(kind, x, y, gamma, coef0);
    }
};

/// Labels are +-1.
struct SvmProblem {
    const GramMatrix* gram = nullptr;
    std::vector<int> labels;
    double C = 1.0;
    ClassWeights class_weights{1.0, 1.0};

    /// C_i = C * w[class of i]; label +1 is class 1.
    std::vector<double> box() const {
        std::vector<double> out(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) out[i] = C * class_weights[labels[i] > 0 ? 1 : 0];
        return out;
    }
};

inline std::vector<int> to_pm1(std::span<const int> labels01) {
    std::vector<int> out(labels01.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = labels01[i] == 1 ? 1 : -1;
    return out;
}

struct SolverOptions {
    double tol = 1e-4;
    long long max_iter = 10'000'000;
};

struct SvmModel {
    std::vector<double> alphas;
    std::vector<int> labels;  ///< +-1, training order
    std::vector<double> box;  ///< C_i
    double bias = 0.0;
    double objective = 0.0;
    long long iterations = 0;
    bool converged = true;

    std::vector<std::size_t> support() const {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < alphas.size(); ++i)
            if (alphas[i] > 0.0) s.push_back(i);
        return s;
    }
};

/// 1/2 a'Qa - sum a.
inline double dual_objective(const GramMatrix& K, std::span<const int> y, std::span<const double> a) {
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        lin += a[i];
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < a.size(); ++j) quad += a[i] * a[j] * y[i] * y[j] * K(i, j);
    }
    return 0.5 * quad - lin;
}

inline SvmModel solve_dual(const GramMatrix& K, std::span<const int> y, std::span<const double> C,
                           const SolverOptions& opt = {}) {
    const std::size_t n = y.size();
    if (!K.square() || K.rows != n || C.size() != n) throw UsageError("solve_dual: size mismatch");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v != 1 && v != -1) throw UsageError("solve_dual: labels must be +-1");
        (v > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw UsageError("solve_dual: both classes are required");
    for (double c : C)
        if (!(c > 0.0)) throw ConfigError("solve_dual: box bounds must be positive");

    constexpr double tau = 1e-12;
    auto Q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * K(i, j); };

    std::vector<double> a(n, 0.0), G(n, -1.0);
    auto upper = [&](std::size_t t) { return a[t] >= C[t]; };
    auto lower = [&](std::size_t t) { return a[t] <= 0.0; };
    auto in_up = [&](std::size_t t) { return y[t] > 0 ? !upper(t) : !lower(t); };
    auto in_low = [&](std::size_t t) { return y[t] > 0 ? !lower(t) : !upper(t); };

    SvmModel model;
    long long iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        // i: maximal violating index in I_up
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t)
            if (in_up(t) && -y[t] * G[t] >= gmax) {
                gmax = -y[t] * G[t];
                i = t;
            }
        // j: second-order choice in I_low
        double gmin = std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y[t] * G[t];
            gmin = std::min(gmin, v);
            if (i == n) continue;
            const double b = gmax - v;
            if (b > 0.0) {
                double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
                if (quad <= 0.0) quad = tau;
                const double score = -(b * b) / quad;
                if (score <= best) {
                    best = score;
                    j = t;
                }
            }
        }
        if (i == n || j == n || gmax - gmin < opt.tol) break;

        const double ai_old = a[i], aj_old = a[j];
        const double Ci = C[i], Cj = C[j];
        if (y[i] != y[j]) {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0.0) {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
            }
            if (diff > Ci - Cj) {
                if (a[i] > Ci) { a[i] = Ci; a[j] = Ci - diff; }
            } else {
                if (a[j] > Cj) { a[j] = Cj; a[i] = Cj + diff; }
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > Ci) {
                if (a[i] > Ci) { a[i] = Ci; a[j] = sum - Ci; }
            } else {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
            }
            if (sum > Cj) {
                if (a[j] > Cj) { a[j] = Cj; a[i] = sum - Cj; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
            }
        }
        const double di = a[i] - ai_old, dj = a[j] - aj_old;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }
    model.iterations = iter;
    model.converged = iter < opt.max_iter;

    // Bias: mean over free vectors, otherwise midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

    model.alphas = std::move(a);
    model.labels.assign(y.begin(), y.end());
    model.box.assign(C.begin(), C.end());
    model.bias = -rho;
    model.objective = dual_objective(K, y, model.alphas);
    return model;
}

inline SvmModel solve_dual(const SvmProblem& p, const SolverOptions& opt = {}) {
    if (!p.gram) throw UsageError("solve_dual: no Gram matrix");
    if (!(p.C > 0.0)) throw ConfigError("solve_dual: C must be positive");
    const auto box = p.box();
    return solve_dual(*p.gram, p.labels, box, opt);
}

struct SvmPrediction {
    int label = 1;  ///< +-1
    double decision = 0.0;
};

/// `kernel_row[j]` = k(x, x_j) over all training samples. Zero decision -> +1.
inline SvmPrediction predict(const SvmModel& m, std::span<const double> kernel_row) {
    if (kernel_row.size() != m.alphas.size()) throw UsageError("svm predict: kernel row length mismatch");
    double f = m.bias;
    for (std::size_t i = 0; i < m.alphas.size(); ++i)
        if (m.alphas[i] != 0.0) f += m.alphas[i] * m.labels[i] * kernel_row[i];
    return {f >= 0.0 ? 1 : -1, f};
}

/// Largest KKT violation of the trained model against its own bias.
inline double kkt_violation(const SvmModel& m, const GramMatrix& K) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.alphas.size(); ++i) {
        const double margin = m.labels[i] * predict(m, K.row(i)).decision;
        double v = 0.0;
        if (m.alphas[i] <= 0.0) v = std::max(0.0, 1.0 - margin);
        else if (m.alphas[i] >= m.box[i]) v = std::max(0.0, margin - 1.0);
        else v = std::abs(margin - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

inline KeyValueDoc to_checkpoint(const SvmModel& m, const KeyValueDoc& kernel) {
    KeyValueDoc doc;
    doc.set("model", "svm");
    for (const auto& [k, v] : kernel.entries()) doc.set("kernel." + k, v);
    doc.set("bias", m.bias);
    const auto sv = m.support();
    std::vector<double> a;
    std::vector<int> y;
    for (std::size_t i : sv) {
        a.push_back(m.alphas[i]);
        y.push_back(m.labels[i]);
    }
    doc.set_list<std::size_t>("support", sv);
    doc.set_list<double>("alphas", a);
    doc.set_list<int>("labels", y);
    return doc;
}

}  // namespace qbench
