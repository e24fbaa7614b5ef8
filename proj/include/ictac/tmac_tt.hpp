#pragma once

// Tensor completion by parallel matrix factorization over the prefix
// unfoldings X_[k], k = 1..N-1 (TMac-TT).
//
// One iteration, given the current estimate X:
//
//   for each k (independent of each other):
//       U_k <- X_[k] V_k^T
//       V_k <- (U_k^T U_k)^+ U_k^T X_[k]
//   X <- sum_k alpha_k fold(U_k V_k)
//   X|_Omega <- observed|_Omega
//
// Iteration stops when ||X_new - X||_F / ||X||_F < tol or after max_iters.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ictac/error.hpp"
#include "ictac/linalg.hpp"
#include "ictac/tensor.hpp"

namespace ictac {

enum class InitMethod { svd, gaussian };

struct SolverConfig {
    /// Fixed TT ranks; when empty they are chosen by auto_ranks(rank_energy).
    std::optional<TTRankVector> ranks;
    double rank_energy = 0.98;
    /// alpha_k, one per unfolding, summing to 1. Empty means uniform.
    std::vector<double> weights;
    std::size_t max_iters = 500;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    double pinv_cutoff = 1e-12;
    InitMethod init = InitMethod::svd;
    /// Worker threads for the per-unfolding factor updates. Results do not
    /// depend on this value.
    std::size_t threads = 1;
};

struct SolveReport {
    std::size_t iterations_run = 0;
    double final_relative_change = 0.0;
    /// sum_k alpha_k ||U_k V_k - X_[k]||_F^2 after each iteration's factor updates.
    std::vector<double> objective_history;
    bool converged = false;
    TTRankVector ranks;
    std::vector<double> weights;
};

struct FactorPair {
    std::size_t k = 1;
    Eigen::MatrixXd u;  // m_k x r_k
    Eigen::MatrixXd v;  // r_k x n_k

    [[nodiscard]] std::size_t rank() const noexcept { return static_cast<std::size_t>(u.cols()); }
};

struct FactorUpdateEvent {
    std::size_t iteration = 0;
    std::size_t k = 1;
    double objective_before = 0.0;  // ||U V - X_[k]||_F with the incoming pair
    double objective_after = 0.0;   // same with the updated pair
};

using FactorObserver = std::function<void(const FactorUpdateEvent&)>;

struct SolveResult {
    DenseTensor x;
    SolveReport report;
};

// ---------------------------------------------------------------------------

inline std::vector<double> uniform_weights(std::size_t order) {
    if (order < 2) throw ConfigError("completion needs a tensor of order at least 2");
    return std::vector<double>(order - 1, 1.0 / static_cast<double>(order - 1));
}

/// alpha_k proportional to min(m_k, n_k): more weight on the more square unfoldings.
inline std::vector<double> balanced_weights(std::span<const std::size_t> shape) {
    if (shape.size() < 2) throw ConfigError("completion needs a tensor of order at least 2");
    const auto total = element_count(shape);
    std::vector<double> w;
    for (std::size_t k = 1; k < shape.size(); ++k) {
        const auto rows = element_count(shape.first(k));
        w.push_back(static_cast<double>(std::min(rows, total / rows)));
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& a : w) a /= sum;
    return w;
}

inline void validate_weights(std::span<const double> weights, std::size_t order) {
    if (weights.size() + 1 != order) {
        throw ConfigError("expected " + std::to_string(order - 1) + " weights, got " +
                          std::to_string(weights.size()));
    }
    double sum = 0.0;
    for (double a : weights) {
        if (!(a >= 0.0)) throw ConfigError("weights must be non-negative");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("weights must sum to 1, got " + std::to_string(sum));
    }
}

namespace detail {

using MatrixMap = Eigen::Map<const Eigen::MatrixXd>;

struct FactorUpdate {
    Eigen::MatrixXd u;
    Eigen::MatrixXd v;
    double objective_sq = 0.0;  // ||U V - X||^2 with the new pair
};

// ||U V - X||_F^2 = ||X||^2 - 2 <V, U^T X> + <U^T U, V V^T>
inline double residual_sq(double x_norm_sq, const Eigen::MatrixXd& g, const Eigen::MatrixXd& b,
                          const Eigen::MatrixXd& v) {
    const Eigen::MatrixXd vvt = v * v.transpose();
    const double r = x_norm_sq - 2.0 * (v.array() * b.array()).sum() + (g.array() * vvt.array()).sum();
    return std::max(r, 0.0);
}

inline FactorUpdate update_factor_matrices(const MatrixMap& x, const Eigen::MatrixXd& v_old,
                                           double cutoff, double x_norm_sq) {
    FactorUpdate out;
    out.u.noalias() = x * v_old.transpose();
    const Eigen::MatrixXd g = out.u.transpose() * out.u;
    Eigen::MatrixXd b(out.u.cols(), x.cols());
    b.noalias() = out.u.transpose() * x;
    out.v.noalias() = linalg::pinv_psd(g, cutoff) * b;
    out.objective_sq = residual_sq(x_norm_sq, g, b, out.v);
    return out;
}

inline double direct_residual(const MatrixMap& x, const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    return (u * v - x).norm();
}

}  // namespace detail

/// One update of (U_k, V_k) against the prefix-k unfolding of `x`.
inline FactorPair update_factors(const DenseTensor& x, FactorPair pair, double cutoff) {
    if (pair.k < 1 || pair.k >= x.order()) {
        throw ShapeError("factor pair index out of range for order " + std::to_string(x.order()));
    }
    const auto xk = prefix_matrix(x, pair.k);
    if (pair.v.cols() != xk.cols() || pair.u.rows() != xk.rows() || pair.u.cols() != pair.v.rows()) {
        throw ShapeError("factor pair dimensions do not match unfolding " +
                         std::to_string(xk.rows()) + "x" + std::to_string(xk.cols()));
    }
    auto upd = detail::update_factor_matrices(xk, pair.v, cutoff, xk.squaredNorm());
    pair.u = std::move(upd.u);
    pair.v = std::move(upd.v);
    return pair;
}

/// Per unfolding, the smallest rank whose leading squared singular values of
/// the zero-filled observations reach `energy` of the total, clamped to
/// [1, min(m_k, n_k)].
inline TTRankVector auto_ranks(const DenseTensor& observed, const ObservationMask& mask,
                               double energy) {
    if (!(energy > 0.0 && energy <= 1.0)) {
        throw ConfigError("rank energy must lie in (0, 1]");
    }
    if (mask.shape() != observed.shape()) {
        throw ShapeError("mask shape " + shape_string(mask.shape()) + " differs from tensor shape " +
                         shape_string(observed.shape()));
    }
    DenseTensor filled = observed;
    for (std::size_t i = 0; i < filled.size(); ++i) {
        if (!mask[i]) filled[i] = 0.0;
    }
    std::vector<std::size_t> ranks;
    for (std::size_t k = 1; k < filled.order(); ++k) {
        const auto xk = prefix_matrix(filled, k);
        Eigen::VectorXd s2 = linalg::squared_singular_values(xk);
        const auto cap = static_cast<std::size_t>(s2.size());
        // Gram eigenvalues carry round-off near 1e-16 * lambda_max.
        const double floor = s2.size() ? 1e-13 * s2(0) : 0.0;
        for (auto& v : s2) {
            if (v <= floor) v = 0.0;
        }
        const double total = s2.sum();
        const double target = energy * total - 1e-12 * total;
        std::size_t r = 0;
        double acc = 0.0;
        while (r < cap && (r == 0 || acc < target)) {
            acc += s2(static_cast<Eigen::Index>(r));
            ++r;
        }
        ranks.push_back(std::clamp<std::size_t>(r, 1, cap));
    }
    return TTRankVector(std::move(ranks));
}

namespace detail {

inline std::vector<FactorPair> initial_factors(const DenseTensor& x0, const TTRankVector& ranks,
                                               InitMethod init, std::uint64_t seed) {
    std::vector<FactorPair> pairs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (std::size_t k = 1; k < x0.order(); ++k) {
        const auto xk = prefix_matrix(x0, k);
        const auto r = static_cast<Eigen::Index>(ranks[k - 1]);
        FactorPair p;
        p.k = k;
        if (init == InitMethod::svd) {
            p.u = linalg::leading_left_singular_vectors(xk, r);
            p.v.noalias() = p.u.transpose() * xk;
        } else {
            p.v.resize(r, xk.cols());
            for (Eigen::Index j = 0; j < p.v.cols(); ++j) {
                for (Eigen::Index i = 0; i < r; ++i) p.v(i, j) = normal(rng);
            }
            p.u = Eigen::MatrixXd::Zero(xk.rows(), r);
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

template <typename Fn>
void for_each_unfolding(std::size_t count, std::size_t threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min(threads, count);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
}

}  // namespace detail

/// Completes `observed` on the complement of `mask`. Entries off the mask are
/// ignored (treated as zero). The returned tensor equals `observed` on the
/// mask bit for bit.
inline SolveResult solve(const DenseTensor& observed, const ObservationMask& mask,
                         const SolverConfig& cfg, const FactorObserver& observer = {}) {
    const auto& shape = observed.shape();
    if (mask.shape() != shape) {
        throw ShapeError("mask shape " + shape_string(mask.shape()) + " differs from tensor shape " +
                         shape_string(shape));
    }
    if (observed.order() < 2) {
        throw ConfigError("completion needs a tensor of order at least 2");
    }
    if (count_observed(mask) == 0) {
        throw ConfigError("observation mask is empty");
    }
    if (!(cfg.tol > 0.0) || cfg.max_iters < 1) {
        throw ConfigError("tol must be positive and max_iters at least 1");
    }
    if (!(cfg.pinv_cutoff > 0.0)) {
        throw ConfigError("pinv cutoff must be positive");
    }

    DenseTensor x = observed;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!mask[i]) x[i] = 0.0;
    }

    SolveReport report;
    report.ranks = cfg.ranks ? *cfg.ranks : auto_ranks(x, mask, cfg.rank_energy);
    report.ranks.validate_for(shape);
    report.weights = cfg.weights.empty() ? uniform_weights(x.order()) : cfg.weights;
    validate_weights(report.weights, x.order());

    if (count_observed(mask) == x.size()) {
        report.converged = true;
        return {std::move(x), std::move(report)};
    }

    const std::size_t n_unf = x.order() - 1;
    auto pairs = detail::initial_factors(x, report.ranks, cfg.init, cfg.seed);
    std::vector<double> residuals(n_unf, 0.0);
    std::vector<FactorUpdateEvent> events(n_unf);
    DenseTensor next(shape, 0.0);

    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        const double x_norm_sq = prefix_matrix(x, 1).squaredNorm();

        detail::for_each_unfolding(n_unf, cfg.threads, [&](std::size_t i) {
            auto& p = pairs[i];
            const auto xk = prefix_matrix(x, p.k);
            auto& ev = events[i];
            if (observer) {
                ev.iteration = it;
                ev.k = p.k;
                ev.objective_before = detail::direct_residual(xk, p.u, p.v);
            }
            auto upd = detail::update_factor_matrices(xk, p.v, cfg.pinv_cutoff, x_norm_sq);
            p.u = std::move(upd.u);
            p.v = std::move(upd.v);
            residuals[i] = upd.objective_sq;
            if (observer) {
                ev.objective_after = detail::direct_residual(xk, p.u, p.v);
            }
        });
        if (observer) {
            for (const auto& ev : events) observer(ev);
        }

        double objective = 0.0;
        for (std::size_t i = 0; i < n_unf; ++i) objective += report.weights[i] * residuals[i];
        report.objective_history.push_back(objective);

        // Merge: next = sum_k alpha_k U_k V_k, accumulated in place.
        auto next_data = next.data();
        std::fill(next_data.begin(), next_data.end(), 0.0);
        for (std::size_t i = 0; i < n_unf; ++i) {
            const auto& p = pairs[i];
            Eigen::Map<Eigen::MatrixXd> acc(next_data.data(), p.u.rows(), p.v.cols());
            acc.noalias() += (report.weights[i] * p.u) * p.v;
        }

        double diff_sq = 0.0;
        double base_sq = 0.0;
        const auto obs = observed.data();
        const auto cur = x.data();
        bool finite = true;
        for (std::size_t j = 0; j < next_data.size(); ++j) {
            if (mask[j]) next_data[j] = obs[j];
            const double d = next_data[j] - cur[j];
            diff_sq += d * d;
            base_sq += cur[j] * cur[j];
            finite = finite && std::isfinite(next_data[j]);
        }
        if (!finite) {
            throw NumericalError("non-finite value produced at iteration " + std::to_string(it));
        }
        std::swap(x, next);

        report.iterations_run = it;
        report.final_relative_change = base_sq > 0.0 ? std::sqrt(diff_sq / base_sq) : 0.0;
        if (report.final_relative_change < cfg.tol) {
            report.converged = true;
            break;
        }
    }
    return {std::move(x), std::move(report)};
}

}  // namespace ictac
