#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pam/errors.hpp"

namespace pam {

// Binary maximal-margin classifier over a precomputed kernel, trained by
// sequential minimal optimization with maximal-violating-pair selection.
// Selection scans indices in a fixed order, so training is deterministic.
//
// The kernel is any callable (a, b) -> double over *global* sample indices;
// training runs on a subset given by `indices`, and decision values can then
// be taken at any global index (test points included, since kernels here are
// precomputed over the full graph collection).
class KernelSvm {
public:
    struct Options {
        double c = 1.0;        // box constraint
        double tol = 1e-3;     // KKT violation tolerance
        int64_t max_iter = 200000;
    };

    template <typename Kernel>
    void train(const Kernel& kernel, const std::vector<int>& y, const std::vector<uint32_t>& indices,
               Options opt = {}) {
        const std::size_t n = indices.size();
        if (n == 0) throw ArgumentError("empty training set");
        if (y.size() != n) throw ArgumentError("label count does not match training set size");
        if (opt.c <= 0.0) throw ArgumentError("box constraint must be positive");
        bool pos = false, neg = false;
        for (int v : y) {
            if (v == 1) pos = true;
            else if (v == -1) neg = true;
            else throw ArgumentError("labels must be +1 or -1");
        }
        if (!pos || !neg) throw ArgumentError("training set must contain both classes");

        const double c = opt.c;
        constexpr double tau = 1e-12;
        std::vector<double> alpha(n, 0.0);
        std::vector<double> grad(n, -1.0);  // gradient of the dual at alpha = 0
        std::vector<double> diag(n);
        for (std::size_t i = 0; i < n; ++i) diag[i] = kernel(indices[i], indices[i]);

        auto q = [&](std::size_t a, std::size_t b) {
            return static_cast<double>(y[a] * y[b]) * kernel(indices[a], indices[b]);
        };

        for (int64_t iter = 0; iter < opt.max_iter; ++iter) {
            // Most violating pair: i maximizes -y*grad over samples that can
            // grow, j minimizes it over samples that can shrink.
            std::ptrdiff_t i = -1, j = -1;
            double up = -std::numeric_limits<double>::infinity();
            double low = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < n; ++t) {
                double v = -static_cast<double>(y[t]) * grad[t];
                bool can_grow = (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
                bool can_shrink = (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < c);
                if (can_grow && v > up) {
                    up = v;
                    i = static_cast<std::ptrdiff_t>(t);
                }
                if (can_shrink && v < low) {
                    low = v;
                    j = static_cast<std::ptrdiff_t>(t);
                }
            }
            if (i < 0 || j < 0 || up - low <= opt.tol) break;

            const std::size_t a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
            const double k_ab = kernel(indices[a], indices[b]);
            const double eta = std::max(diag[a] + diag[b] - 2.0 * k_ab, tau);
            // Errors relate to the gradient by E_t = y_t * grad_t.
            const double e_a = static_cast<double>(y[a]) * grad[a];
            const double e_b = static_cast<double>(y[b]) * grad[b];

            double lo_bound, hi_bound;
            if (y[a] != y[b]) {
                lo_bound = std::max(0.0, alpha[b] - alpha[a]);
                hi_bound = std::min(c, c + alpha[b] - alpha[a]);
            } else {
                lo_bound = std::max(0.0, alpha[a] + alpha[b] - c);
                hi_bound = std::min(c, alpha[a] + alpha[b]);
            }
            double b_new = alpha[b] + static_cast<double>(y[b]) * (e_a - e_b) / eta;
            b_new = std::clamp(b_new, lo_bound, hi_bound);
            const double a_new = alpha[a] + static_cast<double>(y[a] * y[b]) * (alpha[b] - b_new);

            const double delta_a = a_new - alpha[a];
            const double delta_b = b_new - alpha[b];
            if (std::abs(delta_a) < 1e-15 && std::abs(delta_b) < 1e-15) break;
            alpha[a] = a_new;
            alpha[b] = b_new;
            for (std::size_t t = 0; t < n; ++t) {
                grad[t] += q(t, a) * delta_a + q(t, b) * delta_b;
            }
        }

        // Offset: average y*grad over free vectors, else midpoint of bounds.
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const double yg = static_cast<double>(y[t]) * grad[t];
            if (alpha[t] >= c) {
                if (y[t] == 1) lb = std::max(lb, yg);
                else ub = std::min(ub, yg);
            } else if (alpha[t] <= 0.0) {
                if (y[t] == 1) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                sum_free += yg;
                ++n_free;
            }
        }
        rho_ = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

        support_.clear();
        coeff_.clear();
        for (std::size_t t = 0; t < n; ++t) {
            if (alpha[t] > 0.0) {
                support_.push_back(indices[t]);
                coeff_.push_back(alpha[t] * static_cast<double>(y[t]));
            }
        }
        trained_ = true;
    }

    // Signed decision value at a global sample index; >= 0 reads as class +1.
    template <typename Kernel>
    double decision(const Kernel& kernel, uint32_t global_index) const {
        if (!trained_) throw StateError("classifier has not been trained");
        double v = 0.0;
        for (std::size_t s = 0; s < support_.size(); ++s) {
            v += coeff_[s] * kernel(support_[s], global_index);
        }
        return v - rho_;
    }

    template <typename Kernel>
    int predict(const Kernel& kernel, uint32_t global_index) const {
        return decision(kernel, global_index) >= 0.0 ? 1 : -1;
    }

    std::size_t support_count() const { return support_.size(); }
    double rho() const { return rho_; }

private:
    bool trained_ = false;
    std::vector<uint32_t> support_;
    std::vector<double> coeff_;  // alpha_t * y_t per support vector
    double rho_ = 0.0;
};

}  // namespace pam
