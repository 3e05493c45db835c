#pragma once

/// @file finite_difference.hpp
/// @brief Finite-difference weights on uniform 1D lines.
///
/// Weights come from Fornberg's recursion, so any derivative order and any
/// (even) accuracy order can be requested. Interior nodes use symmetric
/// stencils; nodes near an end use the nearest shifted window of the same
/// width plus one extra point per derivative order.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace heuler::fd {

/// Weights c[k] such that sum_k c[k] * u(x[k]) approximates u^(deriv)(x0).
inline std::vector<double> fornberg_weights(double x0, std::span<const double> x, int deriv) {
    const int n = static_cast<int>(x.size());
    if (n <= deriv) throw std::invalid_argument("stencil too short for derivative order");
    std::vector<std::vector<double>> c(n, std::vector<double>(deriv + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, deriv);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = c[i][deriv];
    return out;
}

/// Precomputed stencils for one derivative on a uniform line of `n` nodes.
class LineStencil {
public:
    LineStencil(int n, double h, int deriv, int accuracy)
        : n_(n), deriv_(deriv) {
        if (accuracy < 2 || accuracy % 2 != 0) throw std::invalid_argument("accuracy must be even and >= 2");
        if (deriv < 1 || deriv > 2) throw std::invalid_argument("only first and second derivatives supported");
        half_ = accuracy / 2;
        central_width_ = accuracy + 1;
        edge_width_ = accuracy + deriv;
        if (n < edge_width_) throw std::invalid_argument("line too short for requested stencil");
        double scale = 1.0;
        for (int d = 0; d < deriv; ++d) scale *= h;

        std::vector<double> offs(central_width_);
        for (int k = 0; k < central_width_; ++k) offs[k] = k - half_;
        central_ = fornberg_weights(0.0, offs, deriv);
        for (auto& w : central_) w /= scale;

        // Edge windows are indexed by the node's position inside the window.
        std::vector<double> eoffs(edge_width_);
        for (int k = 0; k < edge_width_; ++k) eoffs[k] = k;
        edge_.resize(edge_width_);
        for (int pos = 0; pos < edge_width_; ++pos) {
            edge_[pos] = fornberg_weights(static_cast<double>(pos), eoffs, deriv);
            for (auto& w : edge_[pos]) w /= scale;
        }
    }

    int size() const noexcept { return n_; }

    /// Derivative at node k of samples accessed through `at(index)`.
    template <class Accessor>
    double apply(int k, Accessor&& at) const {
        double acc = 0.0;
        if (k - half_ >= 0 && k + half_ <= n_ - 1) {
            for (int m = 0; m < central_width_; ++m) acc += central_[m] * at(k - half_ + m);
            return acc;
        }
        int start = k - half_ < 0 ? 0 : n_ - edge_width_;
        const auto& w = edge_[k - start];
        for (int m = 0; m < edge_width_; ++m) acc += w[m] * at(start + m);
        return acc;
    }

private:
    int n_;
    int deriv_;
    int half_ = 1;
    int central_width_ = 3;
    int edge_width_ = 3;
    std::vector<double> central_;
    std::vector<std::vector<double>> edge_;
};

/// Derivative of a uniformly sampled vector at every node.
inline std::vector<double> differentiate(std::span<const double> y, double h, int deriv, int accuracy) {
    LineStencil st(static_cast<int>(y.size()), h, deriv, accuracy);
    std::vector<double> out(y.size());
    for (int k = 0; k < static_cast<int>(y.size()); ++k) {
        out[k] = st.apply(k, [&](int m) { return y[m]; });
    }
    return out;
}

}  // namespace heuler::fd
