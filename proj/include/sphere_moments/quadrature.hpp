// SPDX-License-Identifier: Apache-2.0
//
// Tensor quadrature on the unit sphere: Gauss-Legendre in cos(theta),
// uniform trapezoid in phi.
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace sphere_moments {

struct GaussLegendreRule {
    std::vector<double> nodes;    // ascending in [-1, 1]
    std::vector<double> weights;  // sum to 2
};

namespace detail {

// P_n(x) and P_n'(x) by the three-term recurrence, |x| < 1.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline GaussLegendreRule gauss_legendre(int n) {
    if (n < 1) throw UsageError("Gauss-Legendre rule needs at least one node");
    GaussLegendreRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    if (n == 1) {
        rule.weights[0] = 2.0;
        return rule;
    }
    for (int i = 0; i < n / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = detail::legendre_with_derivative(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16 * std::abs(x)) break;
        }
        const double dp = detail::legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        const double dp = detail::legendre_with_derivative(n, 0.0).second;
        rule.weights[n / 2] = 2.0 / (dp * dp);
    }
    return rule;
}

/// Gauss-Legendre rule for E[.] over a ~ U[-1, 1] (weights sum to 1), with
/// [-1, 1] split at `breaks` so piecewise-smooth integrands stay exact.
inline GaussLegendreRule uniform_amplitude_rule(int nodes_per_piece, std::vector<double> breaks = {}) {
    if (nodes_per_piece < 1) throw UsageError("amplitude rule needs at least one node");
    std::erase_if(breaks, [](double b) { return !(b > -1.0 && b < 1.0); });
    breaks.push_back(-1.0);
    breaks.push_back(1.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const GaussLegendreRule rule = gauss_legendre(nodes_per_piece);
    GaussLegendreRule out;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double lo = breaks[k], half = 0.5 * (breaks[k + 1] - lo);
        for (int i = 0; i < nodes_per_piece; ++i) {
            out.nodes.push_back(lo + half * (rule.nodes[i] + 1.0));
            out.weights.push_back(0.5 * half * rule.weights[i]);
        }
    }
    return out;
}

/// Ring-structured quadrature grid. Node i = ring * azimuthal_count + j
/// sits at cos(theta) = cos_theta(ring), phi = 2 pi j / azimuthal_count.
class QuadratureGrid {
public:
    QuadratureGrid(int polar_count, int azimuthal_count) : azimuthal_count_(azimuthal_count) {
        if (polar_count < 1 || azimuthal_count < 1) throw UsageError("grid needs at least one node per direction");
        const GaussLegendreRule rule = gauss_legendre(polar_count);
        // descending cos(theta): ring 0 is nearest the north pole
        for (int k = polar_count - 1; k >= 0; --k) {
            cos_theta_.push_back(rule.nodes[k]);
            sin_theta_.push_back(std::sqrt((1.0 - rule.nodes[k]) * (1.0 + rule.nodes[k])));
            polar_weights_.push_back(rule.weights[k]);
        }
        const int polar_exact = 2 * polar_count - 1;
        const int azimuthal_exact = azimuthal_count - 1;
        exactness_ = std::min(polar_exact, azimuthal_exact);
    }

    int polar_count() const { return static_cast<int>(cos_theta_.size()); }
    int azimuthal_count() const { return azimuthal_count_; }
    std::size_t node_count() const { return cos_theta_.size() * static_cast<std::size_t>(azimuthal_count_); }

    /// Highest total degree of a spherical polynomial integrated exactly.
    int exactness() const { return exactness_; }
    /// Largest L whose pairwise products Y*Y' are integrated exactly.
    int band_limit() const { return exactness_ / 2; }

    double cos_theta(int ring) const { return cos_theta_[ring]; }
    double sin_theta(int ring) const { return sin_theta_[ring]; }
    double phi(int j) const { return 2.0 * std::numbers::pi * j / azimuthal_count_; }
    double ring_weight(int ring) const { return polar_weights_[ring] * 2.0 * std::numbers::pi / azimuthal_count_; }

    double weight(std::size_t i) const { return ring_weight(static_cast<int>(i / azimuthal_count_)); }

    Vec3 node(std::size_t i) const {
        const int ring = static_cast<int>(i / azimuthal_count_);
        const double p = phi(static_cast<int>(i % azimuthal_count_));
        const double s = sin_theta_[ring];
        return {s * std::cos(p), s * std::sin(p), cos_theta_[ring]};
    }

    Direction direction(std::size_t i) const {
        const int ring = static_cast<int>(i / azimuthal_count_);
        return {cos_theta_[ring], sin_theta_[ring], phi(static_cast<int>(i % azimuthal_count_))};
    }

    friend bool operator==(const QuadratureGrid& a, const QuadratureGrid& b) {
        return a.azimuthal_count_ == b.azimuthal_count_ && a.cos_theta_ == b.cos_theta_;
    }

private:
    int azimuthal_count_;
    int exactness_ = 0;
    std::vector<double> cos_theta_;
    std::vector<double> sin_theta_;
    std::vector<double> polar_weights_;
};

/// L+1 Gauss-Legendre rings times 2L+1 azimuthal nodes; exactness 2L.
inline QuadratureGrid build_grid(int band_limit) {
    if (band_limit < 0) throw UsageError("band limit must be nonnegative");
    return QuadratureGrid(band_limit + 1, 2 * band_limit + 1);
}

template <typename F>
std::vector<double> sample(const QuadratureGrid& grid, F&& f) {
    std::vector<double> out(grid.node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(grid.node(i));
    return out;
}

/// Quadrature of per-node samples; ring-by-ring, fixed order.
inline double integrate(const QuadratureGrid& grid, std::span<const double> samples) {
    if (samples.size() != grid.node_count()) throw UsageError("sample count does not match grid");
    double total = 0.0;
    const std::size_t n_phi = grid.azimuthal_count();
    for (int ring = 0; ring < grid.polar_count(); ++ring) {
        double ring_sum = 0.0;
        for (std::size_t j = 0; j < n_phi; ++j) ring_sum += samples[ring * n_phi + j];
        total += grid.ring_weight(ring) * ring_sum;
    }
    return total;
}

}  // namespace sphere_moments
