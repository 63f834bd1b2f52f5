// SPDX-License-Identifier: Apache-2.0
//
// Closed-form fixtures on the randomly perturbed unit sphere
// Gamma(a) = { |x| = R }, R = 1 + eps a, a ~ U[-1, 1].
//
// Example 1 (radial source f = (4 r^2 - 1)^2 on r <= 1/2):
//
//   r <= 1/2      (8/21 r^6 - 2/5 r^4 + r^2/6 - 1/24) / alpha- + C / R
//   1/2 <= r <= R -1 / (105 alpha- r) + C / R
//   R <= r        -1 / (105 alpha+ r)
//
// with C = (alpha+ - alpha-) / (105 alpha- alpha+). The constant -1/24 makes
// the polynomial branch meet the middle branch with matching value and
// flux at r = 1/2; f = alpha Lap u in every region.
//
// Example 2: u_pm = |x - e3| (1 - |x|^2) / alpha_pm on the nominal sphere.
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"
#include "sphere_moments/layer_operators.hpp"
#include "sphere_moments/quadrature.hpp"
#include "sphere_moments/shape_derivative.hpp"
#include "sphere_moments/transforms.hpp"

#include <cmath>
#include <vector>

namespace sphere_moments {

struct Example1Config {
    TransmissionCoefficients tc{2.0, 1.0};
    double epsilon = 0.1;

    Example1Config() = default;
    Example1Config(TransmissionCoefficients t, double eps) : tc(t), epsilon(eps) { validate(); }

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw UsageError("epsilon must lie in (0, 1)");
    }
};

/// C = (alpha+ - alpha-) / (105 alpha- alpha+), coefficient of 1/R inside.
inline double example1_interface_constant(const TransmissionCoefficients& tc) {
    return (tc.alpha_plus() - tc.alpha_minus()) / (105.0 * tc.alpha_minus() * tc.alpha_plus());
}

/// Example-1 solution for an interface of radius `radius` >= 1/2.
inline double example1_solution_for_radius(const TransmissionCoefficients& tc, const Vec3& x, double radius) {
    if (radius < 0.5) throw DomainError("closed form requires the interface radius to be at least 1/2");
    const double r = norm(x);
    const double am = tc.alpha_minus(), ap = tc.alpha_plus();
    const double c = example1_interface_constant(tc) / radius;
    if (r <= 0.5) {
        const double r2 = r * r;
        const double poly = ((8.0 / 21.0 * r2 - 2.0 / 5.0) * r2 + 1.0 / 6.0) * r2 - 1.0 / 24.0;
        return poly / am + c;
    }
    if (r <= radius) return -1.0 / (105.0 * am * r) + c;
    return -1.0 / (105.0 * ap * r);
}

/// u(x, a) with R = 1 + eps a.
inline double example1_exact_solution(const Example1Config& cfg, const Vec3& x, double a) {
    if (std::abs(a) > 1.0) throw DomainError("amplitude must lie in [-1, 1]");
    return example1_solution_for_radius(cfg.tc, x, 1.0 + cfg.epsilon * a);
}

/// u0: the solution for the nominal unit sphere.
inline double example1_nominal_solution(const TransmissionCoefficients& tc, const Vec3& x) {
    return example1_solution_for_radius(tc, x, 1.0);
}

/// [[du0/dn]] = (1/alpha- - 1/alpha+) / 105 (constant), [[alpha grad_G u0]] = 0.
inline NominalTraceData example1_nominal_trace(const TransmissionCoefficients& tc, const QuadratureGrid& grid) {
    const double jump = (1.0 / tc.alpha_minus() - 1.0 / tc.alpha_plus()) / 105.0;
    return {std::vector<double>(grid.node_count(), jump), TangentField(grid)};
}

/// E[1/R] = (ln(1+eps) - ln(1-eps)) / (2 eps) for a ~ U[-1, 1].
inline double example1_mean_factor(double epsilon) {
    return (std::log1p(epsilon) - std::log1p(-epsilon)) / (2.0 * epsilon);
}

/// Exact E[u(x, .)]. Away from the band 1-eps < r < 1+eps this is
/// u0 + C (E[1/R] - 1) inside and u0 outside; inside the band the
/// expectation is split at the amplitude where the interface crosses x.
inline double example1_exact_mean(const Example1Config& cfg, const Vec3& x) {
    cfg.validate();
    const TransmissionCoefficients& tc = cfg.tc;
    const double eps = cfg.epsilon;
    const double r = norm(x);
    const double c = example1_interface_constant(tc);
    if (r >= 1.0 + eps) return example1_nominal_solution(tc, x);
    if (r <= 1.0 - eps) {
        if (1.0 - eps < 0.5) throw DomainError("closed form requires 1 - eps >= 1/2");
        return example1_nominal_solution(tc, x) + c * (example1_mean_factor(eps) - 1.0);
    }
    // x lies in D- exactly when a > a_cross
    const double a_cross = (r - 1.0) / eps;
    const double inside = (1.0 - a_cross) * (-1.0 / (105.0 * tc.alpha_minus() * r)) +
                          c / eps * std::log((1.0 + eps) / r);
    const double outside = (a_cross + 1.0) * (-1.0 / (105.0 * tc.alpha_plus() * r));
    return 0.5 * (inside + outside);
}

/// Amplitude at which the interface passes through x, if inside (-1, 1);
/// u(x, .) has a kink there.
inline std::vector<double> example1_amplitude_kinks(const Example1Config& cfg, const Vec3& x) {
    const double a_cross = (norm(x) - 1.0) / cfg.epsilon;
    if (a_cross > -1.0 && a_cross < 1.0) return {a_cross};
    return {};
}

/// Exact Cov[u(x), u(y)] by Gauss-Legendre quadrature over the amplitude
/// (split at kinks, shifted two-pass centering).
inline double example1_exact_covariance(const Example1Config& cfg, const Vec3& x, const Vec3& y,
                                        int nodes_per_piece = 64) {
    cfg.validate();
    std::vector<double> breaks = example1_amplitude_kinks(cfg, x);
    for (double b : example1_amplitude_kinks(cfg, y)) breaks.push_back(b);
    const GaussLegendreRule rule = uniform_amplitude_rule(nodes_per_piece, breaks);
    const std::vector<double>& a = rule.nodes;
    const std::vector<double>& w = rule.weights;
    // shift by the first sample so amplitude-independent solutions give exactly 0
    std::vector<double> ux(a.size()), uy(a.size());
    const double sx = example1_exact_solution(cfg, x, a[0]), sy = example1_exact_solution(cfg, y, a[0]);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ux[i] = example1_exact_solution(cfg, x, a[i]) - sx;
        uy[i] = example1_exact_solution(cfg, y, a[i]) - sy;
        mx += w[i] * ux[i];
        my += w[i] * uy[i];
    }
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cov += w[i] * (ux[i] - mx) * (uy[i] - my);
    return cov;
}

/// Leading-order covariance for two interior points:
/// (1/3) ([[alpha]] / (105 alpha- alpha+))^2, times eps^2 for Cov[u].
inline double example1_leading_covariance(const TransmissionCoefficients& tc) {
    const double q = tc.jump() / (105.0 * tc.alpha_minus() * tc.alpha_plus());
    return q * q / 3.0;
}

// ---------------------------------------------------------------------------

inline double distance_to_north_pole(const Vec3& x) { return std::hypot(x[0], x[1], x[2] - 1.0); }

/// Example-2 source f = alpha Lap u; singular at e3.
inline double example2_source(const Vec3& x) {
    const double d = distance_to_north_pole(x);
    if (d == 0.0) throw DomainError("example-2 source is singular at (0, 0, 1)");
    const double r2 = dot(x, x);
    return 2.0 / d * (1.0 - r2) - 4.0 / d * (r2 - x[2]) - 6.0 * d;
}

/// u_pm(x) = |x - e3| (1 - |x|^2) / alpha_pm.
inline double example2_solution(const TransmissionCoefficients& tc, const Vec3& x) {
    const double alpha = norm(x) < 1.0 ? tc.alpha_minus() : tc.alpha_plus();
    return distance_to_north_pole(x) * (1.0 - dot(x, x)) / alpha;
}

/// On the sphere u0 = 0, so [[alpha grad_G u0]] = 0 and
/// [[du0/dn]] = -2 (1/alpha- - 1/alpha+) |x - e3|.
inline NominalTraceData example2_nominal_trace(const TransmissionCoefficients& tc, const QuadratureGrid& grid) {
    const double scale = -2.0 * (1.0 / tc.alpha_minus() - 1.0 / tc.alpha_plus());
    std::vector<double> jn(grid.node_count());
    for (std::size_t i = 0; i < jn.size(); ++i) jn[i] = scale * distance_to_north_pole(grid.node(i));
    return {std::move(jn), TangentField(grid)};
}

}  // namespace sphere_moments
