// SPDX-License-Identifier: Apache-2.0
//
// Linearized transmission data and boundary traces of the shape derivative
// u' for a normal perturbation x + eps kappa(x) n(x) of the unit sphere.
//
//   g_D = -[[du0/dn]] kappa
//   g_N = div_G (kappa [[alpha grad_G u0]])
//   [[alpha S]] u'_+ = g_N - alpha- S- g_D,   u'_- = u'_+ + g_D
//
// Jumps are [[v]] = v_- - v_+, the normal points into D+.
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"
#include "sphere_moments/layer_operators.hpp"
#include "sphere_moments/quadrature.hpp"
#include "sphere_moments/transforms.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace sphere_moments {

/// Jumps of the nominal solution across the unit sphere, sampled on a grid.
class NominalTraceData {
public:
    NominalTraceData(std::vector<double> jump_normal_derivative, TangentField jump_tangential_gradient)
        : jump_normal_derivative_(std::move(jump_normal_derivative)),
          jump_tangential_gradient_(std::move(jump_tangential_gradient)) {
        if (jump_normal_derivative_.size() != grid().node_count()) {
            throw UsageError("normal-derivative jump and tangential jump use different grids");
        }
    }

    /// From band-limited spectral data sampled on `grid`. The tangential
    /// jump is the surface gradient of [[alpha u0]] = alpha- u0_- - alpha+ u0_+.
    static NominalTraceData from_spectral(const SpectralField& jump_normal_derivative,
                                          const SpectralField& alpha_weighted_value_jump,
                                          const QuadratureGrid& grid) {
        return {synthesize_on_grid(jump_normal_derivative, grid), surface_gradient(alpha_weighted_value_jump, grid)};
    }

    const QuadratureGrid& grid() const { return jump_tangential_gradient_.grid; }
    std::span<const double> jump_normal_derivative() const { return jump_normal_derivative_; }
    const TangentField& jump_tangential_gradient() const { return jump_tangential_gradient_; }

private:
    std::vector<double> jump_normal_derivative_;
    TangentField jump_tangential_gradient_;
};

/// A field re-projected to band limit L after a pointwise product, with
/// the fraction of energy that fell above L (resolved by the grid).
struct ProjectedField {
    static constexpr double kAliasingThreshold = 1e-8;

    SpectralField field;
    double discarded_energy_fraction = 0.0;

    bool aliasing_warning() const { return discarded_energy_fraction > kAliasingThreshold; }
    std::string diagnostic() const {
        return "projection discards " + std::to_string(discarded_energy_fraction) +
               " of the product energy above the band limit " + std::to_string(field.band_limit());
    }
};

namespace detail {

inline ProjectedField project(const SpectralField& resolved, int band_limit) {
    ProjectedField out{resolved.with_band_limit(band_limit), 0.0};
    const double total = sobolev_norm(resolved, 0.0);
    if (total > 0.0) {
        const double kept = sobolev_norm(out.field, 0.0);
        out.discarded_energy_fraction = std::max(0.0, (total * total - kept * kept) / (total * total));
    }
    return out;
}

inline void check_kappa(const SpectralField& kappa, const QuadratureGrid& grid, int band_limit) {
    if (kappa.band_limit() > band_limit) throw UsageError("kappa exceeds the requested band limit");
    if (grid.band_limit() < band_limit) throw UsageError("nominal grid cannot resolve the requested band limit");
}

}  // namespace detail

/// g_D = -[[du0/dn]] kappa, formed on the nominal grid and projected to L.
inline ProjectedField build_dirichlet_jump(const NominalTraceData& nominal, const SpectralField& kappa, int band_limit) {
    const QuadratureGrid& grid = nominal.grid();
    detail::check_kappa(kappa, grid, band_limit);
    std::vector<double> product = synthesize_on_grid(kappa, grid);
    const auto jn = nominal.jump_normal_derivative();
    for (std::size_t i = 0; i < product.size(); ++i) product[i] *= -jn[i];
    return detail::project(analyze(product, grid, grid.band_limit()), band_limit);
}

/// g_N = div_G(kappa [[alpha grad_G u0]]), weak divergence projected to L.
inline ProjectedField build_neumann_jump(const NominalTraceData& nominal, const SpectralField& kappa, int band_limit) {
    const QuadratureGrid& grid = nominal.grid();
    detail::check_kappa(kappa, grid, band_limit);
    const std::vector<double> k = synthesize_on_grid(kappa, grid);
    const TangentField flux = nominal.jump_tangential_gradient().scaled(k);
    return detail::project(surface_divergence(flux, grid.band_limit()), band_limit);
}

struct ShapeDerivativeTrace {
    SpectralField trace_plus;   // u'_+ on the sphere
    SpectralField trace_minus;  // u'_- on the sphere
    SpectralField g_dirichlet;
    SpectralField g_neumann;
};

/// Right side of the exterior trace equation, g_N - alpha- S- g_D. The
/// interior trace solves the same operator with g_N - alpha+ S+ g_D.
inline SpectralField jump_equation_rhs(const TransmissionCoefficients& tc, const SpectralField& g_dirichlet,
                                       const SpectralField& g_neumann, Side side) {
    const int band_limit = std::max(g_dirichlet.band_limit(), g_neumann.band_limit());
    SpectralField rhs = g_neumann.with_band_limit(band_limit);
    const OperatorKind dtn = side == Side::Exterior ? OperatorKind::S_minus : OperatorKind::S_plus;
    const double alpha = side == Side::Exterior ? tc.alpha_minus() : tc.alpha_plus();
    const SpectralField s_gd = BoundaryOperator(dtn, tc).apply(g_dirichlet);
    rhs -= alpha * s_gd;
    return rhs;
}

inline ShapeDerivativeTrace solve_trace(const TransmissionCoefficients& tc, const SpectralField& g_dirichlet,
                                        const SpectralField& g_neumann) {
    const int band_limit = std::max(g_dirichlet.band_limit(), g_neumann.band_limit());
    ShapeDerivativeTrace out;
    out.g_dirichlet = g_dirichlet.with_band_limit(band_limit);
    out.g_neumann = g_neumann.with_band_limit(band_limit);
    out.trace_plus = solve_jump(tc, jump_equation_rhs(tc, out.g_dirichlet, out.g_neumann, Side::Exterior));
    out.trace_minus = out.trace_plus + out.g_dirichlet;
    return out;
}

/// || [[alpha S]] u'_+ - (g_N - alpha- S- g_D) ||_{H^{-1/2}} relative to the right side.
inline double jump_residual(const TransmissionCoefficients& tc, const ShapeDerivativeTrace& trace) {
    const SpectralField rhs = jump_equation_rhs(tc, trace.g_dirichlet, trace.g_neumann, Side::Exterior);
    const SpectralField lhs = BoundaryOperator(OperatorKind::JumpAlphaS, tc).apply(trace.trace_plus);
    const double scale = sobolev_norm(rhs, -0.5);
    const double r = sobolev_norm(lhs - rhs, -0.5);
    return scale > 0.0 ? r / scale : r;
}

/// Tolerance for treating a point as lying on the interface.
inline constexpr double kInterfaceTolerance = 1e-9;

inline Side side_of(const Vec3& point) {
    const double r = norm(point);
    if (std::abs(r - 1.0) <= kInterfaceTolerance) {
        throw DomainError("point lies on the interface; u' is only defined off the sphere");
    }
    return r < 1.0 ? Side::Interior : Side::Exterior;
}

/// u'(x): E-(u'_-) inside, E+(u'_+) outside.
inline double evaluate(const ShapeDerivativeTrace& trace, const Vec3& point) {
    const std::vector<Vec3> p{point};
    return side_of(point) == Side::Interior ? evaluate_interior(trace.trace_minus, p)[0]
                                            : evaluate_exterior(trace.trace_plus, p)[0];
}

}  // namespace sphere_moments
