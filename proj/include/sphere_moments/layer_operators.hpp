// SPDX-License-Identifier: Apache-2.0
//
// Boundary integral operators of the Laplacian on the unit sphere, realized
// by their spherical-harmonic eigenvalues. The kernel is the normalized
// fundamental solution G(x, y) = 1 / (4 pi |x - y|); the normal points
// from the interior D- into the exterior D+.
//
//   V          1 / (2l+1)
//   K, K'     -1 / (2 (2l+1))
//   D          l (l+1) / (2l+1)
//   S-         l            interior Dirichlet-to-Neumann
//   S+        -(l+1)        exterior Dirichlet-to-Neumann
//   [alpha S]  alpha- l + alpha+ (l+1)
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sphere_moments {

/// Piecewise-constant diffusivity: alpha_minus inside, alpha_plus outside.
class TransmissionCoefficients {
public:
    TransmissionCoefficients(double alpha_minus, double alpha_plus)
        : alpha_minus_(alpha_minus), alpha_plus_(alpha_plus) {
        if (!(alpha_minus > 0.0) || !(alpha_plus > 0.0)) {
            throw UsageError("diffusivities must be strictly positive");
        }
    }

    double alpha_minus() const { return alpha_minus_; }
    double alpha_plus() const { return alpha_plus_; }
    /// [[alpha]] = alpha- - alpha+
    double jump() const { return alpha_minus_ - alpha_plus_; }

private:
    double alpha_minus_;
    double alpha_plus_;
};

enum class OperatorKind { V, K, Kprime, D, S_minus, S_plus, JumpAlphaS };

inline OperatorKind parse_operator_kind(std::string_view name) {
    if (name == "V") return OperatorKind::V;
    if (name == "K") return OperatorKind::K;
    if (name == "Kprime") return OperatorKind::Kprime;
    if (name == "D") return OperatorKind::D;
    if (name == "S_minus") return OperatorKind::S_minus;
    if (name == "S_plus") return OperatorKind::S_plus;
    if (name == "JumpAlphaS") return OperatorKind::JumpAlphaS;
    throw UsageError("unknown operator kind '" + std::string(name) + "'");
}

inline double operator_eigenvalue(OperatorKind kind, const TransmissionCoefficients& tc, int degree) {
    if (degree < 0) throw UsageError("degree must be nonnegative");
    const double l = degree;
    switch (kind) {
        case OperatorKind::V:
            return 1.0 / (2.0 * l + 1.0);
        case OperatorKind::K:
        case OperatorKind::Kprime:
            return -1.0 / (2.0 * (2.0 * l + 1.0));
        case OperatorKind::D:
            return l * (l + 1.0) / (2.0 * l + 1.0);
        case OperatorKind::S_minus:
            return l;
        case OperatorKind::S_plus:
            return -(l + 1.0);
        case OperatorKind::JumpAlphaS:
            return tc.alpha_minus() * l + tc.alpha_plus() * (l + 1.0);
    }
    throw UsageError("unknown operator kind");
}

/// Diagonal operator: (Op v)_{l,m} = lambda_l v_{l,m}.
class BoundaryOperator {
public:
    BoundaryOperator(OperatorKind kind, TransmissionCoefficients tc) : kind_(kind), tc_(tc) {}

    OperatorKind kind() const { return kind_; }
    double eigenvalue(int degree) const { return operator_eigenvalue(kind_, tc_, degree); }

    SpectralField apply(const SpectralField& v) const {
        SpectralField out(v.band_limit());
        for (int l = 0; l <= v.band_limit(); ++l) {
            const double lambda = eigenvalue(l);
            for (int m = -l; m <= l; ++m) out(l, m) = lambda * v(l, m);
        }
        return out;
    }

private:
    OperatorKind kind_;
    TransmissionCoefficients tc_;
};

inline SpectralField apply(const BoundaryOperator& op, const SpectralField& v) { return op.apply(v); }

/// Solves [alpha S] u = rhs; every eigenvalue is >= min(alpha) (1 + l) > 0.
inline SpectralField solve_jump(const TransmissionCoefficients& tc, const SpectralField& rhs) {
    SpectralField out(rhs.band_limit());
    for (int l = 0; l <= rhs.band_limit(); ++l) {
        const double lambda = operator_eigenvalue(OperatorKind::JumpAlphaS, tc, l);
        for (int m = -l; m <= l; ++m) out(l, m) = rhs(l, m) / lambda;
    }
    return out;
}

enum class Side { Interior, Exterior };

/// Radial factor of the harmonic extension of Y_{l,m} off the sphere:
/// r^l inside, r^{-l-1} outside.
inline double radial_factor(Side side, int degree, double r) {
    return side == Side::Interior ? std::pow(r, degree) : std::pow(r, -degree - 1);
}

/// Values of the harmonic extension of every basis function to `point`,
/// r^l Y(x/r) inside or r^{-l-1} Y(x/r) outside, at flat indices.
inline std::vector<double> extension_basis(Side side, const Vec3& point, int band_limit) {
    const double r = norm(point);
    std::vector<double> out(harmonic_count(band_limit), 0.0);
    if (r == 0.0) {
        // only the constant mode survives at the origin
        out[0] = 1.0 / std::sqrt(4.0 * std::numbers::pi);
        return out;
    }
    out = eval_all_ylm(direction_of(point), band_limit);
    double factor = side == Side::Interior ? 1.0 : 1.0 / r;
    const double step = side == Side::Interior ? r : 1.0 / r;
    for (int l = 0; l <= band_limit; ++l) {
        for (int m = -l; m <= l; ++m) out[flat_index(l, m)] *= factor;
        factor *= step;
    }
    return out;
}

namespace detail {

inline double extend(const SpectralField& trace, Side side, const Vec3& x) {
    const std::vector<double> basis = extension_basis(side, x, trace.band_limit());
    double v = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) v += trace.coefficients()[i] * basis[i];
    return v;
}

}  // namespace detail

/// Harmonic extension of a trace into |x| < 1. Equals the representation
/// (V~ S- - W) trace.
inline std::vector<double> evaluate_interior(const SpectralField& trace, std::span<const Vec3> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const Vec3& x : points) {
        if (!(norm(x) < 1.0)) throw DomainError("interior evaluation requires |x| < 1");
        out.push_back(detail::extend(trace, Side::Interior, x));
    }
    return out;
}

/// Decaying harmonic extension of a trace into |x| > 1. Equals the
/// representation (W - V~ S+) trace.
inline std::vector<double> evaluate_exterior(const SpectralField& trace, std::span<const Vec3> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const Vec3& x : points) {
        if (!(norm(x) > 1.0)) throw DomainError("exterior evaluation requires |x| > 1");
        out.push_back(detail::extend(trace, Side::Exterior, x));
    }
    return out;
}

}  // namespace sphere_moments
