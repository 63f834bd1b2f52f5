// SPDX-License-Identifier: Apache-2.0
//
// Analysis/synthesis between grid samples and harmonic coefficients, and
// the surface gradient / weak surface divergence on the unit sphere.
//
// All grid transforms are separable: a direct Fourier sum along each ring
// followed by the Legendre sum, both in a fixed order so results do not
// depend on how a caller splits work.
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"
#include "sphere_moments/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace sphere_moments {

namespace detail {

// cos(m phi_j), sin(m phi_j) for m = 0..band_limit, row m.
struct RingTrig {
    RingTrig(const QuadratureGrid& grid, int band_limit) : n_phi(grid.azimuthal_count()) {
        cos_table.resize(static_cast<std::size_t>(band_limit + 1) * n_phi);
        sin_table.resize(cos_table.size());
        for (int m = 0; m <= band_limit; ++m) {
            for (int j = 0; j < n_phi; ++j) {
                // reduce m*j mod n before scaling to keep the argument small
                const double angle = 2.0 * std::numbers::pi * ((static_cast<long>(m) * j) % n_phi) / n_phi;
                cos_table[m * n_phi + j] = std::cos(angle);
                sin_table[m * n_phi + j] = std::sin(angle);
            }
        }
    }
    double c(int m, int j) const { return cos_table[m * n_phi + j]; }
    double s(int m, int j) const { return sin_table[m * n_phi + j]; }

    int n_phi;
    std::vector<double> cos_table;
    std::vector<double> sin_table;
};

inline void require_exactness(const QuadratureGrid& grid, int band_limit) {
    if (grid.exactness() < 2 * band_limit) {
        throw UsageError("grid exactness " + std::to_string(grid.exactness()) + " is below 2L = " +
                         std::to_string(2 * band_limit));
    }
}

}  // namespace detail

/// coefficients[l,m] = sum_i w_i samples_i Y_{l,m}(node_i).
inline SpectralField analyze(std::span<const double> samples, const QuadratureGrid& grid, int band_limit) {
    if (samples.size() != grid.node_count()) throw UsageError("sample count does not match grid");
    detail::require_exactness(grid, band_limit);
    const detail::RingTrig trig(grid, band_limit);
    const int n_phi = grid.azimuthal_count();
    SpectralField out(band_limit);
    std::vector<double> fc(band_limit + 1), fs(band_limit + 1);
    for (int ring = 0; ring < grid.polar_count(); ++ring) {
        const double* row = samples.data() + static_cast<std::size_t>(ring) * n_phi;
        for (int m = 0; m <= band_limit; ++m) {
            double c = 0.0, s = 0.0;
            for (int j = 0; j < n_phi; ++j) {
                c += row[j] * trig.c(m, j);
                s += row[j] * trig.s(m, j);
            }
            fc[m] = c;
            fs[m] = s;
        }
        const LegendreTable table(grid.cos_theta(ring), grid.sin_theta(ring), band_limit);
        const double w = grid.ring_weight(ring);
        for (int l = 0; l <= band_limit; ++l) {
            out(l, 0) += w * table.value(l, 0) * fc[0];
            for (int m = 1; m <= l; ++m) {
                const double p = w * std::numbers::sqrt2 * table.value(l, m);
                out(l, m) += p * fc[m];
                out(l, -m) += p * fs[m];
            }
        }
    }
    return out;
}

inline SpectralField analyze(const std::vector<double>& samples, const QuadratureGrid& grid, int band_limit) {
    return analyze(std::span<const double>(samples), grid, band_limit);
}

/// Pointwise sums sum v_{l,m} Y_{l,m}(point).
inline std::vector<double> synthesize(const SpectralField& field, std::span<const Vec3> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const Vec3& x : points) {
        const std::vector<double> y = eval_all_ylm(x, field.band_limit());
        double v = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) v += field.coefficients()[i] * y[i];
        out.push_back(v);
    }
    return out;
}

/// Synthesis at every grid node (ring-separable).
inline std::vector<double> synthesize_on_grid(const SpectralField& field, const QuadratureGrid& grid) {
    const int band_limit = field.band_limit();
    const detail::RingTrig trig(grid, band_limit);
    const int n_phi = grid.azimuthal_count();
    std::vector<double> out(grid.node_count(), 0.0);
    std::vector<double> ac(band_limit + 1), as(band_limit + 1);
    for (int ring = 0; ring < grid.polar_count(); ++ring) {
        const LegendreTable table(grid.cos_theta(ring), grid.sin_theta(ring), band_limit);
        for (int m = 0; m <= band_limit; ++m) {
            double c = 0.0, s = 0.0;
            for (int l = m; l <= band_limit; ++l) {
                const double p = table.value(l, m);
                c += field(l, m) * p;
                if (m > 0) s += field(l, -m) * p;
            }
            const double scale = m == 0 ? 1.0 : std::numbers::sqrt2;
            ac[m] = scale * c;
            as[m] = scale * s;
        }
        double* row = out.data() + static_cast<std::size_t>(ring) * n_phi;
        for (int j = 0; j < n_phi; ++j) {
            double v = 0.0;
            for (int m = 0; m <= band_limit; ++m) v += ac[m] * trig.c(m, j) + as[m] * trig.s(m, j);
            row[j] = v;
        }
    }
    return out;
}

/// Per-node tangent vectors on a quadrature grid.
struct TangentField {
    QuadratureGrid grid;
    std::vector<Vec3> vectors;

    explicit TangentField(QuadratureGrid g) : grid(std::move(g)), vectors(grid.node_count(), Vec3{0, 0, 0}) {}
    TangentField(QuadratureGrid g, std::vector<Vec3> v) : grid(std::move(g)), vectors(std::move(v)) {
        if (vectors.size() != grid.node_count()) throw UsageError("tangent field size does not match grid");
    }

    /// max_i |v_i . n_i| / max(|v_i|, tiny).
    double max_normal_component() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            const double mag = norm(vectors[i]);
            if (mag == 0.0) continue;
            worst = std::max(worst, std::abs(dot(vectors[i], grid.node(i))) / mag);
        }
        return worst;
    }

    /// Pointwise product with scalar samples.
    TangentField scaled(std::span<const double> samples) const {
        if (samples.size() != vectors.size()) throw UsageError("sample count does not match grid");
        TangentField out(grid);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            for (int c = 0; c < 3; ++c) out.vectors[i][c] = samples[i] * vectors[i][c];
        }
        return out;
    }
};

namespace detail {

inline Vec3 e_theta(const Direction& d) {
    return {d.cos_theta * std::cos(d.phi), d.cos_theta * std::sin(d.phi), -d.sin_theta};
}
inline Vec3 e_phi(const Direction& d) { return {-std::sin(d.phi), std::cos(d.phi), 0.0}; }

}  // namespace detail

/// Tangential gradient at grid nodes: dY/dt e_t + (1/sin t) dY/dp e_p.
/// The 1/sin t factor is folded into the Legendre recurrence (see
/// LegendreTable::over_sin), so no node needs special treatment.
inline TangentField surface_gradient(const SpectralField& field, const QuadratureGrid& grid) {
    const int band_limit = field.band_limit();
    detail::require_exactness(grid, band_limit);
    const detail::RingTrig trig(grid, band_limit);
    const int n_phi = grid.azimuthal_count();
    TangentField out(grid);
    // per-ring Fourier amplitudes of the theta and phi components
    std::vector<double> tc(band_limit + 1), ts(band_limit + 1), pc(band_limit + 1), ps(band_limit + 1);
    for (int ring = 0; ring < grid.polar_count(); ++ring) {
        const LegendreTable table(grid.cos_theta(ring), grid.sin_theta(ring), band_limit, true);
        for (int m = 0; m <= band_limit; ++m) {
            double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
            for (int l = m; l <= band_limit; ++l) {
                const double dp = table.dtheta(l, m);
                a += field(l, m) * dp;
                if (m > 0) {
                    const double q = m * table.over_sin(l, m);
                    b += field(l, -m) * dp;
                    // d/dp cos(m p) = -m sin(m p); d/dp sin(m p) = m cos(m p)
                    c += field(l, -m) * q;
                    d += -field(l, m) * q;
                }
            }
            const double scale = m == 0 ? 1.0 : std::numbers::sqrt2;
            tc[m] = scale * a;
            ts[m] = scale * b;
            pc[m] = scale * c;
            ps[m] = scale * d;
        }
        for (int j = 0; j < n_phi; ++j) {
            double g_theta = 0.0, g_phi = 0.0;
            for (int m = 0; m <= band_limit; ++m) {
                g_theta += tc[m] * trig.c(m, j) + ts[m] * trig.s(m, j);
                g_phi += pc[m] * trig.c(m, j) + ps[m] * trig.s(m, j);
            }
            const std::size_t i = static_cast<std::size_t>(ring) * n_phi + j;
            const Direction dir = grid.direction(i);
            const Vec3 et = detail::e_theta(dir), ep = detail::e_phi(dir);
            for (int k = 0; k < 3; ++k) out.vectors[i][k] = g_theta * et[k] + g_phi * ep[k];
        }
    }
    return out;
}

/// Weak divergence: (div F)_{l,m} = -sum_i w_i F_i . grad Y_{l,m}(node_i).
inline SpectralField surface_divergence(const TangentField& tf, int band_limit) {
    const QuadratureGrid& grid = tf.grid;
    detail::require_exactness(grid, band_limit);
    const detail::RingTrig trig(grid, band_limit);
    const int n_phi = grid.azimuthal_count();
    SpectralField out(band_limit);
    std::vector<double> ft(n_phi), fp(n_phi);
    std::vector<double> tc(band_limit + 1), ts(band_limit + 1), pc(band_limit + 1), ps(band_limit + 1);
    for (int ring = 0; ring < grid.polar_count(); ++ring) {
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t i = static_cast<std::size_t>(ring) * n_phi + j;
            const Direction dir = grid.direction(i);
            ft[j] = dot(tf.vectors[i], detail::e_theta(dir));
            fp[j] = dot(tf.vectors[i], detail::e_phi(dir));
        }
        for (int m = 0; m <= band_limit; ++m) {
            double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
            for (int j = 0; j < n_phi; ++j) {
                a += ft[j] * trig.c(m, j);
                b += ft[j] * trig.s(m, j);
                c += fp[j] * trig.c(m, j);
                d += fp[j] * trig.s(m, j);
            }
            tc[m] = a;
            ts[m] = b;
            pc[m] = c;
            ps[m] = d;
        }
        const LegendreTable table(grid.cos_theta(ring), grid.sin_theta(ring), band_limit, true);
        const double w = grid.ring_weight(ring);
        for (int l = 0; l <= band_limit; ++l) {
            out(l, 0) -= w * table.dtheta(l, 0) * tc[0];
            for (int m = 1; m <= l; ++m) {
                const double dp = std::numbers::sqrt2 * table.dtheta(l, m);
                const double q = std::numbers::sqrt2 * m * table.over_sin(l, m);
                // Y_{l,m} ~ cos(m p): grad_p part is -m Q sin(m p)
                out(l, m) -= w * (dp * tc[m] - q * ps[m]);
                // Y_{l,-m} ~ sin(m p): grad_p part is +m Q cos(m p)
                out(l, -m) -= w * (dp * ts[m] + q * pc[m]);
            }
        }
    }
    return out;
}

/// sum_i w_i F_i . G_i
inline double inner_product(const TangentField& f, const TangentField& g) {
    if (!(f.grid == g.grid)) throw UsageError("tangent fields live on different grids");
    double total = 0.0;
    const int n_phi = f.grid.azimuthal_count();
    for (int ring = 0; ring < f.grid.polar_count(); ++ring) {
        double ring_sum = 0.0;
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t i = static_cast<std::size_t>(ring) * n_phi + j;
            ring_sum += dot(f.vectors[i], g.vectors[i]);
        }
        total += f.grid.ring_weight(ring) * ring_sum;
    }
    return total;
}

/// Euclidean coefficient inner product (the L2 pairing for real fields).
inline double inner_product(const SpectralField& a, const SpectralField& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += a.coefficients()[i] * b.coefficients()[i];
    return total;
}

}  // namespace sphere_moments
