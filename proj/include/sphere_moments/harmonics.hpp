// SPDX-License-Identifier: Apache-2.0
//
// Real orthonormal spherical harmonics on the unit sphere.
//
// Convention. With the fully normalized associated Legendre function
//
//     Pbar_l^m(cos t) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos t),
//
// where P_l^m carries the Condon-Shortley phase (-1)^m, the real basis is
//
//     Y_{l,0}  = Pbar_l^0(cos t)
//     Y_{l,m}  = sqrt(2) Pbar_l^m(cos t) cos(m p)      m > 0
//     Y_{l,-m} = sqrt(2) Pbar_l^m(cos t) sin(m p)      m > 0
//
// so that Y_{1,1} = -sqrt(3/(4 pi)) x and Y_{1,-1} = -sqrt(3/(4 pi)) y.
// Coefficients are stored flat at index l*l + l + m.
#pragma once

#include "sphere_moments/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace sphere_moments {

using Vec3 = std::array<double, 3>;

inline double norm(const Vec3& v) { return std::hypot(v[0], v[1], v[2]); }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

/// Throws DomainError unless |point| = 1 within `tol`.
inline void require_unit(const Vec3& point, double tol = 1e-12) {
    if (std::abs(norm(point) - 1.0) > tol) {
        throw DomainError("point is not on the unit sphere (|x| = " + std::to_string(norm(point)) + ")");
    }
}

constexpr std::size_t harmonic_count(int band_limit) {
    return static_cast<std::size_t>(band_limit + 1) * static_cast<std::size_t>(band_limit + 1);
}

constexpr std::size_t flat_index(int degree, int order) {
    return static_cast<std::size_t>(degree * degree + degree + order);
}

struct HarmonicIndex {
    int degree = 0;
    int order = 0;

    constexpr HarmonicIndex() = default;
    constexpr HarmonicIndex(int l, int m) : degree(l), order(m) {
        if (l < 0 || m < -l || m > l) {
            throw UsageError("invalid harmonic index (l=" + std::to_string(l) + ", m=" + std::to_string(m) + ")");
        }
    }

    constexpr std::size_t flat() const { return flat_index(degree, order); }

    static constexpr HarmonicIndex from_flat(std::size_t i) {
        int l = static_cast<int>(std::sqrt(static_cast<double>(i)));
        while (static_cast<std::size_t>((l + 1) * (l + 1)) <= i) ++l;
        while (static_cast<std::size_t>(l * l) > i) --l;
        return {l, static_cast<int>(i) - l * l - l};
    }

    friend constexpr bool operator==(const HarmonicIndex&, const HarmonicIndex&) = default;
};

/// Band-limited function on the unit sphere, stored by its real harmonic
/// coefficients for all (l, m) with l <= band_limit.
class SpectralField {
public:
    SpectralField() : SpectralField(0) {}

    explicit SpectralField(int band_limit) : band_limit_(band_limit) {
        if (band_limit < 0) throw UsageError("band limit must be nonnegative");
        coefficients_.assign(harmonic_count(band_limit), 0.0);
    }

    SpectralField(int band_limit, std::vector<double> coefficients)
        : band_limit_(band_limit), coefficients_(std::move(coefficients)) {
        if (band_limit < 0) throw UsageError("band limit must be nonnegative");
        if (coefficients_.size() != harmonic_count(band_limit)) {
            throw UsageError("coefficient count must equal (L+1)^2");
        }
    }

    /// Field with a single unit coefficient at (l, m).
    static SpectralField unit(int band_limit, HarmonicIndex idx) {
        SpectralField f(band_limit);
        f[idx] = 1.0;
        return f;
    }

    int band_limit() const { return band_limit_; }
    std::size_t size() const { return coefficients_.size(); }

    double& operator[](HarmonicIndex idx) { return coefficients_.at(idx.flat()); }
    double operator[](HarmonicIndex idx) const {
        return idx.degree <= band_limit_ ? coefficients_[idx.flat()] : 0.0;
    }
    double& operator()(int l, int m) { return (*this)[HarmonicIndex{l, m}]; }
    double operator()(int l, int m) const { return (*this)[HarmonicIndex{l, m}]; }

    std::span<double> coefficients() { return coefficients_; }
    std::span<const double> coefficients() const { return coefficients_; }

    /// Copy with band limit changed: new high modes are zero, modes above
    /// the new limit are dropped.
    SpectralField with_band_limit(int band_limit) const {
        SpectralField out(band_limit);
        const std::size_t n = std::min(out.size(), size());
        std::copy_n(coefficients_.begin(), n, out.coefficients_.begin());
        return out;
    }

    SpectralField& operator+=(const SpectralField& other) {
        if (other.band_limit_ > band_limit_) *this = with_band_limit(other.band_limit_);
        for (std::size_t i = 0; i < other.size(); ++i) coefficients_[i] += other.coefficients_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& other) {
        if (other.band_limit_ > band_limit_) *this = with_band_limit(other.band_limit_);
        for (std::size_t i = 0; i < other.size(); ++i) coefficients_[i] -= other.coefficients_[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (double& c : coefficients_) c *= s;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
    friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

private:
    int band_limit_;
    std::vector<double> coefficients_;
};

/// sqrt( sum (1+l)^{2s} |v_{l,m}|^2 ).
inline double sobolev_norm(const SpectralField& field, double s) {
    double sum = 0.0;
    for (int l = 0; l <= field.band_limit(); ++l) {
        const double w = std::pow(1.0 + l, 2.0 * s);
        for (int m = -l; m <= l; ++m) {
            const double c = field(l, m);
            sum += w * c * c;
        }
    }
    return std::sqrt(sum);
}

namespace detail {

constexpr std::size_t tri_index(int l, int m) {
    return static_cast<std::size_t>(l * (l + 1) / 2 + m);
}

}  // namespace detail

/// Normalized associated Legendre values at one colatitude, m >= 0.
///
/// `value` holds Pbar_l^m; when derivatives are requested, `over_sin`
/// holds Pbar_l^m / sin(t) for m >= 1 (finite at the poles: it is
/// generated by the same three-term recurrence from the seed
/// sin^{m-1}(t)), and `dtheta` holds d Pbar_l^m / dt.
class LegendreTable {
public:
    LegendreTable(double cos_t, double sin_t, int band_limit, bool derivatives = false)
        : band_limit_(band_limit) {
        const std::size_t n = detail::tri_index(band_limit, band_limit) + 1;
        value_.assign(n, 0.0);
        fill(cos_t, sin_t, 1.0 / std::sqrt(4.0 * std::numbers::pi), value_);
        if (derivatives) {
            over_sin_.assign(n, 0.0);
            dtheta_.assign(n, 0.0);
            fill_over_sin(cos_t, sin_t);
            fill_dtheta(cos_t);
        }
    }

    int band_limit() const { return band_limit_; }
    double value(int l, int m) const { return value_[detail::tri_index(l, m)]; }
    double over_sin(int l, int m) const { return over_sin_[detail::tri_index(l, m)]; }
    double dtheta(int l, int m) const { return dtheta_[detail::tri_index(l, m)]; }

private:
    // Sectoral seeds Pbar_m^m, then the three-term recurrence in l.
    void fill(double x, double s, double p00, std::vector<double>& out) const {
        double pmm = p00;
        for (int m = 0; m <= band_limit_; ++m) {
            if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
            out[detail::tri_index(m, m)] = pmm;
            if (m < band_limit_) extend(x, m, out);
        }
    }

    void fill_over_sin(double x, double s) {
        // Q_1^1 = -sqrt(3/2) Pbar_0^0; Q_m^m = -sqrt((2m+1)/(2m)) s Q_{m-1}^{m-1}
        double qmm = 0.0;
        for (int m = 1; m <= band_limit_; ++m) {
            if (m == 1) {
                qmm = -std::sqrt(1.5) / std::sqrt(4.0 * std::numbers::pi);
            } else {
                qmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
            }
            over_sin_[detail::tri_index(m, m)] = qmm;
            if (m < band_limit_) extend(x, m, over_sin_);
        }
    }

    void extend(double x, int m, std::vector<double>& out) const {
        out[detail::tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * out[detail::tri_index(m, m)];
        for (int l = m + 2; l <= band_limit_; ++l) {
            const double ll = l, mm = m;
            const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
            const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
            out[detail::tri_index(l, m)] =
                a * (x * out[detail::tri_index(l - 1, m)] - b * out[detail::tri_index(l - 2, m)]);
        }
    }

    void fill_dtheta(double x) {
        for (int l = 0; l <= band_limit_; ++l) {
            // m = 0: d/dt Pbar_l^0 = sqrt(l(l+1)) Pbar_l^1
            dtheta_[detail::tri_index(l, 0)] =
                l == 0 ? 0.0 : std::sqrt(static_cast<double>(l) * (l + 1)) * value(l, 1);
            for (int m = 1; m <= l; ++m) {
                // sin(t) dP/dt = l cos(t) P_l^m - sqrt((l^2-m^2)(2l+1)/(2l-1)) P_{l-1}^m
                const double ll = l, mm = m;
                const double prev = (l - 1 >= m) ? over_sin(l - 1, m) : 0.0;
                const double f = std::sqrt((ll * ll - mm * mm) * (2.0 * ll + 1.0) / (2.0 * ll - 1.0));
                dtheta_[detail::tri_index(l, m)] = ll * x * over_sin(l, m) - f * prev;
            }
        }
    }

    int band_limit_;
    std::vector<double> value_;
    std::vector<double> over_sin_;
    std::vector<double> dtheta_;
};

/// Spherical coordinates (cos t, sin t, p) of a nonzero vector's direction.
struct Direction {
    double cos_theta;
    double sin_theta;
    double phi;
};

inline Direction direction_of(const Vec3& v) {
    const double r = norm(v);
    const double rho = std::hypot(v[0], v[1]);
    return {v[2] / r, rho / r, std::atan2(v[1], v[0])};
}

/// All real harmonics Y_{l,m}(dir), l <= band_limit, at flat indices.
inline std::vector<double> eval_all_ylm(const Direction& dir, int band_limit) {
    const LegendreTable table(dir.cos_theta, dir.sin_theta, band_limit);
    std::vector<double> out(harmonic_count(band_limit));
    for (int l = 0; l <= band_limit; ++l) out[flat_index(l, 0)] = table.value(l, 0);
    for (int m = 1; m <= band_limit; ++m) {
        const double c = std::numbers::sqrt2 * std::cos(m * dir.phi);
        const double s = std::numbers::sqrt2 * std::sin(m * dir.phi);
        for (int l = m; l <= band_limit; ++l) {
            const double p = table.value(l, m);
            out[flat_index(l, m)] = c * p;
            out[flat_index(l, -m)] = s * p;
        }
    }
    return out;
}

inline std::vector<double> eval_all_ylm(const Vec3& point, int band_limit) {
    require_unit(point);
    return eval_all_ylm(direction_of(point), band_limit);
}

inline double eval_ylm(HarmonicIndex idx, const Vec3& point) {
    require_unit(point);
    const Direction dir = direction_of(point);
    const int mu = std::abs(idx.order);
    const LegendreTable table(dir.cos_theta, dir.sin_theta, idx.degree);
    const double p = table.value(idx.degree, mu);
    if (idx.order == 0) return p;
    return std::numbers::sqrt2 * p * (idx.order > 0 ? std::cos(mu * dir.phi) : std::sin(mu * dir.phi));
}

}  // namespace sphere_moments
