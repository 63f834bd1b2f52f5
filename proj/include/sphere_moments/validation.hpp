// SPDX-License-Identifier: Apache-2.0
//
// Moment oracles over the scalar amplitude a ~ U[-1, 1] and the study
// drivers built on them.
#pragma once

#include "sphere_moments/benchmarks.hpp"
#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"
#include "sphere_moments/quadrature.hpp"
#include "sphere_moments/shape_derivative.hpp"
#include "sphere_moments/tensor_moments.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sphere_moments {

/// u(x, a): a realization of a solution at amplitude a.
using SampledSolution = std::function<double(const Vec3&, double)>;

/// Per-point moments of order k: raw E[v^k], mean E[v], central
/// E[(v - E v)^k]. Standard errors are NaN for quadrature estimates.
struct MomentEstimate {
    double raw = 0.0;
    double mean = 0.0;
    double central = 0.0;
    double raw_se = std::numeric_limits<double>::quiet_NaN();
    double mean_se = std::numeric_limits<double>::quiet_NaN();
    double central_se = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void require_moment_order(int k) {
    if (k < 1) throw UsageError("moment order must be at least 1");
}

}  // namespace detail

/// Gauss-Legendre estimate; `kinks` lists amplitudes where u(x, .) is not smooth.
inline std::vector<MomentEstimate> estimate_moments_quadrature(const SampledSolution& u, std::span<const Vec3> points,
                                                               int k, int nodes,
                                                               const std::vector<double>& kinks = {}) {
    detail::require_moment_order(k);
    if (nodes < 2) throw UsageError("quadrature needs at least 2 nodes");
    const GaussLegendreRule rule = uniform_amplitude_rule(nodes, kinks);
    std::vector<MomentEstimate> out;
    std::vector<double> v(rule.nodes.size());
    for (const Vec3& x : points) {
        MomentEstimate e;
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = u(x, rule.nodes[i]);
            e.raw += rule.weights[i] * std::pow(v[i], k);
        }
        // center about the first sample, then about the shifted mean
        const double shift = v[0];
        double shifted_mean = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) shifted_mean += rule.weights[i] * (v[i] - shift);
        e.mean = shift + shifted_mean;
        for (std::size_t i = 0; i < v.size(); ++i) {
            e.central += rule.weights[i] * std::pow(v[i] - shift - shifted_mean, k);
        }
        out.push_back(e);
    }
    return out;
}

/// Uniform amplitude in [-1, 1) from the top 53 bits of one 64-bit draw, so
/// sample sequences do not depend on the standard library's distributions.
inline double draw_amplitude(std::mt19937_64& rng) {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

/// Seeded Monte Carlo estimate with standard errors. The central-moment
/// error treats the sample mean as exact (its effect is O(1/N)).
inline std::vector<MomentEstimate> estimate_moments_mc(const SampledSolution& u, std::span<const Vec3> points, int k,
                                                       std::size_t samples, std::uint64_t seed) {
    detail::require_moment_order(k);
    if (samples < 2) throw UsageError("Monte Carlo needs at least 2 samples");
    std::mt19937_64 rng(seed);
    std::vector<double> a(samples);
    for (double& s : a) s = draw_amplitude(rng);

    const double n = static_cast<double>(samples);
    // shifted two-pass: constant samples give exactly zero spread
    auto mean_and_se = [n](const std::vector<double>& x, double& mean, double& se) {
        double shifted = 0.0;
        for (double xi : x) shifted += xi - x[0];
        shifted /= n;
        double ss = 0.0;
        for (double xi : x) ss += (xi - x[0] - shifted) * (xi - x[0] - shifted);
        mean = x[0] + shifted;
        se = std::sqrt(ss / (n - 1.0) / n);
    };

    std::vector<MomentEstimate> out;
    std::vector<double> v(samples), w(samples);
    for (const Vec3& x : points) {
        MomentEstimate e;
        for (std::size_t i = 0; i < samples; ++i) v[i] = u(x, a[i]);
        mean_and_se(v, e.mean, e.mean_se);
        for (std::size_t i = 0; i < samples; ++i) w[i] = std::pow(v[i], k);
        mean_and_se(w, e.raw, e.raw_se);
        const double shifted_mean = e.mean - v[0];
        for (std::size_t i = 0; i < samples; ++i) w[i] = std::pow(v[i] - v[0] - shifted_mean, k);
        mean_and_se(w, e.central, e.central_se);
        out.push_back(e);
    }
    return out;
}

/// Relative floating-point floor below which two estimates count as equal
/// regardless of the standard error (e.g. solutions constant in a).
inline constexpr double kAgreementFloor = 1e-13;

/// |reference - estimate| <= n_se * se + floor, floor scaled to the k-th power
/// of the mean for central moments.
inline bool agrees_within(double reference, double estimate, double se, double n_se, double floor_scale) {
    return std::abs(reference - estimate) <= n_se * se + floor_scale;
}

struct OracleComparison {
    bool mean_ok = true;
    bool raw_ok = true;
    bool central_ok = true;
    bool all() const { return mean_ok && raw_ok && central_ok; }
};

inline OracleComparison compare_estimates(const MomentEstimate& quad, const MomentEstimate& mc, int k,
                                          double n_se = 3.0) {
    const double m = std::abs(quad.mean);
    OracleComparison c;
    c.mean_ok = agrees_within(quad.mean, mc.mean, mc.mean_se, n_se, kAgreementFloor * m);
    c.raw_ok = agrees_within(quad.raw, mc.raw, mc.raw_se, n_se, kAgreementFloor * std::abs(quad.raw));
    c.central_ok = agrees_within(quad.central, mc.central, mc.central_se, n_se, std::pow(kAgreementFloor * m, k));
    return c;
}

// ---------------------------------------------------------------------------

struct StudyRow {
    double parameter;  // epsilon or cross order p
    double error;
    double reference;
};

struct LinearFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double r_squared = std::numeric_limits<double>::quiet_NaN();
};

struct StudyReport {
    std::vector<StudyRow> rows;
    LinearFit fit;
    std::map<std::string, std::string> metadata;
};

/// Least squares of log(error) against log(parameter). Rows with zero
/// error are skipped; with fewer than 2 usable rows the fit is NaN.
inline LinearFit fit_loglog(std::span<const StudyRow> rows) {
    if (rows.size() < 3) throw UsageError("a rate fit needs at least 3 rows");
    std::vector<double> xs, ys;
    for (const StudyRow& r : rows) {
        if (r.error > 0.0 && r.parameter > 0.0) {
            xs.push_back(std::log(r.parameter));
            ys.push_back(std::log(r.error));
        }
    }
    LinearFit fit;
    if (xs.size() < 2) return fit;
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------

/// Cov[u'](x, y) for Example 1 (kappa = a, a ~ U[-1, 1]) through the full
/// boundary pipeline: nominal jumps, g_D and g_N, tensor solve, extension.
inline double example1_shape_covariance(const TransmissionCoefficients& tc, const Vec3& x, const Vec3& y,
                                        int cross_order = 4) {
    const QuadratureGrid grid = build_grid(2 * cross_order);
    const NominalTraceData nominal = example1_nominal_trace(tc, grid);
    SpectralField one(0);
    one(0, 0) = std::sqrt(4.0 * std::numbers::pi);
    const PerturbationModel model = PerturbationModel::uniform(one);
    const TensorSpectralField rhs =
        assemble_second_moment_rhs(tc, nominal, model, build_cross(cross_order, 2), sides_of(x, y));
    return propagate_covariance(solve_second_moment(tc, rhs), x, y);
}

enum class StudyQuantity {
    Mean,                  // |E[u^eps](x) - u0(x)|
    Covariance,            // |Cov[u^eps](x, y) - eps^2 Cov[u'](x, y)|
    RawSecondMoment,       // |E[(u^eps - u0)(x) (u^eps - u0)(y)] - eps^2 Cov[u'](x, y)|
    CentralSecondMoment,   // as Covariance, with the central moment taken by quadrature
};

inline StudyQuantity parse_study_quantity(const std::string& name) {
    if (name == "mean") return StudyQuantity::Mean;
    if (name == "covariance") return StudyQuantity::Covariance;
    if (name == "raw") return StudyQuantity::RawSecondMoment;
    if (name == "central") return StudyQuantity::CentralSecondMoment;
    throw UsageError("unknown study quantity '" + name + "' (expected mean|covariance|raw|central)");
}

/// Amplitude quadrature nodes per smooth piece used by the studies.
inline constexpr int kStudyQuadratureNodes = 64;

inline StudyReport linearization_error_study(const TransmissionCoefficients& tc, std::span<const double> epsilons,
                                             const Vec3& x, const Vec3& y, StudyQuantity quantity) {
    if (epsilons.size() < 3) throw UsageError("a linearization study needs at least 3 epsilon values");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0 && epsilons[i] < 1.0)) throw UsageError("epsilon values must lie in (0, 1)");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw UsageError("epsilon values must be strictly decreasing");
    }
    const Vec3& x2 = quantity == StudyQuantity::Mean ? x : y;
    const double shape_cov = quantity == StudyQuantity::Mean ? 0.0 : example1_shape_covariance(tc, x, x2);

    StudyReport report;
    for (double eps : epsilons) {
        const Example1Config cfg(tc, eps);
        StudyRow row{eps, 0.0, 0.0};
        switch (quantity) {
            case StudyQuantity::Mean: {
                row.reference = example1_nominal_solution(tc, x);
                row.error = std::abs(example1_exact_mean(cfg, x) - row.reference);
                break;
            }
            case StudyQuantity::Covariance: {
                row.reference = eps * eps * shape_cov;
                row.error = std::abs(example1_exact_covariance(cfg, x, x2) - row.reference);
                break;
            }
            case StudyQuantity::RawSecondMoment:
            case StudyQuantity::CentralSecondMoment: {
                row.reference = eps * eps * shape_cov;
                std::vector<double> kinks = example1_amplitude_kinks(cfg, x);
                for (double b : example1_amplitude_kinks(cfg, x2)) kinks.push_back(b);
                const GaussLegendreRule rule = uniform_amplitude_rule(kStudyQuadratureNodes, kinks);
                const double u0x = example1_nominal_solution(tc, x), u0y = example1_nominal_solution(tc, x2);
                std::vector<double> dx(rule.nodes.size()), dy(rule.nodes.size());
                double mx = 0.0, my = 0.0;
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    dx[i] = example1_exact_solution(cfg, x, rule.nodes[i]) - u0x;
                    dy[i] = example1_exact_solution(cfg, x2, rule.nodes[i]) - u0y;
                    mx += rule.weights[i] * dx[i];
                    my += rule.weights[i] * dy[i];
                }
                if (quantity == StudyQuantity::RawSecondMoment) mx = my = 0.0;
                double m2 = 0.0;
                for (std::size_t i = 0; i < dx.size(); ++i) m2 += rule.weights[i] * (dx[i] - mx) * (dy[i] - my);
                row.error = std::abs(m2 - row.reference);
                break;
            }
        }
        report.rows.push_back(row);
    }
    report.fit = fit_loglog(report.rows);
    report.metadata["study"] = "linearization";
    return report;
}

/// Example 2 (kappa = a, a ~ U[-1, 1]) second moment on the cross of order p.
struct Example2Problem {
    TransmissionCoefficients tc{2.0, 1.0};
    /// Band limit of the nominal sampling grid; 0 picks 4 * reference order.
    int nominal_band = 0;
};

inline TensorSpectralField example2_second_moment(const Example2Problem& problem, int cross_order, const Vec3& x,
                                                  const Vec3& y) {
    const int band = problem.nominal_band > 0 ? problem.nominal_band : 4 * cross_order;
    if (band < cross_order) throw UsageError("nominal band must be at least the cross order");
    const NominalTraceData nominal = example2_nominal_trace(problem.tc, build_grid(band));
    SpectralField one(0);
    one(0, 0) = std::sqrt(4.0 * std::numbers::pi);
    const PerturbationModel model = PerturbationModel::uniform(one);
    const TensorSpectralField rhs =
        assemble_second_moment_rhs(problem.tc, nominal, model, build_cross(cross_order, 2), sides_of(x, y));
    return solve_second_moment(problem.tc, rhs);
}

/// Self-convergence of Var[u'_p](x) against the order-`reference_p` solve.
/// The error is the reference's contribution outside cross(p), which
/// equals Var_ref - Var_p without cancellation.
inline StudyReport convergence_study(const Example2Problem& problem, std::span<const int> p_list, const Vec3& point,
                                     int reference_p) {
    if (p_list.empty()) throw UsageError("convergence study needs at least one cross order");
    for (int p : p_list) {
        if (p < 0) throw UsageError("cross orders must be nonnegative");
        if (p > reference_p) throw UsageError("reference order must be at least every studied order");
    }
    Example2Problem resolved = problem;
    if (resolved.nominal_band == 0) resolved.nominal_band = 4 * reference_p;
    const TensorSpectralField reference = example2_second_moment(resolved, reference_p, point, point);
    const std::array<Vec3, 2> pts{point, point};
    const double ref_value = propagate_moment(reference, pts);

    StudyReport report;
    for (int p : p_list) {
        const double tail = propagate_moment_tail(reference, build_cross(p, 2), pts);
        report.rows.push_back({static_cast<double>(p), std::abs(tail), ref_value});
    }
    if (report.rows.size() >= 3) report.fit = fit_loglog(report.rows);
    report.metadata["study"] = "convergence";
    report.metadata["reference_p"] = std::to_string(reference_p);
    return report;
}

/// Non-increasing up to a relative slack per step.
inline bool non_increasing(std::span<const StudyRow> rows, double slack = 0.1) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].error > rows[i - 1].error * (1.0 + slack)) return false;
    }
    return true;
}

}  // namespace sphere_moments
