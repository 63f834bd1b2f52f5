// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Each criterion also has a runtime budget.
#include "commands.hpp"

#include "sphere_moments/benchmarks.hpp"
#include "sphere_moments/layer_operators.hpp"
#include "sphere_moments/quadrature.hpp"
#include "sphere_moments/tensor_moments.hpp"
#include "sphere_moments/transforms.hpp"
#include "sphere_moments/validation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sm = sphere_moments;
using sm::Vec3;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double max_abs_diff(const sm::SpectralField& a, const sm::SpectralField& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        const auto idx = sm::HarmonicIndex::from_flat(i);
        worst = std::max(worst, std::abs(a[idx] - b[idx]));
    }
    return worst;
}

sm::SpectralField random_field(int L, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    sm::SpectralField f(L);
    for (double& c : f.coefficients()) c = sm::draw_amplitude(rng);
    return f;
}

// 1. operator identities and ellipticity
Outcome operator_identities() {
    Outcome o;
    const int L = 32;
    double worst_dtn = 0.0, worst_jump = 0.0, worst_margin = INFINITY;
    for (auto [am, ap] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {1.0, 10.0}}) {
        const sm::TransmissionCoefficients tc(am, ap);
        const sm::BoundaryOperator V(sm::OperatorKind::V, tc), K(sm::OperatorKind::K, tc);
        const sm::BoundaryOperator Sm(sm::OperatorKind::S_minus, tc), Sp(sm::OperatorKind::S_plus, tc);
        const sm::BoundaryOperator J(sm::OperatorKind::JumpAlphaS, tc);
        for (int l = 0; l <= L; ++l) {
            for (int m = -l; m <= l; ++m) {
                const auto y = sm::SpectralField::unit(L, {l, m});
                // V^{-1}(I/2 + K) y: V is diagonal, divide by its action on y
                const double half_plus_k = 0.5 + sm::apply(K, y)(l, m);
                const double dtn = half_plus_k / sm::apply(V, y)(l, m);
                worst_dtn = std::max(worst_dtn, std::abs(dtn - l));
                worst_dtn = std::max(worst_dtn, max_abs_diff(sm::apply(Sm, y), static_cast<double>(l) * y));
                const auto composed = am * sm::apply(Sm, y) - ap * sm::apply(Sp, y);
                const double expected = am * l + ap * (l + 1.0);
                worst_jump = std::max(worst_jump, max_abs_diff(sm::apply(J, y), expected * y));
                worst_jump = std::max(worst_jump, max_abs_diff(composed, expected * y));
            }
            worst_margin = std::min(worst_margin, J.eigenvalue(l) - std::min(am, ap) * (1.0 + l));
        }
    }
    o.require(worst_dtn <= 1e-12, "S- deviation " + fmt(worst_dtn));
    o.require(worst_jump <= 1e-12, "jump deviation " + fmt(worst_jump));
    o.require(worst_margin >= 0.0, "ellipticity margin " + fmt(worst_margin));
    o.detail = "max |S- - l| " + fmt(worst_dtn) + ", max |[[aS]] - (a-l + a+(l+1))| " + fmt(worst_jump) +
               (o.pass ? "" : " | " + o.detail);
    return o;
}

// 2. Example-1 covariance through the full pipeline
Outcome example1_covariance() {
    Outcome o;
    const sm::TransmissionCoefficients tc(2.0, 1.0);
    const double expected = (1.0 / 3.0) * std::pow(1.0 / 210.0, 2);
    const std::vector<Vec3> interior{{0, 0, 0.2}, {0.1, 0.2, 0}, {0, 0.5, 0.3}, {0, 0, 0}};
    const std::vector<Vec3> exterior{{0, 0, 5}, {2, 0, 0}, {0, -1.5, 1}};
    double worst_in = 0.0, worst_out = 0.0;
    for (const Vec3& x : interior) {
        for (const Vec3& y : interior) worst_in = std::max(worst_in, std::abs(sm::example1_shape_covariance(tc, x, y) - expected));
        for (const Vec3& y : exterior) {
            worst_out = std::max(worst_out, std::abs(sm::example1_shape_covariance(tc, x, y)));
            worst_out = std::max(worst_out, std::abs(sm::example1_shape_covariance(tc, y, x)));
        }
    }
    for (const Vec3& x : exterior) {
        for (const Vec3& y : exterior) worst_out = std::max(worst_out, std::abs(sm::example1_shape_covariance(tc, x, y)));
    }
    o.require(worst_in <= 1e-12 && worst_out <= 1e-12, "tolerance 1e-12 exceeded");
    o.detail = "interior error " + fmt(worst_in) + ", exterior max " + fmt(worst_out);
    return o;
}

const std::vector<double> kEpsilons{0.2, 0.1, 0.05, 0.025};
const Vec3 kX{0, 0, 0.2};
const Vec3 kY{0, 0.3, 0};

// 3. mean rate and the exact 1/R factor by quadrature
Outcome mean_rate() {
    Outcome o;
    const sm::TransmissionCoefficients tc(2.0, 1.0);
    const auto report = sm::linearization_error_study(tc, kEpsilons, kX, kX, sm::StudyQuantity::Mean);
    o.require(std::abs(report.fit.slope - 2.0) <= 0.1, "slope out of range");
    double worst_factor = 0.0, worst_mean = 0.0;
    const std::vector<Vec3> one{kX};
    for (double eps : kEpsilons) {
        const sm::SampledSolution inv_r = [eps](const Vec3&, double a) { return 1.0 / (1.0 + eps * a); };
        const double f_quad = sm::estimate_moments_quadrature(inv_r, one, 1, 64)[0].mean;
        const double f_exact = (std::log(1.0 + eps) - std::log(1.0 - eps)) / (2.0 * eps);
        worst_factor = std::max(worst_factor, std::abs(f_quad - f_exact));
        worst_factor = std::max(worst_factor, std::abs(sm::example1_mean_factor(eps) - f_exact));
        const sm::Example1Config cfg(tc, eps);
        const sm::SampledSolution u = [&cfg](const Vec3& x, double a) { return sm::example1_exact_solution(cfg, x, a); };
        const double mean_quad = sm::estimate_moments_quadrature(u, one, 1, 64)[0].mean;
        worst_mean = std::max(worst_mean, std::abs(mean_quad - sm::example1_exact_mean(cfg, kX)));
    }
    o.require(worst_factor <= 1e-12, "factor mismatch " + fmt(worst_factor));
    o.require(worst_mean <= 1e-12, "mean mismatch " + fmt(worst_mean));
    o.detail = "slope " + std::to_string(report.fit.slope) + ", factor error " + fmt(worst_factor) +
               ", mean error " + fmt(worst_mean);
    return o;
}

// 4. covariance rate
Outcome covariance_rate() {
    Outcome o;
    const auto report =
        sm::linearization_error_study({2.0, 1.0}, kEpsilons, kX, kY, sm::StudyQuantity::Covariance);
    o.require(std::abs(report.fit.slope - 4.0) <= 0.2, "slope out of range");
    o.detail = "slope " + std::to_string(report.fit.slope);
    return o;
}

// 5. central second moment rate
Outcome central_moment_rate() {
    Outcome o;
    double worst = INFINITY;
    for (const auto& [x, y] : {std::pair{kX, kX}, {kX, kY}}) {
        const auto report =
            sm::linearization_error_study({2.0, 1.0}, kEpsilons, x, y, sm::StudyQuantity::CentralSecondMoment);
        worst = std::min(worst, report.fit.slope);
    }
    o.require(worst >= 3.8, "slope below 3.8");
    o.detail = "min slope " + std::to_string(worst);
    return o;
}

// 6. Example-2 self-convergence and unknown growth
Outcome example2_convergence() {
    Outcome o;
    const sm::Example2Problem problem;
    const std::vector<int> p_list{4, 8, 16, 32};
    std::string rates;
    for (const Vec3& x : {Vec3{0, 0, 0.2}, Vec3{0, 0, 0.5}, Vec3{0, 0, 5}}) {
        const auto report = sm::convergence_study(problem, p_list, x, 64);
        const bool interior = sm::norm(x) < 1.0;
        o.require(sm::non_increasing(report.rows, 0.1), "errors increase at z = " + std::to_string(x[2]));
        const double rate = -report.fit.slope;
        if (interior) o.require(rate >= 1.5, "rate below 1.5 at z = " + std::to_string(x[2]));
        rates += (rates.empty() ? "" : ", ") + std::string("rate ") + std::to_string(rate);
    }
    double lo = INFINITY, hi = 0.0;
    for (int p : {8, 16, 32, 64}) {
        const double ratio = sm::build_cross(p, 2).unknown_count() / (p * p * std::log(static_cast<double>(p)));
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    o.require(hi / lo <= 2.0, "unknown count ratio spread " + fmt(hi / lo));
    o.detail = rates + ", N/(p^2 log p) spread " + std::to_string(hi / lo);
    return o;
}

// 7. transforms and surface calculus
Outcome spectral_infrastructure() {
    Outcome o;
    double roundtrip = 0.0;
    for (int L = 0; L <= 16; ++L) {
        const auto f = random_field(L, 500 + L);
        const auto grid = sm::build_grid(L);
        roundtrip = std::max(roundtrip, max_abs_diff(f, sm::analyze(sm::synthesize_on_grid(f, grid), grid, L)));
    }
    const int L = 16;
    const auto grid = sm::build_grid(L);
    double lb = 0.0;
    for (int l = 0; l <= L; ++l) {
        for (int m = -l; m <= l; ++m) {
            const auto y = sm::SpectralField::unit(L, {l, m});
            const auto lap = sm::surface_divergence(sm::surface_gradient(y, grid), L);
            lb = std::max(lb, max_abs_diff(lap, -(l * (l + 1.0)) * y));
        }
    }
    double adj = 0.0;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const auto v = random_field(L, seed);
        const auto base = sm::surface_gradient(random_field(L / 2, seed + 10), grid);
        sm::TangentField f(grid);
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            const Vec3 x = grid.node(i);
            const Vec3& g = base.vectors[i];
            const Vec3 rot{x[1] * g[2] - x[2] * g[1], x[2] * g[0] - x[0] * g[2], x[0] * g[1] - x[1] * g[0]};
            for (int k = 0; k < 3; ++k) f.vectors[i][k] = g[k] + rot[k];
        }
        const double lhs = sm::inner_product(sm::surface_divergence(f, L), v);
        const double rhs = sm::inner_product(f, sm::surface_gradient(v, grid));
        adj = std::max(adj, std::abs(lhs + rhs));
    }
    o.require(roundtrip <= 1e-11, "roundtrip");
    o.require(lb <= 1e-9, "Laplace-Beltrami");
    o.require(adj <= 1e-9, "adjointness");
    o.detail = "roundtrip " + fmt(roundtrip) + ", Laplace-Beltrami " + fmt(lb) + ", adjointness " + fmt(adj);
    return o;
}

// 8. seeded Monte Carlo against quadrature, and rerun determinism
Outcome monte_carlo_oracle() {
    Outcome o;
    const sm::Example1Config cfg({2.0, 1.0}, 0.1);
    const sm::SampledSolution u = [&cfg](const Vec3& x, double a) { return sm::example1_exact_solution(cfg, x, a); };
    const std::vector<Vec3> points{{0, 0, 0.2}, {0, 0, 0.5}, {0.1, 0.2, 0}, {0, 0, 0.95}, {0, 0, 1.05}, {0, 0, 5}};
    const int k = 2;
    const std::size_t samples = 100000;
    const std::uint64_t seed = 20241014;
    int agree = 0;
    for (const Vec3& x : points) {
        const std::vector<Vec3> one{x};
        const auto q = sm::estimate_moments_quadrature(u, one, k, 64, sm::example1_amplitude_kinks(cfg, x))[0];
        const auto m = sm::estimate_moments_mc(u, one, k, samples, seed)[0];
        if (sm::compare_estimates(q, m, k).all()) ++agree;
        else o.require(false, "disagreement at z = " + std::to_string(x[2]) + " r = " + std::to_string(sm::norm(x)));
    }
    const auto a = sm::estimate_moments_mc(u, points, k, samples, seed);
    const auto b = sm::estimate_moments_mc(u, points, k, samples, seed);
    const bool identical = std::memcmp(a.data(), b.data(), a.size() * sizeof(sm::MomentEstimate)) == 0;
    o.require(identical, "library reruns differ");

    const auto cfg_path = std::filesystem::temp_directory_path() / "sphere_moments_acceptance_validate.json";
    std::ofstream(cfg_path) << R"({"mc_samples": 100000, "seed": 20241014})";
    std::ostringstream out1, out2, err;
    const std::vector<std::string> args{"validate", "--config", cfg_path.string()};
    const int s1 = sm::cli::run(args, out1, err);
    const int s2 = sm::cli::run(args, out2, err);
    o.require(s1 == 0 && s2 == 0, "validate command reported disagreement");
    o.require(out1.str() == out2.str(), "validate CSV reruns differ");
    o.detail = std::to_string(agree) + "/" + std::to_string(points.size()) + " points within 3 SE, reruns " +
               (identical && out1.str() == out2.str() ? "byte-identical" : "differ") +
               (o.pass ? "" : " | " + o.detail);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> check;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "operator identities", 1.0, operator_identities},
        {2, "example1 covariance closed form", 1.0, example1_covariance},
        {3, "mean linearization rate", 1.0, mean_rate},
        {4, "covariance linearization rate", 5.0, covariance_rate},
        {5, "central moment linearization rate", 5.0, central_moment_rate},
        {6, "example2 convergence", 60.0, example2_convergence},
        {7, "spectral infrastructure", 5.0, spectral_infrastructure},
        {8, "monte carlo oracle", 10.0, monte_carlo_oracle},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds < c.budget_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failures;
        std::printf("%s criterion %d (%s): %s [%.3f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : ", over budget");
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
