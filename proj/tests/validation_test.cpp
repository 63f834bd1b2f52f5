// SPDX-License-Identifier: Apache-2.0
#include "sphere_moments/validation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

namespace sm = sphere_moments;

namespace {

const sm::TransmissionCoefficients kTc{2.0, 1.0};
const std::vector<sm::Vec3> kOne{{0.0, 0.0, 0.2}};

}  // namespace

TEST(QuadratureMoments, Examples) {
    const auto constant = [](const sm::Vec3&, double) { return 4.0; };
    const auto linear = [](const sm::Vec3&, double a) { return a; };
    const auto square = [](const sm::Vec3&, double a) { return a * a; };
    EXPECT_NEAR(sm::estimate_moments_quadrature(constant, kOne, 2, 8)[0].central, 0.0, 1e-15);
    EXPECT_NEAR(sm::estimate_moments_quadrature(linear, kOne, 2, 8)[0].central, 1.0 / 3.0, 1e-15);
    const sm::MomentEstimate sq = sm::estimate_moments_quadrature(square, kOne, 2, 8)[0];
    EXPECT_NEAR(sq.mean, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(sq.central, 4.0 / 45.0, 1e-15);
    EXPECT_NEAR(sq.raw, 1.0 / 5.0, 1e-15);
    EXPECT_TRUE(std::isnan(sq.central_se));
    EXPECT_NEAR(sm::estimate_moments_quadrature(linear, kOne, 3, 8)[0].central, 0.0, 1e-16);
    EXPECT_THROW(sm::estimate_moments_quadrature(linear, kOne, 2, 1), sm::UsageError);
    EXPECT_THROW(sm::estimate_moments_quadrature(linear, kOne, 0, 8), sm::UsageError);
}

TEST(QuadratureMoments, KinkSplitRecoversExactness) {
    const auto kinked = [](const sm::Vec3&, double a) { return std::abs(a - 0.3); };
    // E|a - 0.3| = (1.3^2 + 0.7^2) / 4
    const double exact = (1.69 + 0.49) / 4.0;
    EXPECT_NEAR(sm::estimate_moments_quadrature(kinked, kOne, 1, 4, {0.3})[0].mean, exact, 1e-15);
    EXPECT_GT(std::abs(sm::estimate_moments_quadrature(kinked, kOne, 1, 4)[0].mean - exact), 1e-4);
}

TEST(QuadratureMoments, MeanFactorOfExample1) {
    // E[1/R] from the oracle equals the closed-form factor
    for (double eps : {0.2, 0.1, 0.05, 0.025, 0.5}) {
        const auto inv_radius = [eps](const sm::Vec3&, double a) { return 1.0 / (1.0 + eps * a); };
        EXPECT_NEAR(sm::estimate_moments_quadrature(inv_radius, kOne, 1, 64)[0].mean, sm::example1_mean_factor(eps),
                    1e-14);
    }
}

TEST(MonteCarloMoments, Determinism) {
    const auto u = [](const sm::Vec3& x, double a) { return x[2] * a + a * a; };
    const auto a = sm::estimate_moments_mc(u, kOne, 2, 1000, 42);
    const auto b = sm::estimate_moments_mc(u, kOne, 2, 1000, 42);
    const auto c = sm::estimate_moments_mc(u, kOne, 2, 1000, 43);
    EXPECT_EQ(std::memcmp(&a[0], &b[0], sizeof(sm::MomentEstimate)), 0);
    EXPECT_NE(a[0].mean, c[0].mean);
    EXPECT_THROW(sm::estimate_moments_mc(u, kOne, 2, 1, 1), sm::UsageError);
}

TEST(MonteCarloMoments, AmplitudesAreUniform) {
    std::mt19937_64 rng(7);
    double lo = 1.0, hi = -1.0, sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double a = sm::draw_amplitude(rng);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        sum += a;
    }
    EXPECT_GE(lo, -1.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_LT(lo, -0.999);
    EXPECT_GT(hi, 0.999);
    EXPECT_NEAR(sum / 100000, 0.0, 3.0 * std::sqrt(1.0 / 3.0 / 100000));
}

TEST(MonteCarloMoments, Examples) {
    const auto linear = [](const sm::Vec3&, double a) { return a; };
    const sm::MomentEstimate m = sm::estimate_moments_mc(linear, kOne, 2, 1000000, 2024)[0];
    EXPECT_NEAR(m.central, 1.0 / 3.0, 3.0 * m.central_se);
    // SE of the second moment: sqrt(Var[a^2] / N) = sqrt(4/45 / N)
    EXPECT_NEAR(m.central_se, std::sqrt(4.0 / 45.0 / 1e6), 1e-6);
    const sm::MomentEstimate first = sm::estimate_moments_mc(linear, kOne, 1, 100000, 5)[0];
    EXPECT_NEAR(first.central, 0.0, 1e-15);
    EXPECT_NEAR(first.mean, 0.0, 3.0 * first.mean_se);
}

TEST(MonteCarloMoments, AgreesWithQuadratureOnExample1) {
    const sm::Example1Config cfg(kTc, 0.1);
    const auto u = [&](const sm::Vec3& x, double a) { return sm::example1_exact_solution(cfg, x, a); };
    const std::vector<sm::Vec3> pts{{0, 0, 0.2}, {0, 0, 0.5}, {0, 0, 5}, {0, 0.6, 0.8 * 1.04}};
    const auto mc = sm::estimate_moments_mc(u, pts, 2, 100000, 11);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto quad =
            sm::estimate_moments_quadrature(u, std::span(&pts[i], 1), 2, 64, sm::example1_amplitude_kinks(cfg, pts[i]))[0];
        const sm::OracleComparison c = sm::compare_estimates(quad, mc[i], 2);
        EXPECT_TRUE(c.all()) << "point " << i;
    }
    // the exterior point is constant in a: exact central moment 0
    EXPECT_NEAR(mc[2].central, 0.0, 1e-30);
}

TEST(CompareEstimates, DetectsDisagreement) {
    sm::MomentEstimate q, m;
    q.mean = 1.0;
    q.central = 0.5;
    q.raw = 1.5;
    m = q;
    m.mean_se = m.central_se = m.raw_se = 0.01;
    EXPECT_TRUE(sm::compare_estimates(q, m, 2).all());
    m.central = 0.54;
    EXPECT_FALSE(sm::compare_estimates(q, m, 2).central_ok);
    EXPECT_TRUE(sm::compare_estimates(q, m, 2).mean_ok);
}

TEST(FitLogLog, ExactPowerLaw) {
    std::vector<sm::StudyRow> rows;
    for (double e : {0.4, 0.2, 0.1, 0.05}) rows.push_back({e, 3.0 * std::pow(e, 2.5), 0.0});
    const sm::LinearFit fit = sm::fit_loglog(rows);
    EXPECT_NEAR(fit.slope, 2.5, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    rows.pop_back();
    rows.pop_back();
    EXPECT_THROW(sm::fit_loglog(rows), sm::UsageError);
    std::vector<sm::StudyRow> zeros{{0.1, 0.0, 0.0}, {0.05, 0.0, 0.0}, {0.01, 0.0, 0.0}};
    EXPECT_TRUE(std::isnan(sm::fit_loglog(zeros).slope));
}

TEST(Example1Pipeline, ClosedFormCovariance) {
    const double expected = 1.0 / (3.0 * 210.0 * 210.0);
    const sm::Vec3 a{0, 0, 0.2}, b{0.3, 0.1, -0.6}, out{0, 0, 5}, out2{1.2, -0.4, 0.3};
    EXPECT_NEAR(sm::example1_shape_covariance(kTc, a, a), expected, 1e-12);
    EXPECT_NEAR(sm::example1_shape_covariance(kTc, a, b), expected, 1e-12);
    EXPECT_NEAR(sm::example1_shape_covariance(kTc, a, out), 0.0, 1e-12);
    EXPECT_NEAR(sm::example1_shape_covariance(kTc, out2, out), 0.0, 1e-12);
    EXPECT_NEAR(sm::example1_shape_covariance(kTc, a, a), sm::example1_leading_covariance(kTc), 1e-18);
}

TEST(LinearizationStudy, Rates) {
    const std::vector<double> eps{0.2, 0.1, 0.05};
    const sm::Vec3 x{0, 0, 0.2};
    const sm::StudyReport mean = sm::linearization_error_study(kTc, eps, x, x, sm::StudyQuantity::Mean);
    EXPECT_NEAR(mean.fit.slope, 2.0, 0.1);
    EXPECT_EQ(mean.rows.size(), 3u);
    const sm::StudyReport cov = sm::linearization_error_study(kTc, eps, x, x, sm::StudyQuantity::Covariance);
    EXPECT_NEAR(cov.fit.slope, 4.0, 0.2);
    const sm::StudyReport raw = sm::linearization_error_study(kTc, eps, x, x, sm::StudyQuantity::RawSecondMoment);
    const sm::StudyReport central =
        sm::linearization_error_study(kTc, eps, x, x, sm::StudyQuantity::CentralSecondMoment);
    EXPECT_NEAR(raw.fit.slope, central.fit.slope, 0.2);
    EXPECT_NEAR(central.fit.slope, cov.fit.slope, 1e-6);
    // raw and central differ by E[u - u0]^2 = O(eps^4)
    EXPECT_NE(raw.rows[0].error, central.rows[0].error);
}

TEST(LinearizationStudy, EqualDiffusivitiesGiveZeroErrors) {
    const std::vector<double> eps{0.2, 0.1, 0.05};
    const sm::Vec3 x{0, 0, 0.2};
    for (sm::StudyQuantity q : {sm::StudyQuantity::Mean, sm::StudyQuantity::Covariance,
                                sm::StudyQuantity::RawSecondMoment}) {
        const sm::StudyReport r = sm::linearization_error_study({1.5, 1.5}, eps, x, x, q);
        for (const sm::StudyRow& row : r.rows) EXPECT_EQ(row.error, 0.0);
        EXPECT_TRUE(std::isnan(r.fit.slope));
    }
}

TEST(LinearizationStudy, RejectsBadEpsilonLists) {
    const sm::Vec3 x{0, 0, 0.2};
    const std::vector<double> short_list{0.2, 0.1}, rising{0.1, 0.2, 0.05}, out_of_range{1.2, 0.1, 0.05};
    EXPECT_THROW(sm::linearization_error_study(kTc, short_list, x, x, sm::StudyQuantity::Mean), sm::UsageError);
    EXPECT_THROW(sm::linearization_error_study(kTc, rising, x, x, sm::StudyQuantity::Mean), sm::UsageError);
    EXPECT_THROW(sm::linearization_error_study(kTc, out_of_range, x, x, sm::StudyQuantity::Mean), sm::UsageError);
    EXPECT_THROW(sm::parse_study_quantity("variance"), sm::UsageError);
    EXPECT_EQ(sm::parse_study_quantity("raw"), sm::StudyQuantity::RawSecondMoment);
}

TEST(ConvergenceStudy, SmallProblem) {
    const sm::Example2Problem problem;
    const std::vector<int> ps{2, 4, 8, 16};
    const sm::StudyReport r = sm::convergence_study(problem, ps, {0, 0, 0.5}, 16);
    EXPECT_EQ(r.rows.back().error, 0.0);
    EXPECT_TRUE(sm::non_increasing(r.rows));
    EXPECT_LT(r.fit.slope, -1.5);
    // the tail equals Var_ref - Var_p
    const sm::TensorSpectralField coarse = sm::example2_second_moment({problem.tc, 64}, 4, {0, 0, 0.5}, {0, 0, 0.5});
    const std::array<sm::Vec3, 2> pts{sm::Vec3{0, 0, 0.5}, sm::Vec3{0, 0, 0.5}};
    EXPECT_NEAR(r.rows[1].error, std::abs(r.rows[1].reference - sm::propagate_moment(coarse, pts)), 1e-14);

    const std::vector<int> too_big{4, 32};
    EXPECT_THROW(sm::convergence_study(problem, too_big, {0, 0, 0.5}, 16), sm::UsageError);
    const std::vector<int> two{4, 8};
    EXPECT_TRUE(std::isnan(sm::convergence_study(problem, two, {0, 0, 0.5}, 8).fit.slope));
}

TEST(ConvergenceStudy, EqualDiffusivitiesVanish) {
    const std::vector<int> ps{2, 4, 8};
    const sm::StudyReport r = sm::convergence_study({{1.0, 1.0}, 0}, ps, {0, 0, 5.0}, 8);
    for (const sm::StudyRow& row : r.rows) {
        EXPECT_EQ(row.error, 0.0);
        EXPECT_EQ(row.reference, 0.0);
    }
}

TEST(NonIncreasing, Slack) {
    const std::vector<sm::StudyRow> ok{{1, 1.0, 0}, {2, 1.05, 0}, {3, 0.2, 0}};
    const std::vector<sm::StudyRow> bad{{1, 1.0, 0}, {2, 1.2, 0}};
    EXPECT_TRUE(sm::non_increasing(ok));
    EXPECT_FALSE(sm::non_increasing(bad));
}
