// SPDX-License-Identifier: Apache-2.0
//
// Subcommands of the sphere-moments tool. Each returns CSV text plus an
// exit status so tests can drive them without a process boundary.
#pragma once

#include "run_config.hpp"

#include "sphere_moments/benchmarks.hpp"
#include "sphere_moments/shape_derivative.hpp"
#include "sphere_moments/tensor_moments.hpp"
#include "sphere_moments/validation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sphere_moments::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;

/// Tolerances behind exit status 3.
inline constexpr double kJumpResidualTolerance = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-12;

struct CommandResult {
    int status = kExitOk;
    std::string csv;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string footer(const RunConfig& c, json extra = json::object()) {
    extra["config_hash"] = config_hash(c);
    extra["seed"] = c.seed;
    return "# " + extra.dump() + "\n";
}

inline void require_benchmark(const RunConfig& c, const std::string& name, const std::string& what) {
    if (c.benchmark != name) throw ConfigError("benchmark", what + " requires benchmark " + name);
}

inline int nominal_band(const RunConfig& c) { return c.nominal_band > 0 ? c.nominal_band : 4 * c.band_limit; }

inline NominalTraceData nominal_trace(const RunConfig& c) {
    const QuadratureGrid grid = build_grid(std::max(nominal_band(c), c.band_limit));
    return c.benchmark == "example1" ? example1_nominal_trace(c.tc(), grid) : example2_nominal_trace(c.tc(), grid);
}

/// Deterministic kappa for the shape derivative, band limited to L.
inline SpectralField deterministic_kappa(const RunConfig& c) {
    SpectralField k(c.band_limit);
    if (c.kappa.type == "constant") {
        k(0, 0) = c.kappa.value * std::sqrt(4.0 * std::numbers::pi);
    } else if (c.kappa.type == "coefficients") {
        for (const KappaEntry& e : c.kappa.modes.at(0).entries) k(e.l, e.m) += e.value;
    } else {
        throw ConfigError("kappa.type", "shape-derivative needs a constant or coefficients kappa");
    }
    return k;
}

inline std::string point_cols(const Vec3& p) { return num(p[0]) + "," + num(p[1]) + "," + num(p[2]); }

}  // namespace detail

inline CommandResult cmd_shape_derivative(const RunConfig& c) {
    const NominalTraceData nominal = detail::nominal_trace(c);
    const SpectralField kappa = detail::deterministic_kappa(c);
    const ProjectedField gd = build_dirichlet_jump(nominal, kappa, c.band_limit);
    const ProjectedField gn = build_neumann_jump(nominal, kappa, c.band_limit);
    CommandResult out;
    if (gd.aliasing_warning()) out.warnings.push_back("g_D " + gd.diagnostic());
    if (gn.aliasing_warning()) out.warnings.push_back("g_N " + gn.diagnostic());
    const ShapeDerivativeTrace trace = solve_trace(c.tc(), gd.field, gn.field);
    const double residual = jump_residual(c.tc(), trace);

    std::string csv = "point_x,point_y,point_z,u_prime\n";
    for (const Vec3& x : c.evaluation_points) csv += detail::point_cols(x) + "," + detail::num(evaluate(trace, x)) + "\n";
    csv += detail::footer(c, {{"jump_residual", detail::json_number(residual)}});
    out.csv = std::move(csv);
    if (!(residual < kJumpResidualTolerance)) {
        out.status = kExitInvariant;
        out.warnings.push_back("jump residual " + detail::num(residual) + " exceeds tolerance");
    }
    return out;
}

inline CommandResult cmd_moments(const RunConfig& c) {
    const NominalTraceData nominal = detail::nominal_trace(c);
    const PerturbationModel model = make_model(c);
    const int k = c.moment_order;
    const HyperbolicCross cross = build_cross(c.cross_order, k);
    const double scale = std::pow(c.epsilon, k);
    CommandResult out;

    // one solve per side pattern
    std::map<std::vector<Side>, TensorSpectralField> solved;
    auto moment_for = [&](const std::vector<Side>& sides) -> const TensorSpectralField& {
        auto it = solved.find(sides);
        if (it == solved.end()) {
            TensorSpectralField m =
                solve_kth_moment(c.tc(), assemble_kth_moment_rhs(c.tc(), nominal, model, k, cross, sides), k);
            if (k == 2 && sides[0] == sides[1]) {
                const double asym = exchange_asymmetry(m);
                if (!(asym <= kSymmetryTolerance)) {
                    out.status = kExitInvariant;
                    out.warnings.push_back("second moment exchange asymmetry " + detail::num(asym));
                }
            }
            it = solved.emplace(sides, std::move(m)).first;
        }
        return it->second;
    };

    std::string csv;
    const auto& pts = c.evaluation_points;
    if (k == 2) {
        csv = "x1,y1,z1,x2,y2,z2,cov_uprime,scaled_cov\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i; j < pts.size(); ++j) {
                const auto [s1, s2] = sides_of(pts[i], pts[j]);
                const double v = propagate_covariance(moment_for({s1, s2}), pts[i], pts[j]);
                csv += detail::point_cols(pts[i]) + "," + detail::point_cols(pts[j]) + "," + detail::num(v) + "," +
                       detail::num(scale * v) + "\n";
            }
        }
    } else {
        csv = "x,y,z,moment,scaled_moment\n";
        for (const Vec3& x : pts) {
            const std::vector<Vec3> diag(k, x);
            const double v = propagate_moment(moment_for(std::vector<Side>(k, side_of(x))), diag);
            csv += detail::point_cols(x) + "," + detail::num(v) + "," + detail::num(scale * v) + "\n";
        }
    }
    json extra{{"moment_order", k}, {"unknowns", cross.unknown_count()}};
    csv += detail::footer(c, extra);
    out.csv = std::move(csv);
    return out;
}

inline CommandResult cmd_study(const RunConfig& c) {
    StudyReport report;
    if (c.study_kind == "linearization") {
        detail::require_benchmark(c, "example1", "a linearization study");
        if (c.epsilons.size() < 3) throw ConfigError("epsilons", "a linearization study needs at least 3 values");
        for (std::size_t i = 1; i < c.epsilons.size(); ++i) {
            if (!(c.epsilons[i] < c.epsilons[i - 1])) throw ConfigError("epsilons", "values must be strictly decreasing");
        }
        const Vec3& x = c.evaluation_points[0];
        const Vec3& y = c.evaluation_points.size() > 1 ? c.evaluation_points[1] : x;
        report = linearization_error_study(c.tc(), c.epsilons, x, y, parse_study_quantity(c.quantity));
    } else {
        detail::require_benchmark(c, "example2", "a convergence study");
        if (c.p_list.empty()) throw ConfigError("p_list", "a convergence study needs at least one order");
        for (int p : c.p_list) {
            if (p > c.reference_p) throw ConfigError("reference_p", "must be at least every entry of p_list");
        }
        const Example2Problem problem{c.tc(), c.nominal_band};
        report = convergence_study(problem, c.p_list, c.evaluation_points[0], c.reference_p);
    }

    CommandResult out;
    std::string csv = "parameter,error,reference\n";
    for (const StudyRow& r : report.rows) {
        csv += detail::num(r.parameter) + "," + detail::num(r.error) + "," + detail::num(r.reference) + "\n";
    }
    json extra{{"study", c.study_kind},
               {"slope", detail::json_number(report.fit.slope)},
               {"r_squared", detail::json_number(report.fit.r_squared)}};
    if (c.study_kind == "linearization") extra["quantity"] = c.quantity;
    csv += detail::footer(c, extra);
    out.csv = std::move(csv);
    if (c.study_kind == "convergence" && !non_increasing(report.rows)) {
        out.status = kExitInvariant;
        out.warnings.push_back("convergence errors increase by more than 10% between orders");
    }
    return out;
}

/// Seeded Monte Carlo against amplitude quadrature on Example 1.
inline CommandResult cmd_validate(const RunConfig& c) {
    detail::require_benchmark(c, "example1", "validate");
    const Example1Config cfg(c.tc(), c.epsilon);
    const SampledSolution u = [&cfg](const Vec3& x, double a) { return example1_exact_solution(cfg, x, a); };
    const int k = std::max(2, c.moment_order);
    CommandResult out;
    std::string csv =
        "point_x,point_y,point_z,quad_mean,mc_mean,mc_mean_se,quad_central,mc_central,mc_central_se,agree\n";
    for (const Vec3& x : c.evaluation_points) {
        const std::vector<Vec3> one{x};
        const MomentEstimate q =
            estimate_moments_quadrature(u, one, k, c.quadrature_nodes, example1_amplitude_kinks(cfg, x))[0];
        const MomentEstimate m = estimate_moments_mc(u, one, k, c.mc_samples, c.seed)[0];
        const bool ok = compare_estimates(q, m, k).all();
        if (!ok) {
            out.status = kExitInvariant;
            out.warnings.push_back("Monte Carlo and quadrature disagree at " + detail::point_cols(x));
        }
        csv += detail::point_cols(x) + "," + detail::num(q.mean) + "," + detail::num(m.mean) + "," +
               detail::num(m.mean_se) + "," + detail::num(q.central) + "," + detail::num(m.central) + "," +
               detail::num(m.central_se) + "," + (ok ? "1" : "0") + "\n";
    }
    csv += detail::footer(c, {{"moment_order", k}, {"mc_samples", c.mc_samples}});
    out.csv = std::move(csv);
    return out;
}

namespace detail {

struct Overrides {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::string kind;
};

inline RunConfig load(const Overrides& o, bool has_seed) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("--config", "cannot read '" + o.config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config_text(ss.str());
    if (has_seed) c.seed = o.seed;
    if (!o.kind.empty()) {
        c.study_kind = o.kind;
        validate(c);
    }
    if (!o.out_path.empty()) c.output_path = o.out_path;
    return c;
}

}  // namespace detail

/// Entry point: flags override config values, which override defaults.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Moments of shape-perturbed sphere transmission problems", "sphere-moments"};
    app.require_subcommand(1);
    detail::Overrides o;
    std::map<std::string, CLI::Option*> seed_opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON run configuration")->required();
        sub->add_option("--out", o.out_path, "write CSV here instead of stdout");
        seed_opts[sub->get_name()] = sub->add_option("--seed", o.seed, "random seed");
    };
    CLI::App* sd = app.add_subcommand("shape-derivative", "u' at the evaluation points");
    CLI::App* mo = app.add_subcommand("moments", "k-th moment of u' by the sparse tensor solve");
    CLI::App* st = app.add_subcommand("study", "linearization or convergence study");
    CLI::App* va = app.add_subcommand("validate", "Monte Carlo against quadrature on example1");
    for (CLI::App* s : {sd, mo, st, va}) add_common(s);
    st->add_option("--kind", o.kind, "linearization|convergence")->check(CLI::IsMember({"linearization", "convergence"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        const RunConfig c = detail::load(o, seed_opts.at(chosen->get_name())->count() > 0);
        CommandResult r;
        if (chosen == sd) r = cmd_shape_derivative(c);
        if (chosen == mo) r = cmd_moments(c);
        if (chosen == st) r = cmd_study(c);
        if (chosen == va) r = cmd_validate(c);
        for (const std::string& w : r.warnings) err << "warning: " << w << "\n";
        if (c.output_path.empty()) {
            out << r.csv;
        } else {
            std::ofstream f(c.output_path, std::ios::binary);
            if (!f) throw ConfigError("output_path", "cannot write '" + c.output_path + "'");
            f << r.csv;
        }
        return r.status;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const UnsupportedModelError& e) {
        err << "error: unsupported model: " << e.what() << "\n";
    }
    return kExitConfig;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace sphere_moments::cli
