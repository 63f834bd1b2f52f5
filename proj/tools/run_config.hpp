// SPDX-License-Identifier: Apache-2.0
//
// JSON run configuration for the sphere-moments tool.
//
// {
//   "benchmark": "example1" | "example2",
//   "alpha_minus": 2.0, "alpha_plus": 1.0, "epsilon": 0.1,
//   "band_limit": 8, "cross_order": 8, "moment_order": 2,
//   "kappa": {"type": "constant", "value": 1.0}
//          | {"type": "coefficients", "entries": [{"l": 1, "m": 0, "value": 0.5}]}
//          | {"type": "modes", "modes": [{"sigma": 0.3, "entries": [...]}]},
//   "evaluation_points": [[0, 0, 0.2], [0, 0, 5]],
//   "epsilons": [0.2, 0.1, 0.05, 0.025], "quantity": "mean",
//   "p_list": [4, 8, 16, 32], "reference_p": 64, "nominal_band": 0,
//   "study_kind": "linearization", "seed": 1, "mc_samples": 100000,
//   "quadrature_nodes": 64, "output_path": ""
// }
//
// Every key is optional; command-line flags override file values.
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"
#include "sphere_moments/layer_operators.hpp"
#include "sphere_moments/tensor_moments.hpp"
#include "sphere_moments/validation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace sphere_moments::cli {

using nlohmann::json;

/// Invalid configuration; the message names the field.
class ConfigError : public UsageError {
public:
    ConfigError(const std::string& field, const std::string& what)
        : UsageError("config field '" + field + "': " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct KappaEntry {
    int l;
    int m;
    double value;
};

struct KappaMode {
    double sigma;  // ignored for single-mode specs (uniform amplitude)
    std::vector<KappaEntry> entries;
};

struct KappaSpec {
    std::string type = "constant";
    double value = 1.0;
    std::vector<KappaMode> modes;  // coefficients: a single mode
};

struct RunConfig {
    std::string benchmark = "example1";
    double alpha_minus = 2.0;
    double alpha_plus = 1.0;
    double epsilon = 0.1;
    int band_limit = 8;
    int cross_order = 8;
    int moment_order = 2;
    KappaSpec kappa;
    std::vector<Vec3> evaluation_points{{0.0, 0.0, 0.2}, {0.0, 0.0, 0.5}, {0.0, 0.0, 5.0}};
    std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
    std::string quantity = "mean";
    std::vector<int> p_list{4, 8, 16, 32};
    int reference_p = 64;
    int nominal_band = 0;
    std::string study_kind = "linearization";
    std::uint64_t seed = 1;
    std::uint64_t mc_samples = 100000;
    int quadrature_nodes = 64;
    std::string output_path;

    TransmissionCoefficients tc() const { return {alpha_minus, alpha_plus}; }
};

namespace detail {

template <class T>
T get_field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, std::string("wrong type (") + j.at(key).type_name() + ")");
    }
}

inline std::vector<KappaEntry> parse_entries(const json& j, const std::string& field) {
    if (!j.is_array()) throw ConfigError(field, "expected an array of {l, m, value}");
    std::vector<KappaEntry> out;
    for (const json& e : j) {
        if (!e.is_object() || !e.contains("l") || !e.contains("m") || !e.contains("value")) {
            throw ConfigError(field, "each entry needs l, m and value");
        }
        try {
            out.push_back({e.at("l").get<int>(), e.at("m").get<int>(), e.at("value").get<double>()});
        } catch (const json::exception&) {
            throw ConfigError(field, "entries must hold integer l, m and real value");
        }
    }
    return out;
}

inline KappaSpec parse_kappa(const json& j) {
    KappaSpec k;
    if (!j.is_object()) throw ConfigError("kappa", "expected an object");
    k.type = get_field<std::string>(j, "type", "constant");
    if (k.type == "constant") {
        k.value = get_field<double>(j, "value", 1.0);
    } else if (k.type == "coefficients") {
        if (!j.contains("entries")) throw ConfigError("kappa.entries", "missing");
        k.modes.push_back({1.0, parse_entries(j.at("entries"), "kappa.entries")});
    } else if (k.type == "modes") {
        if (!j.contains("modes") || !j.at("modes").is_array()) throw ConfigError("kappa.modes", "expected an array");
        for (const json& m : j.at("modes")) {
            if (!m.is_object() || !m.contains("sigma") || !m.contains("entries")) {
                throw ConfigError("kappa.modes", "each mode needs sigma and entries");
            }
            k.modes.push_back({get_field<double>(m, "sigma", 0.0), parse_entries(m.at("entries"), "kappa.modes.entries")});
        }
        if (k.modes.empty()) throw ConfigError("kappa.modes", "at least one mode required");
    } else {
        throw ConfigError("kappa.type", "expected constant|coefficients|modes, got '" + k.type + "'");
    }
    return k;
}

inline json kappa_to_json(const KappaSpec& k) {
    json j{{"type", k.type}};
    auto entries = [](const std::vector<KappaEntry>& es) {
        json a = json::array();
        for (const KappaEntry& e : es) a.push_back({{"l", e.l}, {"m", e.m}, {"value", e.value}});
        return a;
    };
    if (k.type == "constant") j["value"] = k.value;
    if (k.type == "coefficients") j["entries"] = entries(k.modes.at(0).entries);
    if (k.type == "modes") {
        j["modes"] = json::array();
        for (const KappaMode& m : k.modes) j["modes"].push_back({{"sigma", m.sigma}, {"entries", entries(m.entries)}});
    }
    return j;
}

}  // namespace detail

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "benchmark", "alpha_minus", "alpha_plus", "epsilon", "band_limit", "cross_order", "moment_order",
        "kappa", "evaluation_points", "epsilons", "quantity", "p_list", "reference_p", "nominal_band",
        "study_kind", "seed", "mc_samples", "quadrature_nodes", "output_path"};
    return keys;
}

/// Checks the invariants every command relies on.
inline void validate(const RunConfig& c) {
    if (c.benchmark != "example1" && c.benchmark != "example2") {
        throw ConfigError("benchmark", "expected example1|example2, got '" + c.benchmark + "'");
    }
    if (!(c.alpha_minus > 0.0) || !std::isfinite(c.alpha_minus)) throw ConfigError("alpha_minus", "must be positive");
    if (!(c.alpha_plus > 0.0) || !std::isfinite(c.alpha_plus)) throw ConfigError("alpha_plus", "must be positive");
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("epsilon", "must lie in (0, 1)");
    if (c.moment_order < 1) throw ConfigError("moment_order", "must be at least 1");
    if (c.cross_order < 0) throw ConfigError("cross_order", "must be nonnegative");
    if (c.band_limit < c.cross_order) throw ConfigError("band_limit", "must be at least cross_order");
    if (c.nominal_band < 0) throw ConfigError("nominal_band", "must be nonnegative (0 selects the default)");
    if (c.evaluation_points.empty()) throw ConfigError("evaluation_points", "at least one point required");
    for (const Vec3& p : c.evaluation_points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
            throw ConfigError("evaluation_points", "coordinates must be finite");
        }
        if (std::abs(norm(p) - 1.0) <= kInterfaceTolerance) {
            throw ConfigError("evaluation_points", "points on the unit sphere are not supported");
        }
    }
    for (double e : c.epsilons) {
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("epsilons", "values must lie in (0, 1)");
    }
    try {
        parse_study_quantity(c.quantity);
    } catch (const UsageError&) {
        throw ConfigError("quantity", "expected mean|covariance|raw|central, got '" + c.quantity + "'");
    }
    for (int p : c.p_list) {
        if (p < 0) throw ConfigError("p_list", "orders must be nonnegative");
    }
    if (c.reference_p < 0) throw ConfigError("reference_p", "must be nonnegative");
    if (c.study_kind != "linearization" && c.study_kind != "convergence") {
        throw ConfigError("study_kind", "expected linearization|convergence, got '" + c.study_kind + "'");
    }
    if (c.mc_samples < 2) throw ConfigError("mc_samples", "must be at least 2");
    if (c.quadrature_nodes < 2) throw ConfigError("quadrature_nodes", "must be at least 2");
    if (c.kappa.type != "constant") {
        for (const KappaMode& m : c.kappa.modes) {
            if (!(m.sigma >= 0.0)) throw ConfigError("kappa.modes", "sigma must be nonnegative");
            for (const KappaEntry& e : m.entries) {
                if (e.l < 0 || e.m < -e.l || e.m > e.l) throw ConfigError("kappa.entries", "invalid (l, m)");
                if (e.l > c.cross_order) throw ConfigError("kappa.entries", "degree exceeds cross_order");
            }
        }
    }
}

inline RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known_keys().count(it.key())) throw ConfigError(it.key(), "unknown key");
    }
    RunConfig c;
    c.benchmark = detail::get_field(j, "benchmark", c.benchmark);
    c.alpha_minus = detail::get_field(j, "alpha_minus", c.alpha_minus);
    c.alpha_plus = detail::get_field(j, "alpha_plus", c.alpha_plus);
    c.epsilon = detail::get_field(j, "epsilon", c.epsilon);
    c.band_limit = detail::get_field(j, "band_limit", c.band_limit);
    c.cross_order = detail::get_field(j, "cross_order", c.cross_order);
    if (j.contains("cross_order") && !j.contains("band_limit")) c.band_limit = std::max(c.band_limit, c.cross_order);
    c.moment_order = detail::get_field(j, "moment_order", c.moment_order);
    if (j.contains("kappa")) c.kappa = detail::parse_kappa(j.at("kappa"));
    if (j.contains("evaluation_points")) {
        const json& pts = j.at("evaluation_points");
        if (!pts.is_array()) throw ConfigError("evaluation_points", "expected an array of [x, y, z]");
        c.evaluation_points.clear();
        for (const json& p : pts) {
            if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
                throw ConfigError("evaluation_points", "each point must be [x, y, z]");
            }
            c.evaluation_points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        }
    }
    c.epsilons = detail::get_field(j, "epsilons", c.epsilons);
    c.quantity = detail::get_field(j, "quantity", c.quantity);
    c.p_list = detail::get_field(j, "p_list", c.p_list);
    c.reference_p = detail::get_field(j, "reference_p", c.reference_p);
    c.nominal_band = detail::get_field(j, "nominal_band", c.nominal_band);
    c.study_kind = detail::get_field(j, "study_kind", c.study_kind);
    if (j.contains("seed") && !(j.at("seed").is_number_unsigned() || (j.at("seed").is_number_integer() &&
                                                                      j.at("seed").get<long long>() >= 0))) {
        throw ConfigError("seed", "must be a nonnegative integer");
    }
    c.seed = detail::get_field(j, "seed", c.seed);
    if (j.contains("mc_samples") && !j.at("mc_samples").is_number_integer()) {
        throw ConfigError("mc_samples", "must be an integer");
    }
    if (j.contains("mc_samples") && j.at("mc_samples").get<long long>() < 2) {
        throw ConfigError("mc_samples", "must be at least 2");
    }
    c.mc_samples = detail::get_field(j, "mc_samples", c.mc_samples);
    c.quadrature_nodes = detail::get_field(j, "quadrature_nodes", c.quadrature_nodes);
    c.output_path = detail::get_field(j, "output_path", c.output_path);
    validate(c);
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

/// The resolved configuration, without the output path.
inline json to_json(const RunConfig& c) {
    json pts = json::array();
    for (const Vec3& p : c.evaluation_points) pts.push_back({p[0], p[1], p[2]});
    return json{{"benchmark", c.benchmark},
                {"alpha_minus", c.alpha_minus},
                {"alpha_plus", c.alpha_plus},
                {"epsilon", c.epsilon},
                {"band_limit", c.band_limit},
                {"cross_order", c.cross_order},
                {"moment_order", c.moment_order},
                {"kappa", detail::kappa_to_json(c.kappa)},
                {"evaluation_points", pts},
                {"epsilons", c.epsilons},
                {"quantity", c.quantity},
                {"p_list", c.p_list},
                {"reference_p", c.reference_p},
                {"nominal_band", c.nominal_band},
                {"study_kind", c.study_kind},
                {"seed", c.seed},
                {"mc_samples", c.mc_samples},
                {"quadrature_nodes", c.quadrature_nodes}};
}

/// 64-bit FNV-1a of the resolved config's compact JSON, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// The perturbation model named by the kappa spec.
inline PerturbationModel make_model(const RunConfig& c) {
    auto field = [&](const std::vector<KappaEntry>& entries) {
        SpectralField f(c.cross_order);
        for (const KappaEntry& e : entries) f(e.l, e.m) += e.value;
        return f;
    };
    if (c.kappa.type == "constant") {
        SpectralField f(c.cross_order);
        f(0, 0) = c.kappa.value * std::sqrt(4.0 * std::numbers::pi);
        return PerturbationModel::uniform(f, std::max(8, c.moment_order));
    }
    if (c.kappa.type == "coefficients") {
        return PerturbationModel::uniform(field(c.kappa.modes.at(0).entries), std::max(8, c.moment_order));
    }
    PerturbationModel m;
    for (const KappaMode& mode : c.kappa.modes) m.modes.push_back({mode.sigma, field(mode.entries)});
    return m;
}

}  // namespace sphere_moments::cli
