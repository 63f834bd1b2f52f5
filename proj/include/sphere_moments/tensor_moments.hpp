// SPDX-License-Identifier: Apache-2.0
//
// k-th moments of the shape-derivative trace on hyperbolic-cross tensor
// spaces. With kappa = sum_j a_j phi_j the trace is linear in kappa, so
// M^k[u'] solves ([[alpha S]] x ... x [[alpha S]]) M = E[b x ... x b],
// b = g_N - alpha S g_D. The operator is diagonal in the harmonic basis.
#pragma once

#include "sphere_moments/errors.hpp"
#include "sphere_moments/harmonics.hpp"
#include "sphere_moments/layer_operators.hpp"
#include "sphere_moments/shape_derivative.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sphere_moments {

using DegreeTuple = std::vector<int>;

/// delta_p = { (l_1, ..., l_k) : prod (1 + l_i) <= 1 + p }.
class HyperbolicCross {
public:
    HyperbolicCross(int order, int legs) : order_(order), legs_(legs) {
        if (order < 0) throw UsageError("cross order must be nonnegative");
        if (legs < 1) throw UsageError("cross needs at least one leg");
        DegreeTuple prefix;
        enumerate(prefix, 1);
        for (std::size_t i = 0; i < tuples_.size(); ++i) position_.emplace(tuples_[i], i);
    }

    int order() const { return order_; }
    int legs() const { return legs_; }
    /// Lexicographically ordered degree tuples.
    const std::vector<DegreeTuple>& degree_tuples() const { return tuples_; }

    bool contains(std::span<const int> degrees) const {
        if (static_cast<int>(degrees.size()) != legs_) return false;
        long long product = 1;
        for (int l : degrees) {
            if (l < 0) return false;
            product *= 1 + l;
            if (product > 1 + order_) return false;
        }
        return true;
    }

    /// Position of a degree tuple in degree_tuples(), if present.
    std::optional<std::size_t> position(const DegreeTuple& degrees) const {
        const auto it = position_.find(degrees);
        if (it == position_.end()) return std::nullopt;
        return it->second;
    }

    /// Scalar unknowns, counting every order m on every leg.
    std::size_t unknown_count() const {
        std::size_t n = 0;
        for (const DegreeTuple& t : tuples_) n += block_size(t);
        return n;
    }

    static std::size_t block_size(const DegreeTuple& degrees) {
        std::size_t n = 1;
        for (int l : degrees) n *= static_cast<std::size_t>(2 * l + 1);
        return n;
    }

    bool operator==(const HyperbolicCross& other) const { return order_ == other.order_ && legs_ == other.legs_; }

private:
    void enumerate(DegreeTuple& prefix, long long product) {
        if (static_cast<int>(prefix.size()) == legs_) {
            tuples_.push_back(prefix);
            return;
        }
        for (int l = 0; product * (1 + l) <= 1 + order_; ++l) {
            prefix.push_back(l);
            enumerate(prefix, product * (1 + l));
            prefix.pop_back();
        }
    }

    int order_;
    int legs_;
    std::vector<DegreeTuple> tuples_;
    std::map<DegreeTuple, std::size_t> position_;
};

inline HyperbolicCross build_cross(int order, int legs) { return {order, legs}; }

/// Coefficients on a hyperbolic cross. Degree tuples are stored as dense
/// blocks; inside a block the orders run (m_1 + l_1) slowest to
/// (m_k + l_k) fastest. Each leg records which trace it represents.
class TensorSpectralField {
public:
    explicit TensorSpectralField(HyperbolicCross cross)
        : TensorSpectralField(std::move(cross), std::vector<Side>()) {}

    TensorSpectralField(HyperbolicCross cross, std::vector<Side> leg_sides)
        : cross_(std::move(cross)), leg_sides_(std::move(leg_sides)) {
        if (leg_sides_.empty()) leg_sides_.assign(cross_.legs(), Side::Exterior);
        if (static_cast<int>(leg_sides_.size()) != cross_.legs()) throw UsageError("one side per leg required");
        offsets_.reserve(cross_.degree_tuples().size() + 1);
        std::size_t total = 0;
        for (const DegreeTuple& t : cross_.degree_tuples()) {
            offsets_.push_back(total);
            total += HyperbolicCross::block_size(t);
        }
        offsets_.push_back(total);
        values_.assign(total, 0.0);
    }

    const HyperbolicCross& cross() const { return cross_; }
    int legs() const { return cross_.legs(); }
    const std::vector<Side>& leg_sides() const { return leg_sides_; }
    std::size_t size() const { return values_.size(); }

    std::span<double> block(std::size_t tuple_position) {
        return {values_.data() + offsets_[tuple_position], offsets_[tuple_position + 1] - offsets_[tuple_position]};
    }
    std::span<const double> block(std::size_t tuple_position) const {
        return {values_.data() + offsets_[tuple_position], offsets_[tuple_position + 1] - offsets_[tuple_position]};
    }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Entry at a full index tuple; zero outside the cross.
    double at(std::span<const HarmonicIndex> index) const {
        const auto slot = locate(index);
        return slot ? values_[*slot] : 0.0;
    }
    double& at(std::span<const HarmonicIndex> index) {
        const auto slot = locate(index);
        if (!slot) throw UsageError("index tuple lies outside the hyperbolic cross");
        return values_[*slot];
    }
    double at(std::initializer_list<HarmonicIndex> index) const {
        return at(std::span<const HarmonicIndex>(index.begin(), index.size()));
    }
    double& at(std::initializer_list<HarmonicIndex> index) {
        return at(std::span<const HarmonicIndex>(index.begin(), index.size()));
    }

    /// Calls f(degrees, flat_orders_offset_into_block, value) for every entry.
    template <class F>
    void for_each(F&& f) const {
        const auto& tuples = cross_.degree_tuples();
        for (std::size_t b = 0; b < tuples.size(); ++b) {
            const auto blk = block(b);
            for (std::size_t i = 0; i < blk.size(); ++i) f(tuples[b], i, blk[i]);
        }
    }

    TensorSpectralField& operator+=(const TensorSpectralField& o) {
        require_same_layout(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    TensorSpectralField& operator-=(const TensorSpectralField& o) {
        require_same_layout(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    TensorSpectralField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend TensorSpectralField operator-(TensorSpectralField a, const TensorSpectralField& b) { return a -= b; }
    friend TensorSpectralField operator+(TensorSpectralField a, const TensorSpectralField& b) { return a += b; }
    friend TensorSpectralField operator*(double s, TensorSpectralField a) { return a *= s; }

private:
    std::optional<std::size_t> locate(std::span<const HarmonicIndex> index) const {
        if (static_cast<int>(index.size()) != legs()) throw UsageError("index tuple has the wrong number of legs");
        DegreeTuple degrees(index.size());
        for (std::size_t i = 0; i < index.size(); ++i) degrees[i] = index[i].degree;
        const auto pos = cross_.position(degrees);
        if (!pos) return std::nullopt;
        std::size_t inner = 0;
        for (std::size_t i = 0; i < index.size(); ++i) {
            inner = inner * static_cast<std::size_t>(2 * degrees[i] + 1) +
                    static_cast<std::size_t>(index[i].order + degrees[i]);
        }
        return offsets_[*pos] + inner;
    }

    void require_same_layout(const TensorSpectralField& o) const {
        if (!(cross_ == o.cross_) || leg_sides_ != o.leg_sides_) throw UsageError("tensor fields have different layouts");
    }

    HyperbolicCross cross_;
    std::vector<Side> leg_sides_;
    std::vector<std::size_t> offsets_;
    std::vector<double> values_;
};

/// sqrt(sum prod (1 + l_i)^{2s} c^2).
inline double mixed_sobolev_norm(const TensorSpectralField& field, double s) {
    double acc = 0.0;
    const auto& tuples = field.cross().degree_tuples();
    for (std::size_t b = 0; b < tuples.size(); ++b) {
        double weight = 1.0;
        for (int l : tuples[b]) weight *= std::pow(1.0 + l, 2.0 * s);
        double block_sum = 0.0;
        for (double c : field.block(b)) block_sum += c * c;
        acc += weight * block_sum;
    }
    return std::sqrt(acc);
}

/// Copy of `field` on a smaller (or equal) cross.
inline TensorSpectralField restrict_to(const TensorSpectralField& field, const HyperbolicCross& cross) {
    if (cross.legs() != field.legs()) throw UsageError("cross has the wrong number of legs");
    if (cross.order() > field.cross().order()) throw UsageError("restriction target must not exceed the source cross");
    TensorSpectralField out(cross, field.leg_sides());
    const auto& tuples = cross.degree_tuples();
    for (std::size_t b = 0; b < tuples.size(); ++b) {
        const auto src = field.block(*field.cross().position(tuples[b]));
        std::copy(src.begin(), src.end(), out.block(b).begin());
    }
    return out;
}

/// max |c((l1,m1),(l2,m2)) - c((l2,m2),(l1,m1))| for a two-leg field.
inline double exchange_asymmetry(const TensorSpectralField& field) {
    if (field.legs() != 2) throw UsageError("exchange symmetry is defined for two legs");
    double worst = 0.0;
    const auto& tuples = field.cross().degree_tuples();
    for (std::size_t b = 0; b < tuples.size(); ++b) {
        const int l1 = tuples[b][0], l2 = tuples[b][1];
        const auto mine = field.block(b);
        const auto theirs = field.block(*field.cross().position({l2, l1}));
        for (int i = 0; i < 2 * l1 + 1; ++i) {
            for (int j = 0; j < 2 * l2 + 1; ++j) {
                worst = std::max(worst, std::abs(mine[i * (2 * l2 + 1) + j] - theirs[j * (2 * l1 + 1) + i]));
            }
        }
    }
    return worst;
}

/// Adds scale * (v_1 x ... x v_k) restricted to the cross.
inline void accumulate_outer_product(TensorSpectralField& target, std::span<const SpectralField> legs, double scale) {
    if (static_cast<int>(legs.size()) != target.legs()) throw UsageError("one leg vector per tensor leg required");
    const auto& tuples = target.cross().degree_tuples();
    std::vector<double> partial;
    for (std::size_t b = 0; b < tuples.size(); ++b) {
        const DegreeTuple& t = tuples[b];
        partial.assign(1, scale);
        for (std::size_t leg = 0; leg < t.size(); ++leg) {
            const int l = t[leg];
            std::vector<double> next;
            next.reserve(partial.size() * (2 * l + 1));
            for (double p : partial) {
                for (int m = -l; m <= l; ++m) next.push_back(p * legs[leg][HarmonicIndex(l, m)]);
            }
            partial.swap(next);
        }
        auto blk = target.block(b);
        for (std::size_t i = 0; i < blk.size(); ++i) blk[i] += partial[i];
    }
}

/// Separable random perturbation kappa(x, w) = sum_j a_j(w) phi_j(x) with
/// uncorrelated centered amplitudes, E[a_j^2] = sigma_j, so that
/// Cov[kappa](x, y) = sum_j sigma_j phi_j(x) phi_j(y).
struct PerturbationModel {
    struct Mode {
        double sigma;
        SpectralField phi;
    };
    using Kernel = std::function<double(const Vec3&, const Vec3&)>;

    std::vector<Mode> modes;
    /// Single-mode only: amplitude_moments[n - 1] = E[a^n].
    std::vector<double> amplitude_moments;
    /// Set when the covariance is only known as a kernel; not supported.
    Kernel non_separable_kernel;

    void validate() const {
        if (non_separable_kernel) throw UnsupportedModelError("non-separable covariance kernels are not supported");
        for (const Mode& m : modes) {
            if (!(m.sigma >= 0.0)) throw UsageError("mode weights must be nonnegative");
        }
        if (!amplitude_moments.empty()) {
            if (modes.size() != 1) throw UsageError("amplitude moments require a single-mode model");
            if (amplitude_moments[0] != 0.0) throw UsageError("perturbation amplitude must be centered, E[a] = 0");
            if (amplitude_moments.size() >= 2 && amplitude_moments[1] != modes[0].sigma) {
                throw UsageError("E[a^2] must equal the mode weight");
            }
        }
    }

    int band_limit() const {
        int b = 0;
        for (const Mode& m : modes) b = std::max(b, m.phi.band_limit());
        return b;
    }

    /// E[a^n]; n = 0 gives 1.
    double amplitude_moment(int n) const {
        if (n == 0) return 1.0;
        if (n < 0 || n > static_cast<int>(amplitude_moments.size())) {
            throw UsageError("amplitude moment of order " + std::to_string(n) + " is not available");
        }
        return amplitude_moments[n - 1];
    }

    /// kappa = a phi with a ~ U[-1, 1]: E[a^n] = 1/(n+1) for even n, 0 otherwise.
    static PerturbationModel uniform(SpectralField phi, int max_moment = 8) {
        PerturbationModel model;
        model.modes.push_back({1.0 / 3.0, std::move(phi)});
        for (int n = 1; n <= max_moment; ++n) model.amplitude_moments.push_back(n % 2 == 0 ? 1.0 / (n + 1) : 0.0);
        model.validate();
        return model;
    }
};

/// b = g_N - alpha S g_D for kappa = phi, projected to degree `band_limit`:
/// alpha- S- on the exterior leg, alpha+ S+ on the interior leg.
inline SpectralField leg_vector(const TransmissionCoefficients& tc, const NominalTraceData& nominal,
                                const SpectralField& phi, int band_limit, Side side) {
    const ProjectedField gd = build_dirichlet_jump(nominal, phi, band_limit);
    const ProjectedField gn = build_neumann_jump(nominal, phi, band_limit);
    return jump_equation_rhs(tc, gd.field, gn.field, side);
}

namespace detail {

inline void check_cross_band(const PerturbationModel& model, const HyperbolicCross& cross) {
    if (model.band_limit() > cross.order()) throw UsageError("perturbation modes exceed the cross order");
}

}  // namespace detail

/// sum_j sigma_j b_j x b_j with per-leg sides (interior leg: u'_- trace).
inline TensorSpectralField assemble_second_moment_rhs(const TransmissionCoefficients& tc,
                                                      const NominalTraceData& nominal, const PerturbationModel& model,
                                                      const HyperbolicCross& cross, std::array<Side, 2> sides) {
    model.validate();
    if (cross.legs() != 2) throw UsageError("second moments need a two-leg cross");
    detail::check_cross_band(model, cross);
    TensorSpectralField rhs(cross, {sides[0], sides[1]});
    for (const PerturbationModel::Mode& mode : model.modes) {
        if (mode.sigma == 0.0) continue;
        const SpectralField b0 = leg_vector(tc, nominal, mode.phi, cross.order(), sides[0]);
        const SpectralField b1 = sides[1] == sides[0] ? b0 : leg_vector(tc, nominal, mode.phi, cross.order(), sides[1]);
        const std::array<SpectralField, 2> legs{b0, b1};
        accumulate_outer_product(rhs, legs, mode.sigma);
    }
    return rhs;
}

inline TensorSpectralField assemble_second_moment_rhs(const TransmissionCoefficients& tc,
                                                      const NominalTraceData& nominal, const PerturbationModel& model,
                                                      const HyperbolicCross& cross, Side side) {
    return assemble_second_moment_rhs(tc, nominal, model, cross, {side, side});
}

/// E[(b a)^{x k}]; multi-mode models are limited to k <= 2.
inline TensorSpectralField assemble_kth_moment_rhs(const TransmissionCoefficients& tc,
                                                   const NominalTraceData& nominal, const PerturbationModel& model,
                                                   int k, const HyperbolicCross& cross, std::vector<Side> sides) {
    model.validate();
    if (k < 1 || cross.legs() != k) throw UsageError("cross must have k legs");
    if (static_cast<int>(sides.size()) != k) throw UsageError("one side per leg required");
    if (k == 2 && model.amplitude_moments.empty()) {
        return assemble_second_moment_rhs(tc, nominal, model, cross, {sides[0], sides[1]});
    }
    if (model.modes.size() > 1) {
        if (k > 2) throw UnsupportedModelError("k-th moments of multi-mode models need joint amplitude moments");
        return TensorSpectralField(cross, sides);  // k = 1: centered
    }
    detail::check_cross_band(model, cross);
    TensorSpectralField rhs(cross, sides);
    if (model.modes.empty()) return rhs;
    const double moment = k == 1 ? 0.0 : model.amplitude_moment(k);
    if (moment == 0.0) return rhs;
    std::vector<SpectralField> legs;
    for (Side s : sides) legs.push_back(leg_vector(tc, nominal, model.modes[0].phi, cross.order(), s));
    accumulate_outer_product(rhs, legs, moment);
    return rhs;
}

inline TensorSpectralField assemble_kth_moment_rhs(const TransmissionCoefficients& tc,
                                                   const NominalTraceData& nominal, const PerturbationModel& model,
                                                   int k, const HyperbolicCross& cross, Side side) {
    return assemble_kth_moment_rhs(tc, nominal, model, k, cross, std::vector<Side>(k, side));
}

/// Divides each entry by prod_i lambda_{l_i}([[alpha S]]).
inline TensorSpectralField solve_kth_moment(const TransmissionCoefficients& tc, const TensorSpectralField& rhs, int k) {
    if (rhs.legs() != k) throw UsageError("right side has the wrong number of legs");
    TensorSpectralField out = rhs;
    const auto& tuples = rhs.cross().degree_tuples();
    std::vector<double> lambda(rhs.cross().order() + 1);
    for (int l = 0; l <= rhs.cross().order(); ++l) lambda[l] = operator_eigenvalue(OperatorKind::JumpAlphaS, tc, l);
    for (std::size_t b = 0; b < tuples.size(); ++b) {
        double product = 1.0;
        for (int l : tuples[b]) product *= lambda[l];
        for (double& v : out.block(b)) v /= product;
    }
    return out;
}

inline TensorSpectralField solve_second_moment(const TransmissionCoefficients& tc, const TensorSpectralField& rhs) {
    return solve_kth_moment(tc, rhs, 2);
}

namespace detail {

inline std::vector<std::vector<double>> leg_extensions(const TensorSpectralField& moment,
                                                       std::span<const Vec3> points) {
    if (static_cast<int>(points.size()) != moment.legs()) throw UsageError("one point per tensor leg required");
    std::vector<std::vector<double>> ext;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Side side = side_of(points[i]);
        if (side != moment.leg_sides()[i]) {
            throw UsageError("point " + std::to_string(i) + " lies on the other side of the interface than its leg");
        }
        ext.push_back(extension_basis(side, points[i], moment.cross().order()));
    }
    return ext;
}

inline double contract_block(const DegreeTuple& t, std::span<const double> blk,
                             const std::vector<std::vector<double>>& ext) {
    // contract the fastest leg first, then fold outwards
    std::vector<double> cur(blk.begin(), blk.end());
    for (std::size_t leg = t.size(); leg-- > 0;) {
        const int l = t[leg];
        const std::size_t width = 2 * l + 1;
        const double* e = ext[leg].data() + flat_index(l, -l);
        std::vector<double> next(cur.size() / width, 0.0);
        for (std::size_t i = 0; i < next.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < width; ++j) s += cur[i * width + j] * e[j];
            next[i] = s;
        }
        cur.swap(next);
    }
    return cur[0];
}

}  // namespace detail

/// (E x ... x E) M evaluated at one point per leg.
inline double propagate_moment(const TensorSpectralField& moment, std::span<const Vec3> points) {
    const auto ext = detail::leg_extensions(moment, points);
    double acc = 0.0;
    const auto& tuples = moment.cross().degree_tuples();
    for (std::size_t b = 0; b < tuples.size(); ++b) acc += detail::contract_block(tuples[b], moment.block(b), ext);
    return acc;
}

/// The part of propagate_moment carried by tuples outside `excluded`:
/// the truncation error of the same problem solved on the smaller cross.
inline double propagate_moment_tail(const TensorSpectralField& moment, const HyperbolicCross& excluded,
                                    std::span<const Vec3> points) {
    const auto ext = detail::leg_extensions(moment, points);
    double acc = 0.0;
    const auto& tuples = moment.cross().degree_tuples();
    for (std::size_t b = 0; b < tuples.size(); ++b) {
        if (excluded.contains(tuples[b])) continue;
        acc += detail::contract_block(tuples[b], moment.block(b), ext);
    }
    return acc;
}

/// Cov[u'](x1, x2) from the trace second moment (u' is centered).
inline double propagate_covariance(const TensorSpectralField& moment, const Vec3& x1, const Vec3& x2) {
    const std::array<Vec3, 2> points{x1, x2};
    return propagate_moment(moment, points);
}

/// Leg sides matching a pair of evaluation points.
inline std::array<Side, 2> sides_of(const Vec3& x1, const Vec3& x2) { return {side_of(x1), side_of(x2)}; }

}  // namespace sphere_moments
