#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::polyseq {

/// Degree and coefficient bounds shared by every polynomial of a sequence:
/// degrees in [2, d], leading coefficients in [1/K, K] by modulus, all other
/// coefficients at most M in modulus.
struct Bounds {
    int d = 2;
    double K = 1.0;
    double M = 0.0;

    void validate() const {
        if (d < 2) throw BoundsViolation("Bounds: d must be >= 2");
        if (!(K >= 1.0)) throw BoundsViolation("Bounds: K must be >= 1");
        if (!(M >= 0.0)) throw BoundsViolation("Bounds: M must be >= 0");
    }
};

/// One polynomial, ascending coefficients a_0..a_deg with a_deg != 0.
class PolySpec {
public:
    PolySpec() = default;
    explicit PolySpec(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
        while (coeffs_.size() > 1 && std::abs(coeffs_.back()) == 0.0) coeffs_.pop_back();
        if (coeffs_.size() < 2) throw BoundsViolation("PolySpec: degree must be >= 1");
    }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<cplx>& coeffs() const { return coeffs_; }
    cplx lead() const { return coeffs_.back(); }

    cplx eval(cplx z) const {
        cplx v = coeffs_.back();
        for (int i = degree() - 1; i >= 0; --i) v = v * z + coeffs_[i];
        return v;
    }

    cplx eval_derivative(cplx z) const {
        const int deg = degree();
        cplx v = coeffs_[deg] * static_cast<double>(deg);
        for (int i = deg - 1; i >= 1; --i) v = v * z + coeffs_[i] * static_cast<double>(i);
        return v;
    }

    void check_bounds(const Bounds& b) const {
        if (degree() < 2 || degree() > b.d)
            throw BoundsViolation("PolySpec: degree " + std::to_string(degree()) +
                                  " outside [2, " + std::to_string(b.d) + "]");
        const double la = std::abs(lead());
        // tiny slack so conjugated leads a hair outside the band still pass
        if (la < 1.0 / b.K * (1 - 1e-12) || la > b.K * (1 + 1e-12))
            throw BoundsViolation("PolySpec: leading coefficient modulus " +
                                  std::to_string(la) + " outside [1/K, K]");
        for (int i = 0; i < degree(); ++i)
            if (std::abs(coeffs_[i]) > b.M * (1 + 1e-12))
                throw BoundsViolation("PolySpec: coefficient " + std::to_string(i) +
                                      " exceeds M");
    }

    bool operator==(const PolySpec& o) const { return coeffs_ == o.coeffs_; }

private:
    std::vector<cplx> coeffs_;
};

class SequenceSpec;

struct ConstantRule {
    PolySpec poly;
};

struct PeriodicRule {
    std::vector<PolySpec> polys; // P_1..P_p, then repeats
};

struct TailRule {
    std::variant<ConstantRule, PeriodicRule> rule;
};

struct PrefixThenTailRule {
    std::vector<PolySpec> prefix; // P_1..P_len
    TailRule tail;                // indices past the prefix, phase-aligned to m - len
};

/// Each non-frozen coefficient of the base is displaced by an independent
/// uniform draw from the disk of the matching radius. Draws are keyed by
/// (seed, m, coefficient index), so evaluation order and thread do not
/// matter and two runs with the same seed produce bit-identical streams.
struct SeededPerturbationRule {
    PolySpec base;
    std::vector<double> radii; // one per coefficient of base; 0 = frozen
    std::uint64_t seed = 0;
};

/// Affine-rescaled view of another sequence: P~_m = alpha_m P_m(z / alpha_{m-1}).
/// Valid only for m <= m_max (the precomputed scale horizon).
struct ConjugatedRule {
    std::shared_ptr<const SequenceSpec> base;
    std::vector<cplx> alphas; // scale factor at times 0..m_max
};

using Rule = std::variant<ConstantRule, PeriodicRule, PrefixThenTailRule,
                          SeededPerturbationRule, ConjugatedRule>;

/// A bounded polynomial sequence: a pure rule m -> P_m (m >= 1) plus the
/// bounds every produced polynomial must satisfy. Immutable and safe for
/// concurrent reads.
class SequenceSpec {
public:
    SequenceSpec(Rule rule, Bounds bounds)
        : rule_(std::move(rule)), bounds_(bounds) {
        bounds_.validate();
    }

    const Bounds& bounds() const { return bounds_; }
    const Rule& rule() const { return rule_; }

    /// The m-th polynomial of the sequence, m >= 1. Deterministic; the result
    /// is validated against the bounds.
    PolySpec polynomial_at(int m) const {
        if (m < 1) throw BoundsViolation("polynomial_at: m must be >= 1");
        PolySpec p = std::visit([&](const auto& r) { return produce(r, m); }, rule_);
        p.check_bounds(bounds_);
        return p;
    }

    bool is_monic(double tol = 1e-12, int probe = 64) const;

private:
    static PolySpec produce(const ConstantRule& r, int) { return r.poly; }

    static PolySpec produce(const PeriodicRule& r, int m) {
        return r.polys[static_cast<std::size_t>(m - 1) % r.polys.size()];
    }

    static PolySpec produce(const PrefixThenTailRule& r, int m) {
        const int len = static_cast<int>(r.prefix.size());
        if (m <= len) return r.prefix[m - 1];
        const int k = m - len;
        if (std::holds_alternative<ConstantRule>(r.tail.rule))
            return std::get<ConstantRule>(r.tail.rule).poly;
        return produce(std::get<PeriodicRule>(r.tail.rule), k);
    }

    static PolySpec produce(const SeededPerturbationRule& r, int m) {
        std::vector<cplx> c = r.base.coeffs();
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double rad = i < r.radii.size() ? r.radii[i] : 0.0;
            if (rad > 0.0)
                c[i] += rad * disk_draw(r.seed, static_cast<std::uint64_t>(m), i);
        }
        return PolySpec(std::move(c));
    }

    static PolySpec produce(const ConjugatedRule& r, int m) {
        if (m >= static_cast<int>(r.alphas.size()))
            throw IndexBeyondHorizon("conjugated sequence: time " + std::to_string(m) +
                                     " beyond precomputed horizon");
        const PolySpec p = r.base->polynomial_at(m);
        const cplx am = r.alphas[m];
        const cplx prev = r.alphas[m - 1];
        std::vector<cplx> c = p.coeffs();
        cplx scale(1.0, 0.0);
        for (std::size_t j = 0; j < c.size(); ++j) {
            c[j] *= am * scale;
            scale /= prev;
        }
        return PolySpec(std::move(c));
    }

    Rule rule_;
    Bounds bounds_;
};

inline bool SequenceSpec::is_monic(double tol, int probe) const {
    int upto = probe;
    if (const auto* p = std::get_if<PeriodicRule>(&rule_))
        upto = static_cast<int>(p->polys.size());
    else if (std::holds_alternative<ConstantRule>(rule_))
        upto = 1;
    else if (const auto* pt = std::get_if<PrefixThenTailRule>(&rule_)) {
        int tail = std::holds_alternative<ConstantRule>(pt->tail.rule)
                       ? 1
                       : static_cast<int>(std::get<PeriodicRule>(pt->tail.rule).polys.size());
        upto = static_cast<int>(pt->prefix.size()) + tail;
    } else if (const auto* cj = std::get_if<ConjugatedRule>(&rule_)) {
        upto = std::min(upto, static_cast<int>(cj->alphas.size()) - 1);
    } else if (const auto* sp = std::get_if<SeededPerturbationRule>(&rule_)) {
        // leading coefficient is deterministic unless its radius is nonzero
        const std::size_t lead = sp->base.coeffs().size() - 1;
        if (lead < sp->radii.size() && sp->radii[lead] > 0.0) return false;
        return std::abs(sp->base.lead() - 1.0) <= tol;
    }
    for (int m = 1; m <= upto; ++m)
        if (std::abs(polynomial_at(m).lead() - 1.0) > tol) return false;
    return true;
}

/// Running record of the composition degree D_{m,n} = prod d_i. The exact
/// integer is dropped once it would pass 2^62; logD and the reciprocal invD
/// stay meaningful far beyond that.
struct DegreeLedger {
    double logD = 0.0;
    double invD = 1.0;
    std::optional<std::uint64_t> exactD = 1;

    void push(int degree) {
        logD += std::log(static_cast<double>(degree));
        invD /= static_cast<double>(degree);
        if (exactD) {
            if (*exactD > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(degree))
                exactD.reset();
            else
                *exactD *= static_cast<std::uint64_t>(degree);
        }
    }
};

/// Orbit values past this modulus are treated as escaped to numeric infinity;
/// iteration stops and downstream formulas use the ledger at the stopping step.
inline constexpr double kOverflowCap = 1e150;

struct ComposeResult {
    cplx value;
    DegreeLedger ledger;
    std::optional<int> overflow_step; // time index at which |value| passed the cap
};

/// Q_{m,n}(z) = P_n(...P_{m+1}(z)); Q_{m,m} is the identity.
inline ComposeResult compose_eval(const SequenceSpec& spec, int m, int n, cplx z) {
    if (m < 0 || n < m) throw BoundsViolation("compose_eval: need 0 <= m <= n");
    ComposeResult r{z, {}, std::nullopt};
    for (int k = m + 1; k <= n; ++k) {
        const PolySpec p = spec.polynomial_at(k);
        r.value = p.eval(r.value);
        r.ledger.push(p.degree());
        if (std::abs(r.value) > kOverflowCap) {
            r.overflow_step = k;
            break;
        }
    }
    return r;
}

struct DerivativeResult {
    cplx value;
    std::optional<int> overflow_step;
};

/// Q'_{m,n}(z) by the chain rule along the orbit. Equals 1 when n == m.
inline DerivativeResult orbit_derivative(const SequenceSpec& spec, int m, int n, cplx z) {
    if (m < 0 || n < m) throw BoundsViolation("orbit_derivative: need 0 <= m <= n");
    cplx w = z;
    cplx dp(1.0, 0.0);
    for (int k = m + 1; k <= n; ++k) {
        const PolySpec p = spec.polynomial_at(k);
        dp *= p.eval_derivative(w);
        w = p.eval(w);
        if (std::abs(w) > kOverflowCap || std::abs(dp) > kOverflowCap)
            return {dp, k};
    }
    return {dp, std::nullopt};
}

/// Smallest R_0 (to 1e-9, and at least 2K) with
///   R^{d'} >= 2 M K sum_{i<d'} R^i   for all 2 <= d' <= d and all R >= R_0.
/// Beyond R_0 every in-band orbit is strictly increasing in modulus. For
/// monic bounds (K = 1) this is the plain leading-term domination radius.
inline double escape_radius(const Bounds& b) {
    b.validate();
    const double MK = 2.0 * b.M * b.K;
    auto holds_from = [&](double R0) {
        for (int dd = 2; dd <= b.d; ++dd) {
            // h(R) = R^dd - MK * sum_{i<dd} R^i is eventually increasing; it
            // suffices to check R0 and the stationary point of h / R^{dd-1}.
            auto h = [&](double R) {
                double s = 0.0, pw = 1.0;
                for (int i = 0; i < dd; ++i) { s += pw; pw *= R; }
                return pw - MK * s; // pw == R^dd after the loop
            };
            if (h(R0) < 0.0) return false;
            // critical point of (R-1) - MK(1 - R^-dd): R* = (MK * dd)^{1/(dd+1)}
            const double Rstar = std::pow(std::max(MK * dd, 1e-300), 1.0 / (dd + 1));
            if (Rstar > R0 && h(Rstar) < 0.0) return false;
        }
        return true;
    };
    double lo = 2.0 * b.K;
    if (holds_from(lo)) return lo;
    double hi = lo;
    while (!holds_from(hi)) hi *= 2.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (holds_from(mid) ? hi : lo) = mid;
    }
    return hi;
}

/// First step count s <= horizon with |Q_{m,m+s}(z)| > R_0, or nullopt
/// ("bounded at this horizon").
inline std::optional<int> escape_time(const SequenceSpec& spec, int m, cplx z,
                                      double R0, int horizon) {
    cplx w = z;
    for (int s = 0; s <= horizon; ++s) {
        if (std::abs(w) > R0) return s;
        const PolySpec p = spec.polynomial_at(m + s + 1);
        w = p.eval(w);
        if (std::abs(w) > kOverflowCap) return s + 1;
    }
    return std::nullopt;
}

/// The quadratic z^2 + c as a sequence spec with bounds sized for |c| <= m_cap.
inline SequenceSpec quadratic_spec(cplx c, double m_cap = 0.0) {
    const double M = m_cap > 0.0 ? m_cap : std::max(std::abs(c), 1e-9);
    return SequenceSpec(ConstantRule{PolySpec({c, cplx(0.0), cplx(1.0)})},
                        Bounds{2, 1.0, M});
}

/// The quadratic with the period-3 superattracting critical orbit
/// 0 -> c -> c^2 + c -> 0 (root of c^3 + 2c^2 + c + 1 in the upper half
/// plane), the "rabbit".
inline cplx rabbit_c() { return {-0.12256116687665362, 0.74486176661974424}; }

} // namespace seqdyn::polyseq
