#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::conjugation {

using polyseq::Bounds;
using polyseq::PolySpec;
using polyseq::SequenceSpec;

/// Scale factors of the affine conjugacy chi_m(z) = alpha_m z taking a bounded
/// sequence to a monic one:
///
///   alpha_m = prod_{n > m} (a_{d_n, n})^{1 / D_{m,n}},
///
/// truncated at `horizon` factors per product, all roots taken with one fixed
/// argument branch so that (a^{1/(d d')})^d = a^{1/d'} holds exactly.
/// tail_bound bounds |log alpha_m(truncated) - log alpha_m(full)|.
struct MonicConjugacy {
    std::vector<cplx> alphas; // scale factor at times 0..m_max
    int horizon = 0;          // factors used per product
    double tail_bound = 0.0;
    bool identity = false;    // input was already monic

    cplx alpha(int m) const {
        if (m < 0 || m >= static_cast<int>(alphas.size()))
            throw IndexBeyondHorizon("MonicConjugacy: time index out of range");
        return alphas[m];
    }

    cplx chi(int m, cplx z) const { return alpha(m) * z; }
    cplx chi_inv(int m, cplx z) const { return z / alpha(m); }
};

namespace detail {

// A ray from 0 avoided by every listed value, found among 360 one-degree
// candidates; the argument branch is then cut along that ray.
inline double avoided_ray_angle(const std::vector<cplx>& values) {
    double best_angle = 0.0, best_gap = -1.0;
    for (int k = 0; k < 360; ++k) {
        const double cand = (k + 0.5) * (two_pi / 360.0) - std::numbers::pi;
        double gap = two_pi;
        for (const cplx& v : values)
            gap = std::min(gap, std::abs(wrap_angle(std::arg(v) - cand)));
        if (gap > best_gap) {
            best_gap = gap;
            best_angle = cand;
        }
    }
    if (best_gap < 1e-6)
        throw BranchObstruction(
            "leading coefficients surround the origin; no avoided ray among "
            "360 one-degree candidates");
    return best_angle;
}

// arg in (cut, cut + 2pi)
inline double branch_arg(cplx v, double cut) {
    double a = std::arg(v);
    while (a <= cut) a += two_pi;
    while (a > cut + two_pi) a -= two_pi;
    return a;
}

} // namespace detail

/// Compute the monic-rescaling conjugacy for times 0..m_max. The product
/// horizon is extended beyond `horizon` if needed to meet `tol` on the
/// truncation tail.
inline MonicConjugacy monic_rescale(const SequenceSpec& spec, int m_max,
                                    int horizon, double tol = 1e-12) {
    // Already monic: identity conjugacy, no branch machinery.
    if (spec.is_monic(1e-14)) {
        MonicConjugacy out;
        out.alphas.assign(m_max + 1, cplx(1.0, 0.0));
        out.horizon = 0;
        out.tail_bound = 0.0;
        out.identity = true;
        return out;
    }

    const Bounds& b = spec.bounds();
    // Tail of the exponent mass sum_{n>H} 1/D_{m,n} is at most 1/D_{m,H} <= 2^-H;
    // each dropped factor contributes at most log K + pi to |log alpha|.
    const double per_factor = std::log(b.K) + std::numbers::pi;
    int H = std::max(horizon, 4);
    while (std::pow(2.0, -H) * per_factor > tol && H < 4000) ++H;

    std::vector<PolySpec> polys;
    polys.reserve(m_max + H + 1);
    for (int n = 1; n <= m_max + H; ++n) polys.push_back(spec.polynomial_at(n));

    std::vector<cplx> leads;
    leads.reserve(polys.size());
    for (const auto& p : polys) leads.push_back(p.lead());
    const double cut = detail::avoided_ray_angle(leads);

    MonicConjugacy out;
    out.horizon = H;
    out.alphas.resize(m_max + 1);
    double worst_tail = 0.0;
    for (int m = 0; m <= m_max; ++m) {
        cplx log_alpha(0.0, 0.0);
        double invD = 1.0;
        for (int n = m + 1; n <= m + H; ++n) {
            const PolySpec& p = polys[n - 1];
            invD /= p.degree();
            const cplx lead = p.lead();
            log_alpha += invD * cplx(std::log(std::abs(lead)),
                                     detail::branch_arg(lead, cut));
        }
        out.alphas[m] = std::exp(log_alpha);
        worst_tail = std::max(worst_tail, invD * per_factor);
    }
    out.tail_bound = worst_tail;
    return out;
}

namespace detail {

inline PolySpec conjugate_poly(const PolySpec& p, cplx alpha_m, cplx alpha_prev) {
    std::vector<cplx> c = p.coeffs();
    cplx scale(1.0, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j] *= alpha_m * scale;
        scale /= alpha_prev;
    }
    return PolySpec(std::move(c));
}

inline Bounds conjugated_bounds(const Bounds& b) {
    // |alpha_m a_j / alpha_{m-1}^j| <= K * M * K^j <= K^2 M K^d; leads land
    // within roundoff of 1.
    Bounds nb;
    nb.d = b.d;
    nb.K = 1.0 + 1e-9;
    nb.M = std::max(b.M, 1.0) * b.K * b.K * std::pow(std::max(b.K, 1.0), b.d);
    return nb;
}

} // namespace detail

/// The conjugated sequence P~_m = chi_m . P_m . chi_{m-1}^{-1}, monic up to
/// roundoff. Constant, periodic and prefix+tail rules are materialized into
/// the same rule shape (the scale factors inherit the rule's eventual
/// periodicity); seeded rules produce a horizon-limited conjugated view that
/// raises IndexBeyondHorizon past conj.alphas.
inline SequenceSpec conjugate_sequence(const SequenceSpec& spec,
                                       const MonicConjugacy& conj) {
    using namespace polyseq;
    if (conj.alphas.empty())
        throw IndexBeyondHorizon("conjugate_sequence: empty conjugacy");
    const Bounds nb = conj.identity ? spec.bounds() : detail::conjugated_bounds(spec.bounds());

    if (const auto* cr = std::get_if<ConstantRule>(&spec.rule())) {
        const cplx a = conj.alpha(0);
        return SequenceSpec(ConstantRule{detail::conjugate_poly(cr->poly, a, a)}, nb);
    }
    if (const auto* pr = std::get_if<PeriodicRule>(&spec.rule())) {
        const int p = static_cast<int>(pr->polys.size());
        if (static_cast<int>(conj.alphas.size()) < p + 1)
            throw IndexBeyondHorizon("conjugate_sequence: need alphas through one period");
        // alpha is exactly p-periodic for a periodic rule (relative-horizon
        // products), so one materialized period is the whole sequence.
        std::vector<PolySpec> out;
        out.reserve(p);
        for (int m = 1; m <= p; ++m)
            out.push_back(detail::conjugate_poly(pr->polys[m - 1], conj.alpha(m),
                                                 conj.alpha(m - 1)));
        return SequenceSpec(PeriodicRule{std::move(out)}, nb);
    }
    if (const auto* pt = std::get_if<PrefixThenTailRule>(&spec.rule())) {
        const int len = static_cast<int>(pt->prefix.size());
        if (static_cast<int>(conj.alphas.size()) < len + 1)
            throw IndexBeyondHorizon("conjugate_sequence: alphas do not cover the prefix");
        std::vector<PolySpec> prefix;
        prefix.reserve(len);
        for (int m = 1; m <= len; ++m)
            prefix.push_back(detail::conjugate_poly(pt->prefix[m - 1], conj.alpha(m),
                                                    conj.alpha(m - 1)));
        // The tail sees only tail coefficients, so its scale factors are the
        // alphas at and beyond the prefix end.
        SequenceSpec tail_spec(pt->tail.rule.index() == 0
                                   ? Rule(std::get<ConstantRule>(pt->tail.rule))
                                   : Rule(std::get<PeriodicRule>(pt->tail.rule)),
                               spec.bounds());
        MonicConjugacy tail_conj;
        tail_conj.horizon = conj.horizon;
        tail_conj.tail_bound = conj.tail_bound;
        tail_conj.identity = conj.identity;
        const int tail_period = pt->tail.rule.index() == 0
                                    ? 1
                                    : static_cast<int>(std::get<PeriodicRule>(pt->tail.rule).polys.size());
        if (static_cast<int>(conj.alphas.size()) < len + tail_period + 1)
            throw IndexBeyondHorizon("conjugate_sequence: alphas do not cover one tail period");
        for (int k = 0; k <= tail_period; ++k)
            tail_conj.alphas.push_back(conj.alpha(len + k));
        SequenceSpec tail_out = conjugate_sequence(tail_spec, tail_conj);
        TailRule new_tail;
        if (const auto* tc = std::get_if<ConstantRule>(&tail_out.rule()))
            new_tail.rule = *tc;
        else
            new_tail.rule = std::get<PeriodicRule>(tail_out.rule());
        return SequenceSpec(PrefixThenTailRule{std::move(prefix), std::move(new_tail)}, nb);
    }
    // Seeded (or already conjugated) rules: horizon-limited view.
    ConjugatedRule view;
    view.base = std::make_shared<SequenceSpec>(spec);
    view.alphas = conj.alphas;
    return SequenceSpec(std::move(view), nb);
}

} // namespace seqdyn::conjugation
