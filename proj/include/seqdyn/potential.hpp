#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "seqdyn/detail/farfield.hpp"
#include "seqdyn/detail/walker.hpp"
#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::potential {

using polyseq::PolySpec;
using polyseq::SequenceSpec;

/// Green value and Boettcher coordinate of one point of a basin at infinity.
struct PotentialResult {
    double green = 0.0;
    cplx bottcher;
    int n_escape = 0; // first time index with |orbit| > R_0
    int n_used = 0;   // truncation time of the product
    double residual = 0.0;
};

/// Default floor on the potential reachable by inverse_bottcher; rays below
/// this are the ray module's business (landing extrapolation).
inline constexpr double kMinInversePotential = 1e-4;

namespace detail {

inline void require_monic(const SequenceSpec& spec, const char* who) {
    if (!spec.is_monic(1e-12))
        throw BoundsViolation(std::string(who) +
                              ": sequence must be monic (run the conjugation first)");
}

} // namespace detail

/// G_m(z) = lim (1/D_{m,n}) log |Q_{m,n}(z)|, by incremental correction after
/// the orbit passes the escape radius. Returns nullopt when the orbit stays
/// within R_0 through the horizon (bounded or undecided).
inline std::optional<double> green(const SequenceSpec& spec, int m, cplx z,
                                   int horizon = 512) {
    detail::require_monic(spec, "green");
    const double R0 = polyseq::escape_radius(spec.bounds());
    cplx w = z;
    int n = m;
    while (std::abs(w) <= R0) {
        if (n - m >= horizon) return std::nullopt;
        ++n;
        w = spec.polynomial_at(n).eval(w);
    }
    double invD = 1.0; // 1 / D_{m,n} accumulated only past the escape step
    double t = std::log(std::abs(w));
    for (int k = n + 1; k <= m + horizon; ++k) {
        const PolySpec p = spec.polynomial_at(k);
        const double prev = std::log(std::abs(w));
        w = p.eval(w);
        invD /= p.degree();
        const double inc = invD * (std::log(std::abs(w)) - p.degree() * prev);
        t += inc;
        if (std::abs(w) > polyseq::kOverflowCap) break;
        if (std::abs(inc) < 1e-14) break;
    }
    // t accumulated relative to D_{m,n} = 1 at the escape step
    double headD = 1.0;
    for (int k = m + 1; k <= n; ++k) headD *= spec.polynomial_at(k).degree();
    return t / headD;
}

/// phi_m(z). Points beyond R_0 use the principal-branch product directly; for
/// escaping points inside the R_0 disk the branch is carried along an
/// arc-then-radial path from the far positive real axis, re-based across
/// escape-level increments via the functional equation, with a pi/4 guard on
/// the tracked argument (BranchLoss when subdivision cannot satisfy it).
inline std::optional<PotentialResult> bottcher(const SequenceSpec& spec, int m, cplx z,
                                               int horizon = 512) {
    detail::require_monic(spec, "bottcher");
    const double R0 = polyseq::escape_radius(spec.bounds());

    auto pack = [&](const detail::FarEval& fe, cplx log_phi, int n_escape) {
        PotentialResult r;
        r.green = log_phi.real();
        r.bottcher = std::exp(log_phi);
        r.n_escape = n_escape;
        r.n_used = fe.n_used;
        r.residual = fe.residual;
        return r;
    };

    if (std::abs(z) > R0) {
        const auto fe = detail::far_log_phi(spec, m, z, horizon, false);
        return pack(fe, fe.log_phi, m);
    }

    // first escape step of z itself (NotEscaped if none within the horizon)
    int n_escape = m;
    {
        cplx w = z;
        while (std::abs(w) <= R0) {
            if (n_escape - m >= horizon) return std::nullopt;
            ++n_escape;
            w = spec.polynomial_at(n_escape).eval(w);
        }
    }

    // Branch state along the path: a level n0 >= first escape level of the
    // current path point, and the unwrapped argument A of W = Q_{m,n0}(zeta).
    // Then log phi_m(zeta) = (1/D_{m,n0}) * (Re F, A + (Im F - Arg W)) with
    // F = log phi_{n0}(W): the correction Im F - Arg W is small and
    // single-valued, so A carries the whole branch.
    int n0 = m;
    double A = 0.0;          // path starts on the positive real axis
    cplx W(2.0 * R0, 0.0);   // Q_{m,n0} at the current path point

    auto orbit_to_level = [&](cplx zeta, int lvl) -> cplx {
        cplx w = zeta;
        for (int k = m + 1; k <= lvl; ++k) w = spec.polynomial_at(k).eval(w);
        return w;
    };
    // exact lift of the unwrapped argument from level n0 to n0+1:
    // arg P(W) = d * arg W + arg(1 + u), |u| <= 1/2 past R_0
    auto lift = [&]() {
        const PolySpec p = spec.polynomial_at(n0 + 1);
        const cplx Wn = p.eval(W);
        const cplx u = (Wn - std::pow(W, p.degree())) / std::pow(W, p.degree());
        A = p.degree() * A + std::arg(1.0 + u);
        W = Wn;
        ++n0;
    };

    const double r_start = 2.0 * R0;
    const cplx dir = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0, 0.0);
    const double arc_span = std::arg(dir);
    auto path_point = [&](double s) -> cplx {
        // first quarter sweeps the arc to the ray of z, the rest descends radially
        if (s <= 0.25) return r_start * std::exp(cplx(0.0, arc_span * (s / 0.25)));
        const double u = (s - 0.25) / 0.75;
        return (r_start + (std::abs(z) - r_start) * u) * dir;
    };

    double s = 0.0;
    double ds = 1.0 / 64.0;
    int stalls = 0, iters = 0;
    while (s < 1.0) {
        if (++iters > 200000)
            throw BranchLoss("pre-escape continuation exceeded its step budget");
        const double s_next = std::min(1.0, s + ds);
        const cplx zeta = path_point(s_next);
        const cplx W_next = orbit_to_level(zeta, n0);
        if (std::abs(W_next) <= R0) {
            // path point not yet escaped at this level: raise the level at the
            // current point and retry the same target
            if (n0 - m >= horizon)
                throw BranchLoss("path point does not escape within the horizon");
            lift();
            continue;
        }
        const double jump = wrap_angle(std::arg(W_next) - A);
        if (std::abs(jump) > std::numbers::pi / 4.0) {
            ds *= 0.5;
            if (++stalls > 60)
                throw BranchLoss("pre-escape continuation lost the branch near the Julia set");
            continue;
        }
        stalls = 0;
        A += jump;
        W = W_next;
        s = s_next;
        ds = std::min(ds * 1.4, 1.0 / 16.0);
    }
    while (n0 < n_escape) lift(); // keep at least the natural escape level

    const auto fe = detail::far_log_phi(spec, n0, W, horizon, false);
    double D = 1.0;
    for (int k = m + 1; k <= n0; ++k) D *= spec.polynomial_at(k).degree();
    const cplx log_phi(fe.log_phi.real() / D,
                       (A + (fe.log_phi.imag() - std::arg(W))) / D);
    auto out = pack(fe, log_phi, n_escape);
    return out;
}

/// psi_m(w) for |w| > 1: the ray point of angle arg(w) at potential log|w|,
/// reached by the same level-pullback continuation as ray tracing. The far
/// Newton uses the analytic z-derivative of the truncated product.
inline cplx inverse_bottcher(const SequenceSpec& spec, int m, cplx w, double tol = 1e-12,
                             double min_potential = kMinInversePotential) {
    detail::require_monic(spec, "inverse_bottcher");
    const double t = std::log(std::abs(w));
    if (!(t > 0.0) || t < min_potential)
        throw ContinuationStall("inverse_bottcher: potential below the workable floor");
    const rays::Angle theta = rays::Angle::from_turns(std::arg(w) / two_pi);
    try {
        rays::detail::RayWalker walk(spec, m, theta, t, std::min(tol, 1e-12));
        if (walk.potential() <= t * (1.0 + 1e-15)) return walk.point();
        double cur = walk.potential();
        while (cur > t) {
            cur = std::max(t, cur * 0.5);
            walk.descend_to(cur);
        }
        return walk.point();
    } catch (const rays::detail::WalkDiverged& e) {
        throw ContinuationStall(std::string("inverse_bottcher: ") + e.what());
    }
}

} // namespace seqdyn::potential
