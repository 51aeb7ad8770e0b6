#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "seqdyn/angle.hpp"
#include "seqdyn/detail/walker.hpp"
#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::rays {

using polyseq::SequenceSpec;

struct RayPoint {
    cplx z;
    double potential = 0.0;
    double angle = 0.0; // turns
};

enum class RayStatus { Landed, Truncated, Diverged };

/// A descending-potential polyline along R_{theta,m} with a Cauchy-tail
/// landing estimate when the gap decay is geometric.
struct RayTrace {
    int m = 0;
    Angle theta;
    std::vector<RayPoint> points; // strictly decreasing potential
    std::optional<cplx> landing;
    double landing_radius = 0.0;
    RayStatus status = RayStatus::Truncated;

    cplx end() const { return points.back().z; }
};

struct TraceParams {
    double t_start = 0.0; // 0: use log(2 R_0)
    double t_min = 1e-5;
    double shrink = 0.65;
    double far_tol = 1e-13;
};

/// Deep schedule for landing-accuracy work: pullback continuation is
/// backward-stable, so the potential can descend far below double "geometry"
/// scales and the landing extrapolation becomes sharp.
inline TraceParams landing_params(double t_min = 1e-44) {
    return TraceParams{0.0, t_min, 0.5, 1e-13};
}

namespace detail {

// Geometric tail extrapolation from the last gaps: landing ~ z_K + g rho/(1-rho).
struct TailEstimate {
    bool geometric = false;
    cplx landing;
    double radius = 0.0;
};

inline TailEstimate extrapolate_at(const std::vector<RayPoint>& pts, std::size_t n) {
    TailEstimate est;
    if (n < 8 || n > pts.size()) return est;
    const cplx last_gap = pts[n - 1].z - pts[n - 2].z;
    const double scale = 1.0 + std::abs(pts[n - 1].z);
    if (std::abs(last_gap) < 1e-14 * scale) {
        est.geometric = true;
        est.landing = pts[n - 1].z;
        est.radius = 1e-13 * scale;
        return est;
    }
    cplx rho_sum(0.0, 0.0);
    int cnt = 0;
    for (std::size_t i = n - 6; i + 1 < n; ++i) {
        const cplx g0 = pts[i].z - pts[i - 1].z;
        const cplx g1 = pts[i + 1].z - pts[i].z;
        if (std::abs(g0) < 1e-300) return est;
        rho_sum += g1 / g0;
        ++cnt;
    }
    const cplx rho = rho_sum / static_cast<double>(cnt);
    if (std::abs(rho) >= 0.985) return est;
    est.geometric = true;
    est.landing = pts[n - 1].z + last_gap * rho / (1.0 - rho);
    return est;
}

inline TailEstimate extrapolate_tail(const std::vector<RayPoint>& pts) {
    TailEstimate est = extrapolate_at(pts, pts.size());
    if (!est.geometric) return est;
    // Cauchy-tail radius: remaining path length to the estimate, plus the
    // drift of the estimate over the last few schedule steps
    const double tail = std::abs(est.landing - pts.back().z);
    double drift = 0.0;
    const TailEstimate back = extrapolate_at(pts, pts.size() - 4);
    if (back.geometric) drift = 2.0 * std::abs(est.landing - back.landing);
    est.radius = tail + drift + 1e-13 * (1.0 + std::abs(est.landing));
    return est;
}

} // namespace detail

/// Trace R_{theta,m} from t_start down to t_min on the geometric schedule
/// t_k = t_start * shrink^k. Diverged status when the walker exhausts its
/// step subdivisions (non-hyperbolic or disconnected configurations).
inline RayTrace trace_ray(const SequenceSpec& spec, int m, Angle theta,
                          const TraceParams& prm = {}) {
    if (!spec.is_monic(1e-12))
        throw BoundsViolation("trace_ray: sequence must be monic");
    RayTrace tr;
    tr.m = m;
    tr.theta = theta;
    try {
        detail::RayWalker walk(spec, m, theta,
                               prm.t_start > 0.0 ? prm.t_start : 0.0, prm.far_tol);
        double t = walk.potential();
        tr.points.push_back({walk.point(), t, theta.turns()});
        bool converged_early = false;
        while (t > prm.t_min) {
            t *= prm.shrink;
            const cplx z = walk.descend_to(t);
            tr.points.push_back({z, t, theta.turns()});
            const std::size_t n = tr.points.size();
            if (n > 4 && std::abs(tr.points[n - 1].z - tr.points[n - 2].z) <
                             1e-14 * (1.0 + std::abs(z))) {
                converged_early = true;
                break;
            }
        }
        const auto est = detail::extrapolate_tail(tr.points);
        if (converged_early || est.geometric) {
            tr.status = RayStatus::Landed;
            tr.landing = est.geometric ? est.landing : tr.points.back().z;
            tr.landing_radius = est.geometric ? est.radius
                                              : 1e-13 * (1.0 + std::abs(*tr.landing));
        } else {
            tr.status = RayStatus::Truncated;
        }
    } catch (const detail::WalkDiverged&) {
        tr.status = RayStatus::Diverged;
    }
    return tr;
}

/// D_{m,n} * theta mod 1.
inline Angle pushforward_angle(const SequenceSpec& spec, int m, int n, Angle theta) {
    double dval = 1.0;
    std::uint64_t dmod = theta.exact() ? 1 % theta.den() : 0;
    for (int k = m + 1; k <= n; ++k) {
        const int d = spec.polynomial_at(k).degree();
        dval *= d;
        if (theta.exact()) dmod = (dmod * static_cast<std::uint64_t>(d)) % theta.den();
    }
    return theta.pushforward(dmod, dval);
}

/// Partition of angles by common landing point: single linkage at
/// tol + combined landing radii, with a diameter guard at 3 tol.
inline std::vector<std::vector<std::size_t>> co_landing_groups(
    const std::vector<RayTrace>& traces, double tol) {
    std::vector<std::size_t> unlanded;
    for (std::size_t i = 0; i < traces.size(); ++i)
        if (traces[i].status != RayStatus::Landed) unlanded.push_back(i);
    if (!unlanded.empty()) {
        std::string msg = "co_landing_groups: unlanded angles:";
        for (auto i : unlanded) msg += " " + traces[i].theta.str();
        throw UnlandedRay(msg);
    }
    // union-find single linkage
    std::vector<std::size_t> parent(traces.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < traces.size(); ++i)
        for (std::size_t j = i + 1; j < traces.size(); ++j) {
            const double link = tol + traces[i].landing_radius + traces[j].landing_radius;
            if (std::abs(*traces[i].landing - *traces[j].landing) <= link)
                parent[find(i)] = find(j);
        }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> slot(traces.size(), -1);
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    for (const auto& g : groups) {
        double diam = 0.0;
        for (std::size_t a : g)
            for (std::size_t b : g)
                diam = std::max(diam, std::abs(*traces[a].landing - *traces[b].landing));
        if (diam > 3.0 * tol)
            throw ClusterDiameterExceeded(
                "co_landing_groups: cluster diameter " + std::to_string(diam) +
                " exceeds 3*tol (chaining near a pinch point?)");
    }
    return groups;
}

inline std::vector<std::vector<std::size_t>> co_landing_groups(
    const SequenceSpec& spec, int m, const std::vector<Angle>& angles, double tol,
    const TraceParams& prm = landing_params()) {
    std::vector<RayTrace> traces(angles.size());
    parallel_for(angles.size(),
                 [&](std::size_t i) { traces[i] = trace_ray(spec, m, angles[i], prm); });
    return co_landing_groups(traces, tol);
}

/// Euclidean length of the traced tail below the given potential, plus the
/// landing radius when the trace landed. Underestimates the Green-line
/// segment length, refined by the trace's shrink factor.
inline double ray_tail_length(const RayTrace& trace, double from_potential) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < trace.points.size(); ++i)
        if (trace.points[i].potential <= from_potential)
            len += std::abs(trace.points[i + 1].z - trace.points[i].z);
    if (trace.status == RayStatus::Landed) {
        len += std::abs(*trace.landing - trace.points.back().z);
        len += trace.landing_radius;
    }
    return len;
}

} // namespace seqdyn::rays
